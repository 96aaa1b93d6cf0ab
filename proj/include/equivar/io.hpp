#pragma once

#include "equivar/gcnn.hpp"
#include "equivar/grids.hpp"
#include "equivar/spectral_conv.hpp"

#include <iosfwd>
#include <string>

namespace equivar {

// Every reader throws FormatError on malformed input. Numbers are written with
// 17 significant digits so a write/read cycle is exact.

// CSV samples, one row per value: channel,j,k,re,im (sphere) or
// channel,b,a,c,re,im (rotation group), with a header row. The grid must be
// complete for the given bandlimit.
void write_s2_samples_csv(const S2Samples& s, std::ostream& out);
S2Samples read_s2_samples_csv(std::istream& in, int bandlimit);
void write_so3_samples_csv(const SO3Samples& s, std::ostream& out);
SO3Samples read_so3_samples_csv(std::istream& in, int bandlimit);

// {"domain": "s2"|"so3", "bandlimit", "channels", "real_valued",
//  "coeffs": [[re, im], ...]} in storage order.
std::string s2_coeffs_to_json(const SpectralS2Signal& s);
std::string so3_coeffs_to_json(const SpectralSO3Signal& s);
SpectralS2Signal s2_coeffs_from_json(const std::string& text);
SpectralSO3Signal so3_coeffs_from_json(const std::string& text);

// {"domain": "s2"|"so3", "bandlimit", "out_channels", "in_channels", "coeffs"}.
std::string kernel_s2_to_json(const KernelS2& k);
std::string kernel_so3_to_json(const KernelSO3& k);
KernelS2 kernel_s2_from_json(const std::string& text);
KernelSO3 kernel_so3_from_json(const std::string& text);

// ASCII PGM (P2, one channel) or PPM (P3, three channels); values scaled by
// 1 / maxval on read and clamped to [0, 1] then scaled on write.
ImageZ2 read_pnm(std::istream& in);
void write_pnm(const ImageZ2& image, std::ostream& out, int maxval = 255);
// One row of comma-separated values per image row; single channel.
ImageZ2 read_image_csv(std::istream& in);
void write_image_csv(const ImageZ2& image, std::ostream& out);

// One JSON object per pixel: {"x", "y", "record": [...]}; a header line
// {"width", "height", "rotating", "classes"} comes first.
void write_detections(const DetectionField& f, std::ostream& out);
DetectionField read_detections(std::istream& in);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& text);

}  // namespace equivar
