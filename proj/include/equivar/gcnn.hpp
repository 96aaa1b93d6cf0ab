#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <vector>

namespace equivar {

enum class Padding { Periodic, Zero };

// Real image on [0, W) x [0, H), index (x, y, channel).
struct ImageZ2 {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> values;

    static ImageZ2 zeros(int width, int height, int channels);
    double& at(int x, int y, int c) { return values[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    double at(int x, int y, int c) const { return values[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
};

// Kernel over offsets u = index - origin in both axes, index (ux, uy, out, in).
// Odd sizes default to a centred origin.
struct KernelZ2 {
    int size = 1;
    int origin = 0;
    int out_channels = 1;
    int in_channels = 1;
    std::vector<double> values;

    static KernelZ2 zeros(int size, int out, int in);
    static KernelZ2 zeros(int size, int origin, int out, int in);
    double& at(int ix, int iy, int o, int i) {
        return values[((static_cast<std::size_t>(iy) * size + ix) * out_channels + o) * in_channels + i];
    }
    double at(int ix, int iy, int o, int i) const {
        return values[((static_cast<std::size_t>(iy) * size + ix) * out_channels + o) * in_channels + i];
    }
};

// out(x) = sum_u k(u) f(x + u). Periodic padding wraps; zero padding treats
// pixels outside the window as 0 and is equivariant only away from borders.
ImageZ2 z2_conv(const KernelZ2& kernel, const ImageZ2& image, Padding padding = Padding::Periodic);

// (shift f)(x) = f(x - t), periodic.
ImageZ2 translate(const ImageZ2& f, int tx, int ty);

// Quarter-turn counter-clockwise about the origin: (x, y) -> (-y, x).
std::array<int, 2> rotate_c4(int r, int x, int y);

// (g f)(x) = f(R_r^{-1}(x - t)) on a square periodic window.
ImageZ2 act_c4(const ImageZ2& f, int r, int tx, int ty);

// Feature on C4 x window, index (rotation, x, y, channel).
struct P4Feature {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<double> values;

    static P4Feature zeros(int width, int height, int channels);
    double& at(int r, int x, int y, int c) {
        return values[((static_cast<std::size_t>(r) * height + y) * width + x) * channels + c];
    }
    double at(int r, int x, int y, int c) const {
        return values[((static_cast<std::size_t>(r) * height + y) * width + x) * channels + c];
    }
};

// (g f)(s, x) = f(s - r, R_r^{-1}(x - t)).
P4Feature act_c4(const P4Feature& f, int r, int tx, int ty);

// Kernel on C4 x offsets, index (s, ux, uy, out, in).
struct GroupKernel {
    int size = 1;
    int origin = 0;
    int out_channels = 1;
    int in_channels = 1;
    std::vector<double> values;

    static GroupKernel zeros(int size, int origin, int out, int in);
    double& at(int s, int ix, int iy, int o, int i) {
        return values[(((static_cast<std::size_t>(s) * size + iy) * size + ix) * out_channels + o) * in_channels + i];
    }
    double at(int s, int ix, int iy, int o, int i) const {
        return values[(((static_cast<std::size_t>(s) * size + iy) * size + ix) * out_channels + o) * in_channels + i];
    }
};

// out(r, x) = sum_u k(u) f(x + R_r u), periodic square window.
P4Feature lifting_conv(const KernelZ2& kernel, const ImageZ2& image);
// out(r, x) = sum_{s, u} k(s, u) f(r + s, x + R_r u).
P4Feature group_conv(const GroupKernel& kernel, const P4Feature& f);

// Group average (1/|G|) sum_g pi(g) A pi(g)^{-1} of a linear map on
// single-channel P4 features of a square periodic window (flattened in
// P4Feature storage order).
Eigen::MatrixXd group_average(const Eigen::MatrixXd& A, int width);

// Recovers a full-support group kernel from an equivariant linear map by
// applying it to the delta at the identity.
GroupKernel recover_group_kernel(const std::function<P4Feature(const P4Feature&)>& map, int width);

// conv -> relu -> conv -> per-pixel softmax over channels.
ImageZ2 segmentation_pipeline(const ImageZ2& image, const KernelZ2& first, const KernelZ2& second,
                              Padding padding = Padding::Periodic);

// Dense detections. Plain records are (x, y, w, h, c); rotating records hold
// an anchor vector a, two box vectors v1, v2 and class probabilities p.
struct DetectionField {
    int width = 0;
    int height = 0;
    bool rotating = false;
    int classes = 0;
    std::vector<std::vector<double>> records;  // row-major pixels

    std::vector<double>& at(int x, int y) { return records[static_cast<std::size_t>(y) * width + x]; }
    const std::vector<double>& at(int x, int y) const { return records[static_cast<std::size_t>(y) * width + x]; }
};

// 2x2 matrix [[cos, sin], [-sin, cos]] at a multiple of 90 degrees, exact.
Eigen::Matrix2d so2_row_rotation(int quarter_turns);

// Translation: records move with the pixels and anchors shift by t.
DetectionField translate_detections(const DetectionField& f, int tx, int ty);
// Rotation by quarter turns with so2_row_rotation applied to pixel positions
// (periodic, square) and to every vector of a rotating record.
DetectionField rotate_detections(const DetectionField& f, int quarter_turns);
// Rotation first, then translation. Plain records accept only quarter_turns = 0.
DetectionField detection_head_transform(const DetectionField& f, int quarter_turns, int tx, int ty);

}  // namespace equivar
