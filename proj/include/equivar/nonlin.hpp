#pragma once

#include "equivar/gcnn.hpp"
#include "equivar/grids.hpp"
#include "equivar/repr.hpp"

#include <array>
#include <functional>
#include <vector>

namespace equivar {

// Applies a scalar function to every value; commutes with any relabelling of
// the domain.
ImageZ2 pointwise(const std::function<double(double)>& eta, const ImageZ2& f);
P4Feature pointwise(const std::function<double(double)>& eta, const P4Feature& f);
ImageZ2 relu(const ImageZ2& f);
P4Feature relu(const P4Feature& f);
// Per-pixel softmax over channels (max-shifted).
ImageZ2 softmax_channels(const ImageZ2& f);

// Each irreducible block b of every point is scaled by alpha(||b||).
PointFeatures norm_nonlinearity(const std::function<double(double)>& alpha, const PointFeatures& f,
                                const FeatureType& type);
// Each block scaled by sigmoid(gate), gates has one real value per point and
// block (dim = type.blocks().size()).
PointFeatures gated_nonlinearity(const PointFeatures& gates, const PointFeatures& f, const FeatureType& type);

// Output of the vector-field nonlinearity: two channels (x, y) per input
// channel, plus every (x, y, channel) whose maximum over rotations was not
// unique. Ties resolve to the smallest rotation index.
struct VectorFieldResult {
    ImageZ2 field;
    std::vector<std::array<int, 3>> ties;
    bool tie_detected() const { return !ties.empty(); }
};

// max_k f(k, x) * rho2(argmax) v0 with rho2 the counter-clockwise rotation
// by quarter turns, held as exact integers.
VectorFieldResult vector_field_nonlinearity(const P4Feature& f, const std::array<double, 2>& v0 = {1.0, 0.0});

// (g v)(x) = rho2(r) v(R_r^{-1}(x - t)) on pairs of channels.
ImageZ2 act_c4_vector(const ImageZ2& v, int r, int tx, int ty);

enum class PoolMode { Max, Mean };
// Pools over the rotation index, leaving a function on the translations.
ImageZ2 subgroup_pool(const P4Feature& f, PoolMode mode);

// Pointwise relu on grid samples of a random real signal of bandlimit L
// (white spectrum), sampled on the grid of bandlimit oversample * L and
// projected back to bandlimit L. Returns the relative coefficient-norm
// difference between relu(rotated f) and rotated relu(f). Never zero, since
// relu leaves the bandlimit and the grid aliases the tail: at L = 16 about
// 0.14 on the native grid, 1e-2 at oversample 2, 2e-3 at oversample 4.
double relu_s2_equivariance_residual(int L, const EulerZYZ& g, int oversample = 4, unsigned seed = 3);

}  // namespace equivar
