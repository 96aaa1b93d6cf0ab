#include "equivar/nonlin.hpp"

#include "equivar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace equivar {

ImageZ2 pointwise(const std::function<double(double)>& eta, const ImageZ2& f) {
    ImageZ2 out = f;
    for (auto& v : out.values) v = eta(v);
    return out;
}

P4Feature pointwise(const std::function<double(double)>& eta, const P4Feature& f) {
    P4Feature out = f;
    for (auto& v : out.values) v = eta(v);
    return out;
}

ImageZ2 relu(const ImageZ2& f) {
    return pointwise([](double v) { return v > 0.0 ? v : 0.0; }, f);
}

P4Feature relu(const P4Feature& f) {
    return pointwise([](double v) { return v > 0.0 ? v : 0.0; }, f);
}

ImageZ2 softmax_channels(const ImageZ2& f) {
    ImageZ2 out = f;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double top = f.at(x, y, 0);
            for (int c = 1; c < f.channels; ++c) top = std::max(top, f.at(x, y, c));
            double sum = 0.0;
            for (int c = 0; c < f.channels; ++c) sum += out.at(x, y, c) = std::exp(f.at(x, y, c) - top);
            for (int c = 0; c < f.channels; ++c) out.at(x, y, c) /= sum;
        }
    return out;
}

namespace {

void require_dim(const PointFeatures& f, const FeatureType& type, const char* what) {
    if (f.dim != type.dimension())
        throw ShapeMismatch(std::string(what) + ": features have dimension " + std::to_string(f.dim) +
                            ", type needs " + std::to_string(type.dimension()));
}

}  // namespace

PointFeatures norm_nonlinearity(const std::function<double(double)>& alpha, const PointFeatures& f,
                                const FeatureType& type) {
    require_dim(f, type, "norm_nonlinearity");
    PointFeatures out = f;
    const auto blocks = type.blocks();
    for (int p = 0; p < f.points; ++p)
        for (const auto& b : blocks) {
            const int n = 2 * b.degree + 1;
            double sq = 0.0;
            for (int i = 0; i < n; ++i) sq += std::norm(f.at(p, b.offset + i));
            const double s = alpha(std::sqrt(sq));
            for (int i = 0; i < n; ++i) out.at(p, b.offset + i) *= s;
        }
    return out;
}

PointFeatures gated_nonlinearity(const PointFeatures& gates, const PointFeatures& f, const FeatureType& type) {
    require_dim(f, type, "gated_nonlinearity");
    const auto blocks = type.blocks();
    if (gates.points != f.points || gates.dim != static_cast<int>(blocks.size()))
        throw ShapeMismatch("gated_nonlinearity: need one gate per point and block");
    PointFeatures out = f;
    for (int p = 0; p < f.points; ++p)
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            const double s = 1.0 / (1.0 + std::exp(-gates.at(p, static_cast<int>(k)).real()));
            for (int i = 0; i < 2 * blocks[k].degree + 1; ++i) out.at(p, blocks[k].offset + i) *= s;
        }
    return out;
}

namespace {

// cos and sin of r quarter turns.
constexpr int kCos[4] = {1, 0, -1, 0};
constexpr int kSin[4] = {0, 1, 0, -1};

int wrap(int v, int n) {
    const int r = v % n;
    return r < 0 ? r + n : r;
}

}  // namespace

VectorFieldResult vector_field_nonlinearity(const P4Feature& f, const std::array<double, 2>& v0) {
    VectorFieldResult res{ImageZ2::zeros(f.width, f.height, 2 * f.channels), {}};
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            for (int c = 0; c < f.channels; ++c) {
                int best = 0;
                bool tie = false;
                for (int k = 1; k < 4; ++k) {
                    const double v = f.at(k, x, y, c), top = f.at(best, x, y, c);
                    if (v > top) {
                        best = k;
                        tie = false;
                    } else if (v == top) {
                        tie = true;
                    }
                }
                if (tie) res.ties.push_back({x, y, c});
                const double m = f.at(best, x, y, c);
                res.field.at(x, y, 2 * c) = m * (kCos[best] * v0[0] - kSin[best] * v0[1]);
                res.field.at(x, y, 2 * c + 1) = m * (kSin[best] * v0[0] + kCos[best] * v0[1]);
            }
    return res;
}

ImageZ2 act_c4_vector(const ImageZ2& v, int r, int tx, int ty) {
    if (v.channels % 2) throw ShapeMismatch("act_c4_vector: channels must pair into 2-vectors");
    ImageZ2 moved = act_c4(v, r, tx, ty);
    const int k = wrap(r, 4);
    for (int y = 0; y < v.height; ++y)
        for (int x = 0; x < v.width; ++x)
            for (int c = 0; c < v.channels; c += 2) {
                const double a = moved.at(x, y, c), b = moved.at(x, y, c + 1);
                moved.at(x, y, c) = kCos[k] * a - kSin[k] * b;
                moved.at(x, y, c + 1) = kSin[k] * a + kCos[k] * b;
            }
    return moved;
}

ImageZ2 subgroup_pool(const P4Feature& f, PoolMode mode) {
    auto out = ImageZ2::zeros(f.width, f.height, f.channels);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            for (int c = 0; c < f.channels; ++c) {
                double acc = mode == PoolMode::Max ? f.at(0, x, y, c) : 0.0;
                for (int k = 0; k < 4; ++k)
                    acc = mode == PoolMode::Max ? std::max(acc, f.at(k, x, y, c)) : acc + f.at(k, x, y, c);
                out.at(x, y, c) = mode == PoolMode::Max ? acc : acc / 4.0;
            }
    return out;
}

namespace {

SpectralS2Signal relu_on_grid(const SpectralS2Signal& f, const S2Grid& grid) {
    auto padded = SpectralS2Signal::zeros(grid.bandlimit(), 1);
    padded.real_valued = true;
    for (int l = 0; l < f.bandlimit; ++l)
        for (int m = -l; m <= l; ++m) padded.at(0, l, m) = f.at(0, l, m);
    auto samples = s2_synthesis(padded, grid);
    for (auto& v : samples.values) v = std::max(v.real(), 0.0);
    const auto full = s2_analysis(grid, samples);
    auto out = SpectralS2Signal::zeros(f.bandlimit, 1);
    out.real_valued = true;
    for (int l = 0; l < f.bandlimit; ++l)
        for (int m = -l; m <= l; ++m) out.at(0, l, m) = full.at(0, l, m);
    return out;
}

}  // namespace

double relu_s2_equivariance_residual(int L, const EulerZYZ& g, int oversample, unsigned seed) {
    if (L < 1 || oversample < 1) throw std::invalid_argument("relu_s2_equivariance_residual: need L, oversample >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    auto f = SpectralS2Signal::zeros(L, 1);
    f.real_valued = true;
    for (int l = 0; l < L; ++l)
        for (int m = 0; m <= l; ++m) {
            const cd v(n(rng), m == 0 ? 0.0 : n(rng));
            f.at(0, l, m) = v;
            if (m > 0) f.at(0, l, -m) = ((m % 2) ? -1.0 : 1.0) * std::conj(v);
        }
    const S2Grid grid(oversample * L);
    const auto a = relu_on_grid(rotate_spectral_s2(f, g), grid);
    const auto b = rotate_spectral_s2(relu_on_grid(f, grid), g);
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) {
        diff += std::norm(a.coeffs[i] - b.coeffs[i]);
        ref += std::norm(b.coeffs[i]);
    }
    return std::sqrt(diff / ref);
}

}  // namespace equivar
