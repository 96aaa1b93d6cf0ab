#include "equivar/audit.hpp"

#include "equivar/errors.hpp"
#include "equivar/gcnn.hpp"
#include "equivar/grids.hpp"
#include "equivar/harmonics.hpp"
#include "equivar/mesh.hpp"
#include "equivar/nonlin.hpp"
#include "equivar/repr.hpp"
#include "equivar/spectral_conv.hpp"
#include "equivar/steerable.hpp"

#include <json.hpp>
#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace equivar {

namespace {

using Rng = std::mt19937_64;

// ---------------------------------------------------------------------------
// Random inputs and comparisons

cd rand_complex(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return {n(rng), n(rng)};
}

double rand_uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

EulerZYZ rand_rotation(Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return rotation_from_matrix(q.toRotationMatrix());
}

std::vector<EulerZYZ> rand_rotations(int count, Rng& rng) {
    std::vector<EulerZYZ> out;
    for (int i = 0; i < count; ++i) out.push_back(rand_rotation(rng));
    return out;
}

Eigen::Vector3d unit(double theta, double phi) {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

void angles_of(const Eigen::Vector3d& v, double& theta, double& phi) {
    const Eigen::Vector3d u = v.normalized();
    theta = std::acos(std::clamp(u.z(), -1.0, 1.0));
    phi = std::atan2(u.y(), u.x());
}

SpectralS2Signal rand_s2(int L, int C, Rng& rng, bool real_valued) {
    auto s = SpectralS2Signal::zeros(L, C);
    s.real_valued = real_valued;
    for (int c = 0; c < C; ++c)
        for (int l = 0; l < L; ++l)
            for (int m = 0; m <= l; ++m) {
                const cd v = rand_complex(rng);
                if (!real_valued) {
                    s.at(c, l, m) = v;
                    s.at(c, l, -m) = rand_complex(rng);
                } else if (m == 0) {
                    s.at(c, l, 0) = v.real();
                } else {
                    s.at(c, l, m) = v;
                    s.at(c, l, -m) = ((m % 2) ? -1.0 : 1.0) * std::conj(v);
                }
            }
    return s;
}

SpectralSO3Signal rand_so3(int L, int C, Rng& rng, bool real_valued) {
    auto s = SpectralSO3Signal::zeros(L, C);
    for (auto& v : s.coeffs) v = rand_complex(rng);
    if (!real_valued) return s;
    const auto orig = s;
    s.real_valued = true;
    for (int c = 0; c < C; ++c)
        for (int l = 0; l < L; ++l)
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) {
                    const double sgn = (std::abs(m - n) % 2) ? -1.0 : 1.0;
                    s.at(c, l, m, n) = 0.5 * (orig.at(c, l, m, n) + sgn * std::conj(orig.at(c, l, -m, -n)));
                }
    return s;
}

KernelS2 rand_kernel_s2(int L, int out, int in, Rng& rng) {
    auto k = KernelS2::zeros(L, out, in);
    for (auto& v : k.coeffs) v = rand_complex(rng);
    return k;
}

KernelSO3 rand_kernel_so3(int L, int out, int in, Rng& rng) {
    auto k = KernelSO3::zeros(L, out, in);
    for (auto& v : k.coeffs) v = rand_complex(rng);
    return k;
}

double max_abs(const std::vector<cd>& a) {
    double r = 0.0;
    for (const cd& v : a) r = std::max(r, std::abs(v));
    return r;
}

// max |a - b| / max(1, max |b|)
double rel_diff(const std::vector<cd>& a, const std::vector<cd>& b) {
    if (a.size() != b.size()) throw ShapeMismatch("compared vectors differ in length");
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
    return r / std::max(1.0, max_abs(b));
}

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
    return r;
}

SpectralSO3Signal pad(const SpectralSO3Signal& f, int L) {
    auto out = SpectralSO3Signal::zeros(L, f.channels);
    for (int c = 0; c < f.channels; ++c)
        for (int l = 0; l < std::min(L, f.bandlimit); ++l)
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) out.at(c, l, m, n) = f.at(c, l, m, n);
    return out;
}

std::vector<EulerZYZ> grid_nodes(const SO3Grid& g) {
    std::vector<EulerZYZ> out;
    for (int b = 0; b < g.side(); ++b)
        for (int a = 0; a < g.side(); ++a)
            for (int c = 0; c < g.side(); ++c) out.push_back(g.node(a, b, c));
    return out;
}

// Values laid out (grid node in grid_nodes order, channel).
SpectralSO3Signal analyse_values(const std::vector<cd>& values, int channels, const SO3Grid& g) {
    auto s = SO3Samples::zeros(g.bandlimit(), channels);
    int r = 0;
    for (int b = 0; b < g.side(); ++b)
        for (int a = 0; a < g.side(); ++a)
            for (int c = 0; c < g.side(); ++c, ++r)
                for (int o = 0; o < channels; ++o) s.at(o, b, a, c) = values[r * channels + o];
    return so3_analysis(g, s);
}

double compare_at(const SpectralSO3Signal& out, const std::vector<EulerZYZ>& rots, const std::vector<cd>& oracle) {
    double err = 0.0;
    for (std::size_t r = 0; r < rots.size(); ++r) {
        const auto v = so3_evaluate(out, rots[r]);
        for (int o = 0; o < out.channels; ++o) err = std::max(err, std::abs(v[o] - oracle[r * out.channels + o]));
    }
    return err / std::max(1.0, max_abs(oracle));
}

// Negative controls pass when the measured defect is at least `bound`.
double control_ratio(double bound, double measured) {
    return measured > 0.0 ? bound / measured : std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// harmonics

constexpr int kMaxDegree = 16;

double wigner_unitarity(Rng& rng) {
    double err = 0.0;
    for (const auto& g : rand_rotations(5, rng))
        for (int l = 0; l <= kMaxDegree; ++l) {
            const CMatrix D = wigner_D(l, g);
            err = std::max(err, (D * D.adjoint() - CMatrix::Identity(2 * l + 1, 2 * l + 1)).cwiseAbs().maxCoeff());
        }
    return err;
}

double wigner_homomorphism(Rng& rng) {
    double err = 0.0;
    for (int t = 0; t < 5; ++t) {
        const auto a = rand_rotation(rng), b = rand_rotation(rng);
        const auto ab = compose(a, b);
        for (int l = 0; l <= kMaxDegree; ++l)
            err = std::max(err, (wigner_D(l, ab) - wigner_D(l, a) * wigner_D(l, b)).cwiseAbs().maxCoeff());
    }
    return err;
}

// conj(D_mn) = (-1)^(m - n) D_{-m,-n}
double wigner_conjugation(Rng& rng) {
    double err = 0.0;
    for (const auto& g : rand_rotations(5, rng))
        for (int l = 0; l <= kMaxDegree; ++l) {
            const CMatrix D = wigner_D(l, g);
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) {
                    const double sgn = (std::abs(m - n) % 2) ? -1.0 : 1.0;
                    err = std::max(err, std::abs(std::conj(D(m + l, n + l)) - sgn * D(-m + l, -n + l)));
                }
        }
    return err;
}

// Y_m(R x) = sum_n conj(D_mn(R)) Y_n(x)
double harmonic_rotation_rule(Rng& rng) {
    double err = 0.0;
    for (int t = 0; t < 5; ++t) {
        const auto g = rand_rotation(rng);
        const double theta = std::acos(rand_uniform(rng, -1.0, 1.0)), phi = rand_uniform(rng, 0.0, 2 * kPi);
        double th2, ph2;
        angles_of(rotation_matrix(g) * unit(theta, phi), th2, ph2);
        const auto y = sph_harm_all(kMaxDegree + 1, theta, phi);
        const auto yr = sph_harm_all(kMaxDegree + 1, th2, ph2);
        for (int l = 0; l <= kMaxDegree; ++l) {
            const CMatrix D = wigner_D(l, g);
            for (int m = -l; m <= l; ++m) {
                cd s = 0.0;
                for (int n = -l; n <= l; ++n) s += std::conj(D(m + l, n + l)) * y[l * l + n + l];
                err = std::max(err, std::abs(yr[l * l + m + l] - s));
            }
        }
    }
    return err;
}

// Y_{l,-m} = (-1)^m conj(Y_lm)
double harmonic_conjugation(Rng& rng) {
    double err = 0.0;
    for (int t = 0; t < 10; ++t) {
        const double theta = std::acos(rand_uniform(rng, -1.0, 1.0)), phi = rand_uniform(rng, 0.0, 2 * kPi);
        const auto y = sph_harm_all(kMaxDegree + 1, theta, phi);
        for (int l = 0; l <= kMaxDegree; ++l)
            for (int m = -l; m <= l; ++m) {
                const double sgn = (std::abs(m) % 2) ? -1.0 : 1.0;
                err = std::max(err, std::abs(y[l * l + l - m] - sgn * std::conj(y[l * l + l + m])));
            }
    }
    return err;
}

// Y_{l1 m1} Y_{l2 m2} expanded in Y_{J, m1 + m2} with Clebsch-Gordan weights.
double harmonic_product_rule(Rng& rng) {
    const int half = kMaxDegree / 2;
    const auto cg = CGTable::load_or_build(kMaxDegree);
    double err = 0.0;
    for (int t = 0; t < 3; ++t) {
        const double theta = std::acos(rand_uniform(rng, -1.0, 1.0)), phi = rand_uniform(rng, 0.0, 2 * kPi);
        const auto y = sph_harm_all(kMaxDegree + 1, theta, phi);
        for (int l1 = 0; l1 <= half; ++l1)
            for (int l2 = 0; l2 <= half; ++l2)
                for (int m1 = -l1; m1 <= l1; ++m1)
                    for (int m2 = -l2; m2 <= l2; ++m2) {
                        const int M = m1 + m2;
                        cd s = 0.0;
                        for (int J = std::max(std::abs(l1 - l2), std::abs(M)); J <= l1 + l2; ++J)
                            s += std::sqrt((2 * l1 + 1) * (2 * l2 + 1) / (4 * kPi * (2 * J + 1))) *
                                 cg(l1, 0, l2, 0, J) * cg(l1, m1, l2, m2, J) * y[J * J + J + M];
                        err = std::max(err, std::abs(y[l1 * l1 + l1 + m1] * y[l2 * l2 + l2 + m2] - s));
                    }
    }
    return err;
}

// sum_{m1} C^{J M}_{l1 m1 l2 M-m1} C^{J' M}_{l1 m1 l2 M-m1} = delta_{J J'}
double cg_orthogonality(Rng&) {
    const auto cg = CGTable::load_or_build(kMaxDegree);
    double err = 0.0;
#pragma omp parallel for schedule(dynamic) reduction(max : err)
    for (int l1 = 0; l1 <= kMaxDegree; ++l1)
        for (int l2 = 0; l2 <= kMaxDegree; ++l2)
            for (int M = -(l1 + l2); M <= l1 + l2; ++M) {
                const int lo = std::max(std::abs(l1 - l2), std::abs(M));
                for (int J = lo; J <= l1 + l2; ++J)
                    for (int K = J; K <= l1 + l2; ++K) {
                        double s = 0.0;
                        for (int m1 = std::max(-l1, M - l2); m1 <= std::min(l1, M + l2); ++m1)
                            s += cg(l1, m1, l2, M - m1, J) * cg(l1, m1, l2, M - m1, K);
                        err = std::max(err, std::abs(s - (J == K ? 1.0 : 0.0)));
                    }
            }
    return err;
}

// ---------------------------------------------------------------------------
// grids

double s2_round_trip(int L, Rng& rng) {
    const auto f = rand_s2(L, 2, rng, false);
    const S2Grid g(L);
    return rel_diff(s2_analysis(g, s2_synthesis(f, g)).coeffs, f.coeffs);
}

double so3_round_trip(int L, Rng& rng) {
    const auto f = rand_so3(L, 2, rng, false);
    const SO3Grid g(L);
    return rel_diff(so3_analysis(g, so3_synthesis(f, g)).coeffs, f.coeffs);
}

double s2_parseval(int L, Rng& rng) {
    const auto f = rand_s2(L, 2, rng, false);
    const S2Grid g(L);
    const double a = s2_norm_squared(g, s2_synthesis(f, g)), b = s2_coeff_norm_squared(f);
    return std::abs(a - b) / b;
}

double so3_parseval(int L, Rng& rng) {
    const auto f = rand_so3(L, 2, rng, false);
    const SO3Grid g(L);
    const double a = so3_norm_squared(g, so3_synthesis(f, g)), b = so3_coeff_norm_squared(f);
    return std::abs(a - b) / b;
}

// Coefficients of x -> f(g^-1 x) computed on samples against the spectral rotation.
double s2_rotation(int L, Rng& rng) {
    const auto f = rand_s2(L, 1, rng, false);
    const S2Grid grid(L);
    double err = 0.0;
    for (int t = 0; t < 3; ++t) {
        const auto g = rand_rotation(rng);
        const Eigen::Matrix3d Rinv = rotation_matrix(g).transpose();
        auto s = S2Samples::zeros(L, 1);
        for (int j = 0; j < grid.rings(); ++j)
            for (int k = 0; k < grid.longitudes(); ++k) {
                double th, ph;
                angles_of(Rinv * unit(grid.theta(j), grid.phi(k)), th, ph);
                s.at(0, j, k) = s2_evaluate(f, th, ph)[0];
            }
        err = std::max(err, rel_diff(s2_analysis(grid, s).coeffs, rotate_spectral_s2(f, g).coeffs));
    }
    return err;
}

double so3_rotation(int L, Rng& rng) {
    const auto f = rand_so3(L, 1, rng, false);
    const SO3Grid grid(L);
    double err = 0.0;
    for (int t = 0; t < 2; ++t) {
        const auto g = rand_rotation(rng);
        const auto ginv = inverse(g);
        auto s = SO3Samples::zeros(L, 1);
        for (int b = 0; b < grid.side(); ++b)
            for (int a = 0; a < grid.side(); ++a)
                for (int c = 0; c < grid.side(); ++c) s.at(0, b, a, c) = so3_evaluate(f, compose(ginv, grid.node(a, b, c)))[0];
        err = std::max(err, rel_diff(so3_analysis(grid, s).coeffs, rotate_spectral_so3(f, g).coeffs));
    }
    return err;
}

double s2_reference(int L, Rng& rng) {
    const auto f = rand_s2(L, 2, rng, false);
    const S2Grid g(L);
    const auto fast = s2_synthesis(f, g);
    const auto slow = reference::s2_synthesis(f, g);
    return std::max(rel_diff(fast.values, slow.values),
                    rel_diff(s2_analysis(g, fast).coeffs, reference::s2_analysis(g, fast).coeffs));
}

double so3_reference(int L, Rng& rng) {
    const auto f = rand_so3(L, 1, rng, false);
    const SO3Grid g(L);
    const auto fast = so3_synthesis(f, g);
    const auto slow = reference::so3_synthesis(f, g);
    return std::max(rel_diff(fast.values, slow.values),
                    rel_diff(so3_analysis(g, fast).coeffs, reference::so3_analysis(g, fast).coeffs));
}

// ---------------------------------------------------------------------------
// spectral_conv

constexpr int kGeneralL = 4;

FeatureType ftype(std::map<int, int> m) { return FeatureType{std::move(m)}; }

double s2_scalar_oracle(int L, Rng& rng) {
    const auto f = rand_s2(L, 2, rng, true);
    const auto k = rand_kernel_s2(L, 2, 2, rng);
    const S2Grid sg(L);
    const SO3Grid og(L);
    const auto oracle = s2_conv_scalar_spatial(k, s2_synthesis(f, sg), sg, grid_nodes(og));
    return rel_diff(s2_conv_scalar(k, f).coeffs, analyse_values(oracle, 2, og).coeffs);
}

double so3_scalar_oracle(int L, Rng& rng) {
    const auto f = rand_so3(L, 2, rng, false);
    const auto k = rand_kernel_so3(L, 2, 2, rng);
    const SO3Grid g(L);
    const auto rots = rand_rotations(6, rng);
    const auto oracle = so3_conv_scalar_spatial(k, so3_synthesis(f, g), g, rots);
    return compare_at(so3_conv_scalar(k, f), rots, oracle);
}

double s2_general_oracle(Rng& rng) {
    const int L = kGeneralL;
    const auto rho1 = Representation::fundamental();
    const auto rho2 = Representation::irreps(ftype({{0, 1}, {1, 1}}), false);
    const auto f = rand_s2(L, 3, rng, true);
    const auto k = rand_kernel_s2(L, 4, 3, rng);
    const auto out = s2_conv_general(RepSpectral::from(rho1), RepSpectral::from(rho2), k, f);
    const S2Grid sg(L);
    const SO3Grid og(out.bandlimit);
    const auto oracle = s2_conv_general_spatial(rho1, rho2, k, s2_synthesis(f, sg), sg, grid_nodes(og));
    return rel_diff(out.coeffs, analyse_values(oracle, 4, og).coeffs);
}

double so3_general_oracle(Rng& rng) {
    const int L = kGeneralL;
    const auto rho1 = Representation::fundamental();
    const auto rho2 = Representation::irreps(ftype({{0, 1}, {1, 1}}), false);
    const auto f = rand_so3(L, 3, rng, true);
    const auto k = rand_kernel_so3(L, 4, 3, rng);
    const auto out = so3_conv_general(RepSpectral::from(rho1), RepSpectral::from(rho2), k, f);
    const SO3Grid g(L + 2);
    const auto rots = rand_rotations(8, rng);
    const auto oracle = so3_conv_general_spatial(rho1, rho2, k, so3_synthesis(pad(f, L + 2), g), g, rots);
    return compare_at(out, rots, oracle);
}

const FeatureType& irrep_in() {
    static const FeatureType t = ftype({{0, 2}, {1, 1}});
    return t;
}
const FeatureType& irrep_out() {
    static const FeatureType t = ftype({{0, 1}, {1, 1}, {2, 1}});
    return t;
}

// The irrep form works in the complex basis; the general form sees the same
// kernel and signal in the real basis.
double irrep_s2_vs_general(Rng& rng) {
    const int L = kGeneralL;
    const auto &in = irrep_in(), &out = irrep_out();
    const CMatrix U1 = feature_real_basis(in), U2 = feature_real_basis(out);
    const auto k = rand_kernel_s2(L, out.dimension(), in.dimension(), rng);
    const auto f_real = rand_s2(L, in.dimension(), rng, true);
    const auto cg = CGTable::load_or_build(L + 2);
    const auto irrep = mix_channels(U2, irrep_s2_conv(out, in, k, mix_channels(U1.adjoint(), f_real), cg));
    const auto general = s2_conv_general(RepSpectral::from(Representation::irreps(in, true)),
                                         RepSpectral::from(Representation::irreps(out, true)),
                                         mix_kernel(U2, k, U1.adjoint()), f_real, cg);
    if (irrep.bandlimit != general.bandlimit) throw ShapeMismatch("bandlimits differ");
    return rel_diff(irrep.coeffs, general.coeffs);
}

double irrep_so3_vs_general(Rng& rng) {
    const int L = kGeneralL;
    const auto &in = irrep_in(), &out = irrep_out();
    const CMatrix U1 = feature_real_basis(in), U2 = feature_real_basis(out);
    const auto k = rand_kernel_so3(L, out.dimension(), in.dimension(), rng);
    const auto f_real = rand_so3(L, in.dimension(), rng, true);
    const auto cg = CGTable::load_or_build(L + 2);
    const auto irrep = mix_channels(U2, irrep_so3_conv(out, in, k, mix_channels(U1.adjoint(), f_real), cg));
    const auto general = so3_conv_general(RepSpectral::from(Representation::irreps(in, true)),
                                          RepSpectral::from(Representation::irreps(out, true)),
                                          mix_kernel(U2, k, U1.adjoint()), f_real, cg);
    if (irrep.bandlimit != general.bandlimit) throw ShapeMismatch("bandlimits differ");
    return rel_diff(irrep.coeffs, general.coeffs);
}

constexpr int kEquivarianceTrials = 10;

double s2_scalar_equivariance(int L, Rng& rng) {
    const auto f = rand_s2(L, 2, rng, true);
    const auto k = rand_kernel_s2(L, 2, 2, rng);
    const auto out = s2_conv_scalar(k, f);
    double err = 0.0;
    for (const auto& g : rand_rotations(kEquivarianceTrials, rng))
        err = std::max(err, rel_diff(s2_conv_scalar(k, rotate_spectral_s2(f, g)).coeffs,
                                     rotate_spectral_so3(out, g).coeffs));
    return err;
}

double so3_scalar_equivariance(int L, Rng& rng) {
    const auto f = rand_so3(L, 2, rng, false);
    const auto k = rand_kernel_so3(L, 2, 2, rng);
    const auto out = so3_conv_scalar(k, f);
    double err = 0.0;
    for (const auto& g : rand_rotations(kEquivarianceTrials, rng))
        err = std::max(err, rel_diff(so3_conv_scalar(k, rotate_spectral_so3(f, g)).coeffs,
                                     rotate_spectral_so3(out, g).coeffs));
    return err;
}

double s2_general_equivariance(Rng& rng) {
    const auto rho1 = Representation::fundamental();
    const auto rho2 = Representation::irreps(ftype({{0, 1}, {1, 1}}), true);
    const auto r1 = RepSpectral::from(rho1), r2 = RepSpectral::from(rho2);
    const auto f = rand_s2(kGeneralL, 3, rng, true);
    const auto k = rand_kernel_s2(kGeneralL, 4, 3, rng);
    const auto out = s2_conv_general(r1, r2, k, f);
    double err = 0.0;
    for (const auto& g : rand_rotations(kEquivarianceTrials, rng)) {
        const auto lhs = s2_conv_general(r1, r2, k, mix_channels(rho1.matrix(g), rotate_spectral_s2(f, g)));
        err = std::max(err, rel_diff(lhs.coeffs, mix_channels(rho2.matrix(g), rotate_spectral_so3(out, g)).coeffs));
    }
    return err;
}

double so3_general_equivariance(Rng& rng) {
    const auto rho1 = Representation::fundamental();
    const auto rho2 = Representation::irreps(ftype({{0, 1}, {1, 1}}), true);
    const auto r1 = RepSpectral::from(rho1), r2 = RepSpectral::from(rho2);
    const auto f = rand_so3(kGeneralL, 3, rng, true);
    const auto k = rand_kernel_so3(kGeneralL, 4, 3, rng);
    const auto out = so3_conv_general(r1, r2, k, f);
    double err = 0.0;
    for (const auto& g : rand_rotations(kEquivarianceTrials, rng)) {
        const auto lhs = so3_conv_general(r1, r2, k, mix_channels(rho1.matrix(g), rotate_spectral_so3(f, g)));
        err = std::max(err, rel_diff(lhs.coeffs, mix_channels(rho2.matrix(g), rotate_spectral_so3(out, g)).coeffs));
    }
    return err;
}

double irrep_s2_equivariance(Rng& rng) {
    const auto &in = irrep_in(), &out = irrep_out();
    const auto k = rand_kernel_s2(kGeneralL, out.dimension(), in.dimension(), rng);
    const auto f = rand_s2(kGeneralL, in.dimension(), rng, false);
    const auto cg = CGTable::load_or_build(kGeneralL + 2);
    const auto base = irrep_s2_conv(out, in, k, f, cg);
    double err = 0.0;
    for (const auto& g : rand_rotations(kEquivarianceTrials, rng)) {
        const auto lhs = irrep_s2_conv(out, in, k, mix_channels(block_representation(in, g), rotate_spectral_s2(f, g)), cg);
        const auto rhs = mix_channels(block_representation(out, g), rotate_spectral_so3(base, g));
        err = std::max(err, rel_diff(lhs.coeffs, rhs.coeffs));
    }
    return err;
}

double irrep_so3_equivariance(Rng& rng) {
    const auto &in = irrep_in(), &out = irrep_out();
    const auto k = rand_kernel_so3(kGeneralL, out.dimension(), in.dimension(), rng);
    const auto f = rand_so3(kGeneralL, in.dimension(), rng, false);
    const auto cg = CGTable::load_or_build(kGeneralL + 2);
    const auto base = irrep_so3_conv(out, in, k, f, cg);
    double err = 0.0;
    for (const auto& g : rand_rotations(kEquivarianceTrials, rng)) {
        const auto lhs =
            irrep_so3_conv(out, in, k, mix_channels(block_representation(in, g), rotate_spectral_so3(f, g)), cg);
        const auto rhs = mix_channels(block_representation(out, g), rotate_spectral_so3(base, g));
        err = std::max(err, rel_diff(lhs.coeffs, rhs.coeffs));
    }
    return err;
}

// ---------------------------------------------------------------------------
// repr

PointFeatures rand_points(int points, int dim, Rng& rng) {
    auto f = PointFeatures::zeros(points, dim);
    for (auto& v : f.values) v = rand_complex(rng);
    return f;
}

double intensity_pointwise(Rng& rng) {
    const auto f = rand_points(32, 3, rng);
    CMatrix T(2, 3);
    for (int i = 0; i < T.size(); ++i) T.data()[i] = rand_complex(rng);
    IntensityField psi;
    for (int p = 0; p < 32; ++p) psi.psi.push_back(rand_complex(rng));
    return intensity_commutation_residual([&](const PointFeatures& x) { return pointwise_map(T, x); }, psi, f);
}

double intensity_convolution(Rng&) {
    auto f = PointFeatures::zeros(16, 1);
    for (auto& v : f.values) v = 1.0;
    return intensity_commutation_residual(
        [](const PointFeatures& x) { return cyclic_convolution({0.25, 0.5, 0.25}, x); }, bump_intensity(16, 8, 1.0), f);
}

// D^1 (x) D^1 decomposes as 0 + 1 + 2; residual counts misassigned copies.
double tensor_multiplicities(Rng&) {
    const auto got = extract_multiplicities(
        [](const EulerZYZ& g) -> CMatrix {
            const CMatrix D = wigner_D(1, g);
            return Eigen::kroneckerProduct(D, D).eval();
        },
        3);
    double err = 0.0;
    for (int l = 0; l <= 3; ++l) {
        const int want = l <= 2 ? 1 : 0;
        const auto it = got.mult.find(l);
        err += std::abs((it == got.mult.end() ? 0 : it->second) - want);
    }
    return err;
}

// Q (D^l1 (x) D^l2) Q^T is the direct sum of D^J.
double cg_block_diagonal(Rng& rng) {
    double err = 0.0;
    for (auto [l1, l2] : {std::pair{1, 1}, std::pair{2, 1}, std::pair{2, 2}}) {
        const RMatrix Q = cg_change_of_basis(l1, l2);
        const auto g = rand_rotation(rng);
        const CMatrix K = Eigen::kroneckerProduct(wigner_D(l1, g), wigner_D(l2, g)).eval();
        const CMatrix B = Q.cast<cd>() * K * Q.transpose().cast<cd>();
        CMatrix want = CMatrix::Zero(B.rows(), B.cols());
        int off = 0;
        for (int J = std::abs(l1 - l2); J <= l1 + l2; ++J) {
            want.block(off, off, 2 * J + 1, 2 * J + 1) = wigner_D(J, g);
            off += 2 * J + 1;
        }
        err = std::max(err, (B - want).cwiseAbs().maxCoeff());
    }
    return err;
}

double similarity_vectorization(Rng& rng) {
    double err = 0.0;
    for (int t = 0; t < 5; ++t) {
        const Eigen::Matrix3d R = rotation_matrix(rand_rotation(rng));
        Eigen::Matrix3d Q;
        for (int i = 0; i < 9; ++i) Q.data()[i] = rand_complex(rng).real();
        const Eigen::Matrix3d want = R * Q * R.transpose();
        Eigen::Matrix<double, 9, 1> vq, vw;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) vq(3 * i + j) = Q(i, j), vw(3 * i + j) = want(i, j);
        err = std::max(err, (vectorize_similarity(R) * vq - vw).cwiseAbs().maxCoeff());
    }
    return err;
}

// ---------------------------------------------------------------------------
// steerable_kernels

std::vector<Eigen::Vector3d> rand_points3(int count, double radius, Rng& rng) {
    std::vector<Eigen::Vector3d> out;
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < count; ++i) {
        const Eigen::Vector3d v(n(rng), n(rng), n(rng));
        out.push_back(v.normalized() * rand_uniform(rng, 0.1, radius));
    }
    return out;
}

FeatureType single(int l) { return ftype({{l, 1}}); }

double steerable_continuous(Rng& rng) {
    const auto rots = rand_rotations(20, rng);
    const auto pts = rand_points3(10, 3.0, rng);
    double err = 0.0;
    for (int l = 0; l <= 2; ++l)
        for (int t = 0; t <= 2; ++t) {
            const auto b = solve_angular_basis(l, t, RadialShells::for_lattice(1.0, 3));
            for (const auto& e : b.elements)
                err = std::max(err, continuous_constraint_residual(
                                        [&](const Eigen::Vector3d& y) { return b.evaluate(e, y); }, l, t, rots, pts));
        }
    return err;
}

double steerable_lattice(Rng& rng) {
    const auto rots = rand_rotations(3, rng);
    double err = 0.0;
    for (int l = 0; l <= 2; ++l)
        for (int t = 0; t <= 2; ++t) {
            const auto b = solve_angular_basis(l, t, RadialShells::for_lattice(1.0, 5));
            for (const auto& e : b.elements) {
                const auto k = sample_kernel([&](const Eigen::Vector3d& y) { return b.evaluate(e, y); }, 2 * l + 1,
                                             2 * t + 1, 9, 1.0);
                err = std::max(err, constraint_residual(k, single(t), single(l), rots));
            }
        }
    return err;
}

double steerable_random_lattice(Rng& rng) {
    auto k = VolumetricKernel::zeros(9, 1.0, 3, 3);
    for (auto& v : k.values) v = rand_complex(rng);
    return constraint_residual(k, single(1), single(1), rand_rotations(3, rng));
}

// Largest ratio between consecutive residuals over h, h/2, h/4.
double steerable_refinement(Rng&) {
    double worst = 0.0;
    for (auto [l, t] : {std::pair{1, 1}, std::pair{2, 1}}) {
        const auto r = refinement_study(l, t, {0.5, 0.25, 0.125});
        for (std::size_t i = 0; i + 1 < r.size(); ++i) worst = std::max(worst, r[i + 1] / r[i]);
    }
    return worst;
}

// Mismatches between the SVD null-space dimension and the coupling rule.
double steerable_nullspace(Rng&) {
    double bad = 0.0;
    for (int l = 0; l <= 2; ++l)
        for (int t = 0; t <= 2; ++t)
            for (int j = 0; j <= l + t + 1; ++j) {
                const int want = (j >= std::abs(l - t) && j <= l + t) ? 1 : 0;
                bad += std::abs(constraint_nullspace_dimension(l, t, j) - want);
            }
    return bad;
}

double planar_constraint(Rng& rng) {
    std::vector<double> radii{0.3, 1.0, 2.2}, angles, shifts;
    for (int i = 0; i < 6; ++i) angles.push_back(rand_uniform(rng, 0.0, 2 * kPi)), shifts.push_back(rand_uniform(rng, 0.0, 2 * kPi));
    double err = 0.0;
    for (int mi = -2; mi <= 2; ++mi)
        for (int mo = -2; mo <= 2; ++mo) {
            const CircularHarmonic k{mo - mi, rand_uniform(rng, 0.0, 2 * kPi), [](double r) { return r * std::exp(-r); }};
            err = std::max(err, se2_constraint_residual([&](double r, double a) { return k(r, a); }, mi, mo, radii,
                                                        angles, shifts));
        }
    return err;
}

// ---------------------------------------------------------------------------
// nonlin

double vector_field_equivariance(Rng& rng) {
    double err = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        auto f = P4Feature::zeros(5, 5, 2);
        for (auto& v : f.values) v = rand_uniform(rng);
        const auto base = vector_field_nonlinearity(f);
        if (base.tie_detected()) throw std::runtime_error("tie in a random input");
        std::uniform_int_distribution<int> r4(0, 3), t5(0, 4);
        const int r = r4(rng), tx = t5(rng), ty = t5(rng);
        const auto moved = vector_field_nonlinearity(act_c4(f, r, tx, ty));
        err = std::max(err, max_diff(moved.field.values, act_c4_vector(base.field, r, tx, ty).values));
    }
    return err;
}

// 0 when every pixel of a constant input is reported as a tie.
double vector_field_ties(Rng&) {
    auto f = P4Feature::zeros(3, 3, 1);
    for (auto& v : f.values) v = 0.5;
    const auto res = vector_field_nonlinearity(f);
    return res.ties.size() == 9 ? 0.0 : 1.0;
}

double relu_sphere(Rng& rng) { return relu_s2_equivariance_residual(16, rand_rotation(rng)); }

double norm_nonlinearity_rotation(Rng& rng) {
    const auto type = ftype({{0, 1}, {1, 2}, {2, 1}});
    // Real scalars keep the norm map well defined on the degree-0 block.
    auto f = rand_points(6, type.dimension(), rng);
    const auto alpha = [](double n) { return std::tanh(n) / std::max(n, 1e-300); };
    const auto out = norm_nonlinearity(alpha, f, type);
    double err = 0.0;
    for (int t = 0; t < 5; ++t) {
        const CMatrix D = block_representation(type, rand_rotation(rng));
        err = std::max(err, rel_diff(norm_nonlinearity(alpha, pointwise_map(D, f), type).values,
                                     pointwise_map(D, out).values));
    }
    return err;
}

double subgroup_max_pool(Rng& rng) {
    double err = 0.0;
    for (int t = 0; t < 10; ++t) {
        auto g = P4Feature::zeros(6, 6, 2);
        for (auto& v : g.values) v = rand_uniform(rng);
        const int r = t % 4, tx = (3 * t) % 6, ty = (5 * t + 1) % 6;
        err = std::max(err, max_diff(subgroup_pool(act_c4(g, r, tx, ty), PoolMode::Max).values,
                                     act_c4(subgroup_pool(g, PoolMode::Max), r, tx, ty).values));
    }
    return err;
}

// ---------------------------------------------------------------------------
// gauge_mesh

MeshFeature rand_mesh_feature(int n, std::vector<int> orders, Rng& rng) {
    auto f = MeshFeature::zeros(n, std::move(orders));
    for (auto& v : f.values) v = rand_complex(rng);
    return f;
}

std::vector<double> rand_gauge(int n, Rng& rng) {
    std::vector<double> g(n);
    for (auto& v : g) v = rand_uniform(rng, 0.0, 2 * kPi);
    return g;
}

double harmonic_gauge(const TriMesh& mesh, Rng& rng) {
    const int n = static_cast<int>(mesh.vertices.size());
    double err = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
        const CircularHarmonic k{trial - 2, 0.5 * trial, [](double r) { return std::exp(-r * r) * (1.0 + r); }};
        err = std::max(err, harmonic_gauge_residual(mesh, rand_mesh_feature(n, {0, 1, -1, 2}, rng), k, rand_gauge(n, rng)));
    }
    return err;
}

double gem_gauge(const TriMesh& mesh, Rng& rng) {
    const int n = static_cast<int>(mesh.vertices.size());
    const std::vector<int> in{0, 1, 2, -1}, out{0, 1, -2};
    CMatrix c(3, 4), s(3, 4);
    for (int i = 0; i < 12; ++i) c.data()[i] = rand_complex(rng), s.data()[i] = rand_complex(rng);
    const auto k = circular_harmonic_gem_kernel(out, in, c, [](double r) { return r * std::exp(-r); }, s);
    double err = 0.0;
    for (int trial = 0; trial < 10; ++trial)
        err = std::max(err, gem_gauge_residual(mesh, rand_mesh_feature(n, in, rng), k, rand_gauge(n, rng)));
    return err;
}

// An order-1 feature mislabelled as order 0 skips the transport phase.
double wrong_order_defect(Rng& rng) {
    const auto m = icosahedron();
    const auto f = rand_mesh_feature(12, {1}, rng);
    const auto g = rand_gauge(12, rng);
    auto as_scalar = apply_gauge(f, g);
    as_scalar.orders = {0};
    const CircularHarmonic k{1, 0.0, [](double r) { return std::exp(-r * r) * (1.0 + r); }};
    const auto lhs = harmonic_conv(build_atlas(m, g), as_scalar, k);
    const auto rhs = apply_gauge(harmonic_conv(build_atlas(m), f, k), g);
    return rel_diff(lhs.values, rhs.values);
}

// ---------------------------------------------------------------------------
// gcnn_discrete

ImageZ2 rand_image(int w, int h, int c, Rng& rng) {
    auto f = ImageZ2::zeros(w, h, c);
    for (auto& v : f.values) v = rand_uniform(rng, -1.0, 1.0);
    return f;
}

KernelZ2 rand_kernel_z2(int size, int out, int in, Rng& rng) {
    auto k = KernelZ2::zeros(size, out, in);
    for (auto& v : k.values) v = rand_uniform(rng, -1.0, 1.0);
    return k;
}

std::array<int, 3> rand_c4_element(int n, Rng& rng) {
    std::uniform_int_distribution<int> r4(0, 3), tn(0, n - 1);
    return {r4(rng), tn(rng), tn(rng)};
}

double z2_translation(Rng& rng) {
    const auto f = rand_image(9, 6, 2, rng);
    const auto k = rand_kernel_z2(3, 3, 2, rng);
    const auto out = z2_conv(k, f);
    double err = 0.0;
    std::uniform_int_distribution<int> t(-10, 10);
    for (int i = 0; i < kEquivarianceTrials; ++i) {
        const int tx = t(rng), ty = t(rng);
        err = std::max(err, max_diff(z2_conv(k, translate(f, tx, ty)).values, translate(out, tx, ty).values));
    }
    return err;
}

double lifting_equivariance(Rng& rng) {
    const int n = 7;
    const auto f = rand_image(n, n, 2, rng);
    const auto k = rand_kernel_z2(3, 3, 2, rng);
    const auto out = lifting_conv(k, f);
    double err = 0.0;
    for (int i = 0; i < kEquivarianceTrials; ++i) {
        const auto [r, tx, ty] = rand_c4_element(n, rng);
        err = std::max(err, max_diff(lifting_conv(k, act_c4(f, r, tx, ty)).values, act_c4(out, r, tx, ty).values));
    }
    return err;
}

double group_equivariance(Rng& rng) {
    const int n = 7;
    auto f = P4Feature::zeros(n, n, 2);
    for (auto& v : f.values) v = rand_uniform(rng, -1.0, 1.0);
    auto k = GroupKernel::zeros(3, 1, 2, 2);
    for (auto& v : k.values) v = rand_uniform(rng, -1.0, 1.0);
    const auto out = group_conv(k, f);
    double err = 0.0;
    for (int i = 0; i < kEquivarianceTrials; ++i) {
        const auto [r, tx, ty] = rand_c4_element(n, rng);
        err = std::max(err, max_diff(group_conv(k, act_c4(f, r, tx, ty)).values, act_c4(out, r, tx, ty).values));
    }
    return err;
}

P4Feature unflat(const Eigen::VectorXd& v, int n) {
    auto f = P4Feature::zeros(n, n, 1);
    for (int i = 0; i < v.size(); ++i) f.values[i] = v(i);
    return f;
}

Eigen::VectorXd flat(const P4Feature& f) {
    return Eigen::Map<const Eigen::VectorXd>(f.values.data(), static_cast<Eigen::Index>(f.values.size()));
}

// Max over probes of |group_conv(recovered kernel) - map| for a group-averaged
// (or, as a control, raw) linear map on the 4 x 4 torus.
double kernel_recovery(Rng& rng, bool averaged) {
    const int n = 4;
    Eigen::MatrixXd A(4 * n * n, 4 * n * n);
    for (int i = 0; i < A.size(); ++i) A.data()[i] = rand_uniform(rng, -1.0, 1.0);
    const Eigen::MatrixXd M = averaged ? group_average(A, n) : A;
    auto map = [&](const P4Feature& f) { return unflat(M * flat(f), n); };
    const auto k = recover_group_kernel(map, n);
    double err = 0.0;
    for (int t = 0; t < 5; ++t) {
        auto f = P4Feature::zeros(n, n, 1);
        for (auto& v : f.values) v = rand_uniform(rng, -1.0, 1.0);
        err = std::max(err, (flat(group_conv(k, f)) - flat(map(f))).cwiseAbs().maxCoeff());
    }
    return err;
}

double segmentation_translation(Rng& rng) {
    const auto img = rand_image(8, 6, 3, rng);
    const auto k1 = rand_kernel_z2(3, 4, 3, rng), k2 = rand_kernel_z2(3, 5, 4, rng);
    const auto out = segmentation_pipeline(img, k1, k2);
    double err = 0.0;
    std::uniform_int_distribution<int> t(-8, 8);
    for (int i = 0; i < kEquivarianceTrials; ++i) {
        const int tx = t(rng), ty = t(rng);
        err = std::max(err, max_diff(segmentation_pipeline(translate(img, tx, ty), k1, k2).values,
                                     translate(out, tx, ty).values));
    }
    return err;
}

// Four quarter turns and opposite translations return the original field.
double detection_closure(Rng& rng) {
    DetectionField f{5, 5, true, 2, {}};
    for (int i = 0; i < 25; ++i) {
        std::vector<double> rec(8);
        // Multiples of 1/8 keep the anchor shifts exact.
        for (auto& v : rec) v = std::round(rand_uniform(rng, -16.0, 16.0)) / 8.0;
        f.records.push_back(rec);
    }
    auto g = f;
    for (int i = 0; i < 4; ++i) g = rotate_detections(g, 1);
    g = translate_detections(translate_detections(g, 2, -3), -2, 3);
    double err = 0.0;
    for (std::size_t i = 0; i < f.records.size(); ++i) err = std::max(err, max_diff(g.records[i], f.records[i]));
    return err;
}

// ---------------------------------------------------------------------------
// Registry

struct CheckDef {
    std::string name;
    std::string module;
    std::string anchor;
    double tolerance;
    bool oracle_only = false;
    std::function<double(Rng&)> run;
};

std::vector<CheckDef> registry(int B) {
    std::vector<CheckDef> c;
    auto add = [&](std::string module, std::string check, std::string anchor, double tol, std::function<double(Rng&)> fn,
                   bool oracle_only = false) {
        c.push_back({module + "." + check, module, std::move(anchor), tol, oracle_only, std::move(fn)});
    };

    add("harmonics", "wigner_unitarity", "Wigner D matrices are unitary, degrees up to 16", 1e-11, wigner_unitarity);
    add("harmonics", "wigner_homomorphism", "D(g1 g2) = D(g1) D(g2), degrees up to 16", 1e-10, wigner_homomorphism);
    add("harmonics", "wigner_conjugation", "conj(D_mn) = (-1)^(m-n) D_-m-n, degrees up to 16", 1e-12, wigner_conjugation);
    add("harmonics", "rotation_rule", "Y_m(R x) = sum_n conj(D_mn(R)) Y_n(x), degrees up to 16", 1e-10,
        harmonic_rotation_rule);
    add("harmonics", "conjugation", "Y_l,-m = (-1)^m conj(Y_lm), degrees up to 16", 1e-12, harmonic_conjugation);
    add("harmonics", "product_rule", "product of harmonics expands with Clebsch-Gordan weights, total degree up to 16",
        1e-10, harmonic_product_rule);
    add("harmonics", "cg_orthogonality", "Clebsch-Gordan orthogonality, degrees up to 16", 1e-11, cg_orthogonality);

    add("grids", "s2_round_trip", "sphere synthesis then analysis is the identity at twice the bandlimit", 1e-10,
        [B](Rng& r) { return s2_round_trip(2 * B, r); });
    add("grids", "so3_round_trip", "rotation-group synthesis then analysis is the identity", 1e-9,
        [B](Rng& r) { return so3_round_trip(B, r); });
    add("grids", "s2_parseval", "sphere quadrature norm equals coefficient norm", 1e-9,
        [B](Rng& r) { return s2_parseval(2 * B, r); });
    add("grids", "so3_parseval", "rotation-group quadrature norm equals weighted coefficient norm", 1e-9,
        [B](Rng& r) { return so3_parseval(B, r); });
    add("grids", "s2_rotation", "spectral rotation matches resampling f(g^-1 x)", 1e-10,
        [B](Rng& r) { return s2_rotation(B, r); });
    add("grids", "so3_rotation", "spectral rotation matches resampling f(g^-1 R)", 1e-10,
        [B](Rng& r) { return so3_rotation(B, r); });
    add("grids", "s2_reference", "separated sphere transforms agree with the direct sums", 1e-10,
        [B](Rng& r) { return s2_reference(B, r); }, true);
    add("grids", "so3_reference", "separated rotation-group transforms agree with the direct sums", 1e-10,
        [B](Rng& r) { return so3_reference(B, r); }, true);

    add("spectral_conv", "s2_scalar_oracle", "scalar sphere convolution equals the quadrature integral", 1e-8,
        [B](Rng& r) { return s2_scalar_oracle(B, r); });
    add("spectral_conv", "so3_scalar_oracle", "scalar rotation-group convolution equals the Haar integral", 1e-8,
        [B](Rng& r) { return so3_scalar_oracle(B, r); });
    add("spectral_conv", "s2_general_oracle", "sphere convolution with fundamental in, degree 0+1 out, bandlimit 4",
        1e-7, s2_general_oracle);
    add("spectral_conv", "so3_general_oracle",
        "rotation-group convolution with fundamental in, degree 0+1 out, bandlimit 4", 1e-7, so3_general_oracle);
    add("spectral_conv", "irrep_s2_vs_general", "irrep-decomposed sphere convolution equals the general form", 1e-7,
        irrep_s2_vs_general);
    add("spectral_conv", "irrep_so3_vs_general", "irrep-decomposed rotation-group convolution equals the general form",
        1e-7, irrep_so3_vs_general);
    add("spectral_conv", "s2_scalar_equivariance", "scalar sphere convolution commutes with 10 random rotations", 1e-7,
        [B](Rng& r) { return s2_scalar_equivariance(B, r); });
    add("spectral_conv", "so3_scalar_equivariance", "scalar rotation-group convolution commutes with 10 random rotations",
        1e-7, [B](Rng& r) { return so3_scalar_equivariance(B, r); });
    add("spectral_conv", "s2_general_equivariance", "general sphere convolution intertwines the field representations",
        1e-7, s2_general_equivariance);
    add("spectral_conv", "so3_general_equivariance",
        "general rotation-group convolution intertwines the field representations", 1e-7, so3_general_equivariance);
    add("spectral_conv", "irrep_s2_equivariance", "irrep-decomposed sphere convolution intertwines the block actions",
        1e-7, irrep_s2_equivariance);
    add("spectral_conv", "irrep_so3_equivariance",
        "irrep-decomposed rotation-group convolution intertwines the block actions", 1e-7, irrep_so3_equivariance);

    add("repr", "intensity_pointwise", "pointwise linear maps commute with intensity scaling", 1e-12,
        intensity_pointwise);
    add("repr", "intensity_convolution_control", "width-3 convolution does not commute with a narrow bump (defect >= 0.1)",
        1.0, [](Rng& r) { return control_ratio(0.1, intensity_convolution(r)); });
    add("repr", "tensor_multiplicities", "D1 x D1 decomposes as degrees 0, 1, 2", 0.0, tensor_multiplicities);
    add("repr", "cg_block_diagonal", "Clebsch-Gordan change of basis block-diagonalises tensor products", 1e-12,
        cg_block_diagonal);
    add("repr", "similarity_vectorization", "R kron R acts on vec(Q) as R Q R^T", 1e-12, similarity_vectorization);

    add("steerable_kernels", "continuous_residual", "every basis element with degrees up to 2 obeys the constraint",
        1e-9, steerable_continuous);
    add("steerable_kernels", "lattice_residual", "every basis element sampled on a 9^3 lattice obeys the constraint",
        1e-6, steerable_lattice);
    add("steerable_kernels", "lattice_control", "random lattice kernel violates the constraint (residual >= 0.1)", 1.0,
        [](Rng& r) { return control_ratio(0.1, steerable_random_lattice(r)); });
    add("steerable_kernels", "refinement_monotone", "lattice defect shrinks over h, h/2, h/4 (largest ratio below 1)",
        1.0, steerable_refinement);
    add("steerable_kernels", "nullspace_count", "SVD null space matches one solution per coupled degree", 0.0,
        steerable_nullspace);
    add("steerable_kernels", "planar_constraint", "circular harmonics solve the planar rotation constraint", 1e-12,
        planar_constraint);

    add("nonlin", "vector_field_equivariance", "vector-field nonlinearity is exactly equivariant on 100 inputs", 0.0,
        vector_field_equivariance);
    add("nonlin", "vector_field_ties", "constant input reports a tie at every pixel", 0.0, vector_field_ties);
    add("nonlin", "relu_sphere", "relu on an oversampled sphere grid is approximately equivariant at bandlimit 16",
        1e-2, relu_sphere);
    add("nonlin", "norm_rotation", "norm nonlinearity commutes with block rotations", 1e-10,
        norm_nonlinearity_rotation);
    add("nonlin", "subgroup_max_pool", "max pooling over rotations is exactly equivariant", 0.0, subgroup_max_pool);

    add("gauge_mesh", "harmonic_icosahedron", "harmonic convolution picks up the gauge phase on the icosahedron",
        1e-10, [](Rng& r) { return harmonic_gauge(icosahedron(), r); });
    add("gauge_mesh", "harmonic_sphere200", "harmonic convolution picks up the gauge phase on a 200-vertex sphere",
        1e-10, [](Rng& r) { return harmonic_gauge(random_sphere_mesh(200, static_cast<unsigned>(r())), r); });
    add("gauge_mesh", "gem_icosahedron", "gauge-equivariant convolution under random gauges on the icosahedron", 1e-10,
        [](Rng& r) { return gem_gauge(icosahedron(), r); });
    add("gauge_mesh", "gem_sphere200", "gauge-equivariant convolution under random gauges on a 200-vertex sphere",
        1e-10, [](Rng& r) { return gem_gauge(random_sphere_mesh(200, static_cast<unsigned>(r())), r); });
    add("gauge_mesh", "wrong_order_control", "ignoring transport breaks the gauge law (defect >= 1e-2)", 1.0,
        [](Rng& r) { return control_ratio(1e-2, wrong_order_defect(r)); });

    add("gcnn_discrete", "z2_translation", "planar convolution commutes with 10 periodic translations", 0.0,
        z2_translation);
    add("gcnn_discrete", "lifting_equivariance", "lifting convolution commutes with 10 random p4 elements", 0.0,
        lifting_equivariance);
    add("gcnn_discrete", "group_equivariance", "group convolution commutes with 10 random p4 elements", 0.0,
        group_equivariance);
    add("gcnn_discrete", "kernel_recovery", "group-averaged map on the 4x4 torus is a group convolution", 1e-12,
        [](Rng& r) { return kernel_recovery(r, true); });
    add("gcnn_discrete", "kernel_recovery_control", "a raw random map is not reproduced (defect >= 0.1)", 1.0,
        [](Rng& r) { return control_ratio(0.1, kernel_recovery(r, false)); });
    add("gcnn_discrete", "segmentation_translation", "segmentation pipeline commutes with translations", 0.0,
        segmentation_translation);
    add("gcnn_discrete", "detection_closure", "four quarter turns and inverse translations restore detections", 0.0,
        detection_closure);
    return c;
}

std::vector<std::string> split_filter(const std::string& filter) {
    std::vector<std::string> out;
    std::stringstream ss(filter);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

std::vector<CheckDef> select(const AuditConfig& config) {
    if (config.bandlimit < 2 || config.bandlimit > 32)
        throw std::invalid_argument("bandlimit must be between 2 and 32");
    auto all = registry(config.bandlimit);
    const auto tokens = split_filter(config.filter);
    std::vector<CheckDef> out;
    std::vector<bool> used(tokens.size(), false);
    for (auto& c : all) {
        if (c.oracle_only && !config.oracle) continue;
        bool keep = tokens.empty();
        for (std::size_t i = 0; i < tokens.size(); ++i)
            if (c.module == tokens[i] || c.name.rfind(tokens[i], 0) == 0) keep = used[i] = true;
        if (keep) out.push_back(std::move(c));
    }
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (!used[i]) throw std::invalid_argument("filter matches no check: " + tokens[i]);
    std::sort(out.begin(), out.end(), [](const CheckDef& a, const CheckDef& b) { return a.name < b.name; });
    return out;
}

// Independent stream per check so filtering does not change results.
Rng check_rng(unsigned seed, const std::string& name) {
    std::vector<std::uint32_t> words{seed};
    for (char ch : name) words.push_back(static_cast<unsigned char>(ch));
    std::seed_seq seq(words.begin(), words.end());
    return Rng(seq);
}

// Shortest text that reads back to the same double.
std::string number(double v) {
    char buf[32];
    const auto end = std::to_chars(buf, buf + sizeof buf, v).ptr;
    return std::string(buf, end);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

}  // namespace

int AuditReport::passed() const {
    return static_cast<int>(std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; }));
}

int AuditReport::failed() const { return static_cast<int>(checks.size()) - passed(); }

std::string AuditReport::to_json() const {
    nlohmann::ordered_json j;
    j["version"] = version;
    j["seed"] = config.seed;
    j["bandlimit"] = config.bandlimit;
    j["filter"] = config.filter;
    j["oracle"] = config.oracle;
    j["phase_convention"] = phase_convention;
    j["checks"] = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
        nlohmann::ordered_json e;
        e["name"] = c.name;
        e["module"] = c.module;
        e["anchor"] = c.anchor;
        if (std::isfinite(c.residual))
            e["residual"] = c.residual;
        else
            e["residual"] = nullptr;
        e["tolerance"] = c.tolerance;
        e["pass"] = c.pass;
        e["seconds"] = c.seconds;
        if (!c.error.empty()) e["error"] = c.error;
        j["checks"].push_back(std::move(e));
    }
    j["summary"] = {{"total", checks.size()}, {"passed", passed()}, {"failed", failed()}};
    return j.dump(2);
}

std::string AuditReport::to_csv() const {
    std::ostringstream out;
    out << "name,module,anchor,residual,tolerance,pass,seconds\n";
    for (const auto& c : checks)
        out << c.name << ',' << c.module << ',' << csv_field(c.anchor) << ',' << number(c.residual) << ','
            << number(c.tolerance) << ',' << (c.pass ? "true" : "false") << ',' << number(c.seconds) << '\n';
    return out.str();
}

std::vector<std::string> audit_modules() {
    return {"harmonics", "grids", "spectral_conv", "repr", "steerable_kernels", "nonlin", "gauge_mesh", "gcnn_discrete"};
}

std::vector<std::string> audit_check_names(const AuditConfig& config) {
    std::vector<std::string> out;
    for (const auto& c : select(config)) out.push_back(c.name);
    return out;
}

AuditReport run_audit(const AuditConfig& config) {
    AuditReport report;
    report.config = config;
    report.phase_convention =
        phase_convention() == PhaseConvention::CondonShortley ? "condon-shortley" : "no-condon-shortley";
    for (const auto& def : select(config)) {
        CheckResult r{def.name, def.module, def.anchor, 0.0, def.tolerance, false, 0.0, {}};
        auto rng = check_rng(config.seed, def.name);
        const auto t0 = std::chrono::steady_clock::now();
        try {
            r.residual = def.run(rng);
            r.pass = r.residual <= r.tolerance;  // NaN fails
        } catch (const std::exception& e) {
            r.residual = std::numeric_limits<double>::quiet_NaN();
            r.error = e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.checks.push_back(std::move(r));
    }
    return report;
}

}  // namespace equivar
