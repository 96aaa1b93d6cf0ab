#include "equivar/spectral_conv.hpp"
#include "equivar/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace equivar {

namespace {

void require_cg(const CGTable& cg, int degree, const char* what) {
    if (cg.max_degree() < degree) {
        std::ostringstream os;
        os << what << ": needs Clebsch-Gordan degree " << degree << " but table stops at " << cg.max_degree();
        throw BandlimitOverflow(os.str());
    }
}

void shape_error(const char* what, const std::string& detail) { throw ShapeMismatch(std::string(what) + ": " + detail); }

bool all_zero(const cd* a, int L) {
    for (int i = 0; i < so3_size(L); ++i)
        if (a[i] != cd(0.0)) return false;
    return true;
}

// conj of transposed coefficient blocks: coefficients of rho_{st}(R^{-1}) for
// a real-valued representation.
std::vector<std::vector<cd>> inverse_blocks(const RepSpectral& rho) {
    const int L = rho.bandlimit, d = rho.dim;
    std::vector<std::vector<cd>> out(static_cast<std::size_t>(d) * d, std::vector<cd>(so3_size(L)));
    for (int s = 0; s < d; ++s)
        for (int t = 0; t < d; ++t) {
            const cd* src = rho.element(s, t);
            auto& dst = out[s * d + t];
            for (int l = 0; l < L; ++l)
                for (int m = -l; m <= l; ++m)
                    for (int n = -l; n <= l; ++n) dst[so3_index(l, m, n)] = std::conj(src[so3_index(l, n, m)]);
        }
    return out;
}

struct Entry {
    int l, m, n;
    cd v;
};

std::vector<Entry> nonzeros(const cd* a, int L) {
    std::vector<Entry> out;
    for (int l = 0; l < L; ++l)
        for (int m = -l; m <= l; ++m)
            for (int n = -l; n <= l; ++n) {
                const cd v = a[so3_index(l, m, n)];
                if (v != cd(0.0)) out.push_back({l, m, n, v});
            }
    return out;
}

Eigen::Vector3d direction(double theta, double phi) {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

void angles_of(const Eigen::Vector3d& v, double& theta, double& phi) {
    theta = std::acos(std::clamp(v.z() / v.norm(), -1.0, 1.0));
    phi = std::atan2(v.y(), v.x());
}

}  // namespace

KernelS2 KernelS2::zeros(int L, int out, int in) {
    KernelS2 k;
    k.bandlimit = L;
    k.out_channels = out;
    k.in_channels = in;
    k.coeffs.assign(static_cast<std::size_t>(out) * in * s2_size(L), cd(0.0));
    return k;
}

SpectralS2Signal KernelS2::as_signal() const {
    SpectralS2Signal s;
    s.bandlimit = bandlimit;
    s.channels = out_channels * in_channels;
    s.coeffs = coeffs;
    return s;
}

KernelSO3 KernelSO3::zeros(int L, int out, int in) {
    KernelSO3 k;
    k.bandlimit = L;
    k.out_channels = out;
    k.in_channels = in;
    k.coeffs.assign(static_cast<std::size_t>(out) * in * so3_size(L), cd(0.0));
    return k;
}

SpectralSO3Signal KernelSO3::as_signal() const {
    SpectralSO3Signal s;
    s.bandlimit = bandlimit;
    s.channels = out_channels * in_channels;
    s.coeffs = coeffs;
    return s;
}

Representation Representation::trivial(int dim) {
    Representation r;
    r.dim = dim;
    r.max_degree = 0;
    r.real_valued = true;
    r.matrix = [dim](const EulerZYZ&) { return CMatrix(CMatrix::Identity(dim, dim)); };
    return r;
}

Representation Representation::irreps(const FeatureType& t, bool real_basis) {
    Representation r;
    r.dim = t.dimension();
    r.max_degree = t.max_degree();
    r.real_valued = real_basis || r.max_degree == 0;
    r.matrix = [t, real_basis](const EulerZYZ& g) { return block_representation(t, g, real_basis); };
    return r;
}

Representation Representation::fundamental() {
    Representation r;
    r.dim = 3;
    r.max_degree = 1;
    r.real_valued = true;
    r.matrix = [](const EulerZYZ& g) { return CMatrix(rotation_matrix(g).cast<cd>()); };
    return r;
}

RepSpectral RepSpectral::from(const Representation& rho) {
    RepSpectral out;
    out.dim = rho.dim;
    out.bandlimit = rho.max_degree + 1;
    out.real_valued = rho.real_valued;
    const SO3Grid grid(out.bandlimit);
    auto samples = SO3Samples::zeros(out.bandlimit, rho.dim * rho.dim);
    const int S = grid.side();
    for (int b = 0; b < S; ++b)
        for (int a = 0; a < S; ++a)
            for (int c = 0; c < S; ++c) {
                const CMatrix M = rho.matrix(grid.node(a, b, c));
                if (M.rows() != rho.dim || M.cols() != rho.dim) shape_error("RepSpectral", "matrix size differs from dim");
                for (int s = 0; s < rho.dim; ++s)
                    for (int t = 0; t < rho.dim; ++t) samples.at(s * rho.dim + t, b, a, c) = M(s, t);
            }
    out.coeffs = so3_analysis(grid, samples);
    // Quadrature noise on structurally zero coefficients would defeat the
    // sparsity the products rely on.
    for (auto& v : out.coeffs.coeffs) {
        if (std::abs(v.real()) < 1e-14) v.real(0.0);
        if (std::abs(v.imag()) < 1e-14) v.imag(0.0);
    }
    return out;
}

void so3_product_accumulate(const cd* a, int La, const cd* b, int Lb, cd* c, int Lc, const CGTable& cg, cd scale) {
    const auto A = nonzeros(a, La);
    const auto B = nonzeros(b, Lb);
    for (const auto& x : A)
        for (const auto& y : B) {
            const int M = x.m + y.m, N = x.n + y.n;
            const int lo = std::max({std::abs(x.l - y.l), std::abs(M), std::abs(N)});
            const int hi = std::min(x.l + y.l, Lc - 1);
            if (lo > hi) continue;
            const cd v = scale * x.v * y.v;
            for (int J = lo; J <= hi; ++J)
                c[so3_index(J, M, N)] += cg(x.l, x.m, y.l, y.m, J) * cg(x.l, x.n, y.l, y.n, J) * v;
        }
}

std::vector<cd> s2_conv_scalar_spatial(const KernelS2& kappa, const S2Samples& f, const S2Grid& grid,
                                       const std::vector<EulerZYZ>& rotations) {
    if (f.bandlimit != grid.bandlimit() || f.channels != kappa.in_channels)
        shape_error("s2_conv_scalar_spatial", "signal does not match grid or kernel input channels");
    const auto ks = kappa.as_signal();
    const int O = kappa.out_channels, I = kappa.in_channels;
    std::vector<cd> out(rotations.size() * O, cd(0.0));
#pragma omp parallel for schedule(dynamic)
    for (std::size_t r = 0; r < rotations.size(); ++r) {
        const Eigen::Matrix3d Rinv = rotation_matrix(rotations[r]).transpose();
        for (int j = 0; j < grid.rings(); ++j)
            for (int k = 0; k < grid.longitudes(); ++k) {
                double t, p;
                angles_of(Rinv * direction(grid.theta(j), grid.phi(k)), t, p);
                const auto kv = s2_evaluate(ks, t, p);
                for (int o = 0; o < O; ++o)
                    for (int i = 0; i < I; ++i) out[r * O + o] += grid.weight(j) * kv[o * I + i] * f.at(i, j, k);
            }
    }
    return out;
}

std::vector<cd> s2_conv_general_spatial(const Representation& rho1, const Representation& rho2, const KernelS2& kappa,
                                        const S2Samples& f, const S2Grid& grid,
                                        const std::vector<EulerZYZ>& rotations) {
    if (f.bandlimit != grid.bandlimit() || f.channels != kappa.in_channels || rho1.dim != kappa.in_channels ||
        rho2.dim != kappa.out_channels)
        shape_error("s2_conv_general_spatial", "signal, kernel and representation sizes disagree");
    const auto ks = kappa.as_signal();
    const int O = kappa.out_channels, I = kappa.in_channels;
    std::vector<cd> out(rotations.size() * O, cd(0.0));
#pragma omp parallel for schedule(dynamic)
    for (std::size_t r = 0; r < rotations.size(); ++r) {
        const Eigen::Matrix3d Rinv = rotation_matrix(rotations[r]).transpose();
        Eigen::MatrixXcd integral = Eigen::MatrixXcd::Zero(O, 1);
        const CMatrix r2 = rho2.matrix(rotations[r]);
        const CMatrix r1inv = rho1.matrix(inverse(rotations[r]));
        for (int j = 0; j < grid.rings(); ++j)
            for (int k = 0; k < grid.longitudes(); ++k) {
                double t, p;
                angles_of(Rinv * direction(grid.theta(j), grid.phi(k)), t, p);
                const auto kv = s2_evaluate(ks, t, p);
                Eigen::MatrixXcd K(O, I);
                for (int o = 0; o < O; ++o)
                    for (int i = 0; i < I; ++i) K(o, i) = kv[o * I + i];
                Eigen::VectorXcd fx(I);
                for (int i = 0; i < I; ++i) fx(i) = f.at(i, j, k);
                integral += grid.weight(j) * (r2 * K * r1inv * fx);
            }
        for (int o = 0; o < O; ++o) out[r * O + o] = integral(o, 0);
    }
    return out;
}

std::vector<cd> so3_conv_scalar_spatial(const KernelSO3& kappa, const SO3Samples& f, const SO3Grid& grid,
                                        const std::vector<EulerZYZ>& rotations) {
    return so3_conv_general_spatial(Representation::trivial(kappa.in_channels),
                                    Representation::trivial(kappa.out_channels), kappa, f, grid, rotations);
}

std::vector<cd> so3_conv_general_spatial(const Representation& rho1, const Representation& rho2,
                                         const KernelSO3& kappa, const SO3Samples& f, const SO3Grid& grid,
                                         const std::vector<EulerZYZ>& rotations) {
    if (f.bandlimit != grid.bandlimit() || f.channels != kappa.in_channels || rho1.dim != kappa.in_channels ||
        rho2.dim != kappa.out_channels)
        shape_error("so3_conv_general_spatial", "signal, kernel and representation sizes disagree");
    const auto ks = kappa.as_signal();
    const int O = kappa.out_channels, I = kappa.in_channels, S = grid.side();
    // rho matrices at the quadrature nodes do not depend on the output rotation.
    std::vector<CMatrix> r2(grid.size()), r1inv(grid.size());
    std::vector<Eigen::Matrix3d> Rn(grid.size());
    for (int b = 0; b < S; ++b)
        for (int a = 0; a < S; ++a)
            for (int c = 0; c < S; ++c) {
                const int idx = (b * S + a) * S + c;
                const EulerZYZ g = grid.node(a, b, c);
                r2[idx] = rho2.matrix(g);
                r1inv[idx] = rho1.matrix(inverse(g));
                Rn[idx] = rotation_matrix(g);
            }
    std::vector<cd> out(rotations.size() * O, cd(0.0));
#pragma omp parallel for schedule(dynamic)
    for (std::size_t r = 0; r < rotations.size(); ++r) {
        const Eigen::Matrix3d Smat = rotation_matrix(rotations[r]);
        Eigen::VectorXcd integral = Eigen::VectorXcd::Zero(O);
        for (int b = 0; b < S; ++b)
            for (int a = 0; a < S; ++a)
                for (int c = 0; c < S; ++c) {
                    const int idx = (b * S + a) * S + c;
                    const auto kv = so3_evaluate(ks, rotation_from_matrix(Rn[idx].transpose() * Smat));
                    Eigen::MatrixXcd K(O, I);
                    for (int o = 0; o < O; ++o)
                        for (int i = 0; i < I; ++i) K(o, i) = kv[o * I + i];
                    Eigen::VectorXcd fx(I);
                    for (int i = 0; i < I; ++i) fx(i) = f.at(i, b, a, c);
                    integral += grid.weight(b) * (r2[idx] * K * r1inv[idx] * fx);
                }
        for (int o = 0; o < O; ++o) out[r * O + o] = integral(o);
    }
    return out;
}

SpectralSO3Signal s2_conv_scalar(const KernelS2& kappa, const SpectralS2Signal& f) {
    if (kappa.bandlimit != f.bandlimit || kappa.in_channels != f.channels) {
        std::ostringstream os;
        os << "kernel (L=" << kappa.bandlimit << ", in=" << kappa.in_channels << ") vs signal (L=" << f.bandlimit
           << ", channels=" << f.channels << ")";
        shape_error("s2_conv_scalar", os.str());
    }
    const int L = f.bandlimit, O = kappa.out_channels, I = kappa.in_channels;
    auto out = SpectralSO3Signal::zeros(L, O);
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (int o = 0; o < O; ++o)
        for (int l = 0; l < L; ++l)
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) {
                    cd s = 0;
                    for (int i = 0; i < I; ++i) s += kappa.at(o, i, l, n) * std::conj(f.at(i, l, m));
                    out.at(o, l, m, n) = s;
                }
    out.real_valued = f.real_valued;
    return out;
}

SpectralSO3Signal so3_conv_scalar(const KernelSO3& kappa, const SpectralSO3Signal& f) {
    if (kappa.bandlimit != f.bandlimit || kappa.in_channels != f.channels) {
        std::ostringstream os;
        os << "kernel (L=" << kappa.bandlimit << ", in=" << kappa.in_channels << ") vs signal (L=" << f.bandlimit
           << ", channels=" << f.channels << ")";
        shape_error("so3_conv_scalar", os.str());
    }
    const int L = f.bandlimit, O = kappa.out_channels, I = kappa.in_channels;
    auto out = SpectralSO3Signal::zeros(L, O);
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (int o = 0; o < O; ++o)
        for (int l = 0; l < L; ++l) {
            const double scale = 8 * kPi * kPi / (2 * l + 1);
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) {
                    cd s = 0;
                    for (int i = 0; i < I; ++i)
                        for (int p = -l; p <= l; ++p) s += f.at(i, l, m, p) * kappa.at(o, i, l, p, n);
                    out.at(o, l, m, n) = scale * s;
                }
        }
    return out;
}

namespace {

struct GeneralS2Plan {
    int Lp, Lq, Lout, degree;
};

GeneralS2Plan plan_s2_general(const RepSpectral& rho1, const RepSpectral& rho2, const KernelS2& kappa,
                              const SpectralS2Signal& f, std::optional<int> out_bandlimit) {
    GeneralS2Plan p;
    p.Lp = std::min(kappa.bandlimit, f.bandlimit);
    p.Lout = out_bandlimit.value_or(p.Lp + (rho2.bandlimit - 1) + (rho1.bandlimit - 1));
    p.Lq = std::min(p.Lp + rho2.bandlimit - 1, p.Lout + rho1.bandlimit - 1);
    p.degree = std::max({rho2.bandlimit - 1, p.Lp - 1, p.Lq - 1, rho1.bandlimit - 1});
    return p;
}

struct GeneralSO3Plan {
    int Lh, Lout, degree;
};

GeneralSO3Plan plan_so3_general(const RepSpectral& rho1, const RepSpectral& rho2, const KernelSO3& kappa,
                                const SpectralSO3Signal& f, std::optional<int> out_bandlimit) {
    GeneralSO3Plan p;
    p.Lout = out_bandlimit.value_or(std::min(kappa.bandlimit, f.bandlimit + rho1.bandlimit - 1 + rho2.bandlimit - 1));
    p.Lout = std::min(p.Lout, kappa.bandlimit);
    p.Lh = std::min(f.bandlimit + rho1.bandlimit - 1, p.Lout + rho2.bandlimit - 1);
    p.degree = std::max({rho1.bandlimit - 1, f.bandlimit - 1, rho2.bandlimit - 1, p.Lh - 1});
    return p;
}

void check_general(const RepSpectral& rho1, const RepSpectral& rho2, int kin, int kout, int fch, const char* what) {
    if (kin != rho1.dim || fch != rho1.dim || kout != rho2.dim) {
        std::ostringstream os;
        os << "kernel " << kout << "x" << kin << ", signal channels " << fch << ", representations " << rho2.dim
           << " and " << rho1.dim;
        shape_error(what, os.str());
    }
    if (!rho1.real_valued) throw std::invalid_argument(std::string(what) + ": input representation must be real");
}

}  // namespace

SpectralSO3Signal s2_conv_general(const RepSpectral& rho1, const RepSpectral& rho2, const KernelS2& kappa,
                                  const SpectralS2Signal& f, const CGTable& cg, std::optional<int> out_bandlimit) {
    check_general(rho1, rho2, kappa.in_channels, kappa.out_channels, f.channels, "s2_conv_general");
    const auto plan = plan_s2_general(rho1, rho2, kappa, f, out_bandlimit);
    require_cg(cg, plan.degree, "s2_conv_general");
    const int d1 = rho1.dim, d2 = rho2.dim, Lp = plan.Lp;
    const auto r1inv = inverse_blocks(rho1);

    // P[(nu, sigma, tau)]^l_{n1 m1} = kappa_{nu sigma}^l_{m1} conj(f_tau^l_{n1})
    std::vector<std::vector<cd>> P(static_cast<std::size_t>(d2) * d1 * d1, std::vector<cd>(so3_size(Lp)));
    for (int nu = 0; nu < d2; ++nu)
        for (int s = 0; s < d1; ++s)
            for (int t = 0; t < d1; ++t) {
                auto& blk = P[(nu * d1 + s) * d1 + t];
                for (int l = 0; l < Lp; ++l)
                    for (int n1 = -l; n1 <= l; ++n1)
                        for (int m1 = -l; m1 <= l; ++m1)
                            blk[so3_index(l, n1, m1)] = kappa.at(nu, s, l, m1) * std::conj(f.at(t, l, n1));
            }
    std::vector<char> rho2_nonzero(static_cast<std::size_t>(d2) * d2), rho1_nonzero(static_cast<std::size_t>(d1) * d1);
    for (int a = 0; a < d2; ++a)
        for (int b = 0; b < d2; ++b) rho2_nonzero[a * d2 + b] = !all_zero(rho2.element(a, b), rho2.bandlimit);
    for (int a = 0; a < d1; ++a)
        for (int b = 0; b < d1; ++b) rho1_nonzero[a * d1 + b] = !all_zero(r1inv[a * d1 + b].data(), rho1.bandlimit);

    auto out = SpectralSO3Signal::zeros(plan.Lout, d2);
#pragma omp parallel for schedule(dynamic)
    for (int mu = 0; mu < d2; ++mu) {
        cd* dst = out.coeffs.data() + static_cast<std::size_t>(mu) * so3_size(plan.Lout);
        std::vector<cd> Q(so3_size(plan.Lq));
        for (int s = 0; s < d1; ++s)
            for (int t = 0; t < d1; ++t) {
                if (!rho1_nonzero[s * d1 + t]) continue;
                std::fill(Q.begin(), Q.end(), cd(0.0));
                for (int nu = 0; nu < d2; ++nu) {
                    if (!rho2_nonzero[mu * d2 + nu]) continue;
                    so3_product_accumulate(rho2.element(mu, nu), rho2.bandlimit, P[(nu * d1 + s) * d1 + t].data(), Lp,
                                           Q.data(), plan.Lq, cg);
                }
                so3_product_accumulate(Q.data(), plan.Lq, r1inv[s * d1 + t].data(), rho1.bandlimit, dst, plan.Lout, cg);
            }
    }
    return out;
}

SpectralSO3Signal so3_conv_general(const RepSpectral& rho1, const RepSpectral& rho2, const KernelSO3& kappa,
                                   const SpectralSO3Signal& f, const CGTable& cg, std::optional<int> out_bandlimit) {
    check_general(rho1, rho2, kappa.in_channels, kappa.out_channels, f.channels, "so3_conv_general");
    const auto plan = plan_so3_general(rho1, rho2, kappa, f, out_bandlimit);
    require_cg(cg, plan.degree, "so3_conv_general");
    const int d1 = rho1.dim, d2 = rho2.dim, Lout = plan.Lout;
    const auto r1inv = inverse_blocks(rho1);

    // H_sigma = sum_tau rho1^{-1}_{sigma tau} f_tau
    std::vector<std::vector<cd>> H(d1, std::vector<cd>(so3_size(plan.Lh)));
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < d1; ++s)
        for (int t = 0; t < d1; ++t)
            so3_product_accumulate(r1inv[s * d1 + t].data(), rho1.bandlimit,
                                   f.coeffs.data() + static_cast<std::size_t>(t) * so3_size(f.bandlimit), f.bandlimit,
                                   H[s].data(), plan.Lh, cg);

    auto out = SpectralSO3Signal::zeros(Lout, d2);
#pragma omp parallel for schedule(dynamic)
    for (int mu = 0; mu < d2; ++mu) {
        std::vector<cd> G(so3_size(Lout));
        for (int nu = 0; nu < d2; ++nu) {
            if (all_zero(rho2.element(mu, nu), rho2.bandlimit)) continue;
            for (int s = 0; s < d1; ++s) {
                std::fill(G.begin(), G.end(), cd(0.0));
                so3_product_accumulate(rho2.element(mu, nu), rho2.bandlimit, H[s].data(), plan.Lh, G.data(), Lout, cg);
                for (int l = 0; l < Lout; ++l) {
                    const double scale = 8 * kPi * kPi / (2 * l + 1);
                    for (int m = -l; m <= l; ++m)
                        for (int n = -l; n <= l; ++n) {
                            cd acc = 0;
                            for (int p = -l; p <= l; ++p) acc += G[so3_index(l, m, p)] * kappa.at(nu, s, l, p, n);
                            out.at(mu, l, m, n) += scale * acc;
                        }
                }
            }
        }
    }
    return out;
}

SpectralSO3Signal s2_conv_general(const RepSpectral& rho1, const RepSpectral& rho2, const KernelS2& kappa,
                                  const SpectralS2Signal& f) {
    const auto plan = plan_s2_general(rho1, rho2, kappa, f, std::nullopt);
    return s2_conv_general(rho1, rho2, kappa, f, CGTable::load_or_build(plan.degree));
}

SpectralSO3Signal so3_conv_general(const RepSpectral& rho1, const RepSpectral& rho2, const KernelSO3& kappa,
                                   const SpectralSO3Signal& f) {
    const auto plan = plan_so3_general(rho1, rho2, kappa, f, std::nullopt);
    return so3_conv_general(rho1, rho2, kappa, f, CGTable::load_or_build(plan.degree));
}

int irrep_s2_conv_bandlimit(const FeatureType& out, const FeatureType& in, int kernel_L, int signal_L) {
    return std::min(kernel_L, signal_L) + out.max_degree() + in.max_degree();
}

int irrep_so3_conv_bandlimit(const FeatureType&, const FeatureType&, int kernel_L, int) { return kernel_L; }

SpectralSO3Signal irrep_s2_conv(const FeatureType& out_type, const FeatureType& in_type, const KernelS2& kappa,
                                const SpectralS2Signal& f, const CGTable& cg) {
    if (kappa.out_channels != out_type.dimension() || kappa.in_channels != in_type.dimension() ||
        f.channels != in_type.dimension())
        shape_error("irrep_s2_conv", "kernel or signal channels differ from the feature type dimensions");
    const int Lp = std::min(kappa.bandlimit, f.bandlimit);
    const int Lout = irrep_s2_conv_bandlimit(out_type, in_type, kappa.bandlimit, f.bandlimit);
    require_cg(cg, std::max(out_type.max_degree() + Lp - 1, in_type.max_degree()), "irrep_s2_conv");

    // F_p = (-1)^p f_{-p}: the sphere integral of Y_p against f.
    auto F = SpectralS2Signal::zeros(f.bandlimit, f.channels);
    for (int c = 0; c < f.channels; ++c)
        for (int l = 0; l < f.bandlimit; ++l)
            for (int p = -l; p <= l; ++p) F.at(c, l, p) = ((std::abs(p) % 2) ? -1.0 : 1.0) * f.at(c, l, -p);

    const auto out_blocks = out_type.blocks();
    const auto in_blocks = in_type.blocks();
    struct Task {
        FeatureType::Block blk;
        int nu;
    };
    std::vector<Task> tasks;
    for (const auto& b : out_blocks)
        for (int nu = -b.degree; nu <= b.degree; ++nu) tasks.push_back({b, nu});

    auto out = SpectralSO3Signal::zeros(Lout, out_type.dimension());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        const int lam = tasks[ti].blk.degree, oo = tasks[ti].blk.offset, nu = tasks[ti].nu;
        const int LJ = Lp + lam;
        cd* dst = out.coeffs.data() + static_cast<std::size_t>(oo + nu + lam) * so3_size(Lout);
        for (const auto& ib : in_blocks) {
            const int th = ib.degree, io = ib.offset, w = 2 * th + 1;
            // A[(tau, pi)]^J_{MN} with M = nu + p, N = rho + q
            std::vector<cd> A(static_cast<std::size_t>(w) * w * so3_size(LJ), cd(0.0));
            for (int rho = -lam; rho <= lam; ++rho)
                for (int tau = -th; tau <= th; ++tau)
                    for (int j = 0; j < Lp; ++j)
                        for (int q = -j; q <= j; ++q) {
                            const cd kv = kappa.at(oo + rho + lam, io + tau + th, j, q);
                            if (kv == cd(0.0)) continue;
                            for (int pi = -th; pi <= th; ++pi) {
                                cd* a = A.data() + static_cast<std::size_t>((tau + th) * w + (pi + th)) * so3_size(LJ);
                                for (int p = -j; p <= j; ++p) {
                                    const cd v = kv * F.at(io + pi + th, j, p);
                                    if (v == cd(0.0)) continue;
                                    const int M = nu + p, N = rho + q;
                                    const int lo = std::max({std::abs(lam - j), std::abs(M), std::abs(N)});
                                    for (int J = lo; J <= lam + j; ++J)
                                        a[so3_index(J, M, N)] += cg(lam, nu, j, p, J) * cg(lam, rho, j, q, J) * v;
                                }
                            }
                        }
            for (int tau = -th; tau <= th; ++tau)
                for (int pi = -th; pi <= th; ++pi) {
                    const double sgn = (std::abs(tau - pi) % 2) ? -1.0 : 1.0;
                    const cd* a = A.data() + static_cast<std::size_t>((tau + th) * w + (pi + th)) * so3_size(LJ);
                    for (int J = 0; J < LJ; ++J)
                        for (int M = -J; M <= J; ++M)
                            for (int N = -J; N <= J; ++N) {
                                const cd v = a[so3_index(J, M, N)];
                                if (v == cd(0.0)) continue;
                                const int m = M - pi, n = N - tau;
                                const int lo = std::max({std::abs(J - th), std::abs(m), std::abs(n)});
                                const int hi = std::min(J + th, Lout - 1);
                                for (int l = lo; l <= hi; ++l)
                                    dst[so3_index(l, m, n)] += sgn * cg(J, M, th, -pi, l) * cg(J, N, th, -tau, l) * v;
                            }
                }
        }
    }
    return out;
}

SpectralSO3Signal irrep_so3_conv(const FeatureType& out_type, const FeatureType& in_type, const KernelSO3& kappa,
                                 const SpectralSO3Signal& f, const CGTable& cg) {
    if (kappa.out_channels != out_type.dimension() || kappa.in_channels != in_type.dimension() ||
        f.channels != in_type.dimension())
        shape_error("irrep_so3_conv", "kernel or signal channels differ from the feature type dimensions");
    const int Lf = f.bandlimit, Lout = kappa.bandlimit;
    require_cg(cg, std::max(in_type.max_degree() + Lf - 1, out_type.max_degree()), "irrep_so3_conv");

    const auto in_blocks = in_type.blocks();
    // E[(block, tau)]^J_{MN} = sum_pi (-1)^{tau-pi} [D^th_{-pi,-tau} f_pi]^J_{MN}
    std::vector<std::vector<cd>> E;
    std::vector<int> E_start, E_L;
    for (const auto& ib : in_blocks) {
        E_start.push_back(static_cast<int>(E.size()));
        E_L.push_back(Lf + ib.degree);
        for (int t = 0; t < 2 * ib.degree + 1; ++t) E.emplace_back(so3_size(Lf + ib.degree), cd(0.0));
    }
#pragma omp parallel for schedule(dynamic)
    for (std::size_t bi = 0; bi < in_blocks.size(); ++bi) {
        const int th = in_blocks[bi].degree, io = in_blocks[bi].offset, LE = E_L[bi];
        for (int tau = -th; tau <= th; ++tau) {
            cd* e = E[E_start[bi] + tau + th].data();
            for (int pi = -th; pi <= th; ++pi) {
                const double sgn = (std::abs(tau - pi) % 2) ? -1.0 : 1.0;
                for (int j = 0; j < Lf; ++j)
                    for (int q = -j; q <= j; ++q)
                        for (int r = -j; r <= j; ++r) {
                            const cd v = f.at(io + pi + th, j, q, r);
                            if (v == cd(0.0)) continue;
                            const int M = q - pi, N = r - tau;
                            const int lo = std::max({std::abs(th - j), std::abs(M), std::abs(N)});
                            for (int J = lo; J <= std::min(th + j, LE - 1); ++J)
                                e[so3_index(J, M, N)] += sgn * cg(th, -pi, j, q, J) * cg(th, -tau, j, r, J) * v;
                        }
            }
        }
    }

    const auto out_blocks = out_type.blocks();
    struct Task {
        FeatureType::Block blk;
        int nu;
    };
    std::vector<Task> tasks;
    for (const auto& b : out_blocks)
        for (int nu = -b.degree; nu <= b.degree; ++nu) tasks.push_back({b, nu});

    auto out = SpectralSO3Signal::zeros(Lout, out_type.dimension());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
        const int lam = tasks[ti].blk.degree, oo = tasks[ti].blk.offset, nu = tasks[ti].nu;
        const int och = oo + nu + lam;
        std::vector<cd> G(so3_size(Lout));
        for (std::size_t bi = 0; bi < in_blocks.size(); ++bi) {
            const int th = in_blocks[bi].degree, io = in_blocks[bi].offset, LE = E_L[bi];
            for (int rho = -lam; rho <= lam; ++rho)
                for (int tau = -th; tau <= th; ++tau) {
                    std::fill(G.begin(), G.end(), cd(0.0));
                    const cd* e = E[E_start[bi] + tau + th].data();
                    for (int J = 0; J < LE; ++J)
                        for (int M = -J; M <= J; ++M)
                            for (int N = -J; N <= J; ++N) {
                                const cd v = e[so3_index(J, M, N)];
                                if (v == cd(0.0)) continue;
                                const int m = nu + M, p = rho + N;
                                const int lo = std::max({std::abs(lam - J), std::abs(m), std::abs(p)});
                                const int hi = std::min(lam + J, Lout - 1);
                                for (int l = lo; l <= hi; ++l)
                                    G[so3_index(l, m, p)] += cg(lam, nu, J, M, l) * cg(lam, rho, J, N, l) * v;
                            }
                    for (int l = 0; l < Lout; ++l) {
                        const double scale = 8 * kPi * kPi / (2 * l + 1);
                        for (int m = -l; m <= l; ++m)
                            for (int n = -l; n <= l; ++n) {
                                cd acc = 0;
                                for (int p = -l; p <= l; ++p)
                                    acc += G[so3_index(l, m, p)] * kappa.at(oo + rho + lam, io + tau + th, l, p, n);
                                out.at(och, l, m, n) += scale * acc;
                            }
                    }
                }
        }
    }
    return out;
}

SpectralS2Signal mix_channels(const CMatrix& U, const SpectralS2Signal& f) {
    if (U.cols() != f.channels) shape_error("mix_channels", "matrix columns differ from channel count");
    auto out = SpectralS2Signal::zeros(f.bandlimit, static_cast<int>(U.rows()));
    const int n = s2_size(f.bandlimit);
    for (int c = 0; c < U.rows(); ++c)
        for (int d = 0; d < f.channels; ++d) {
            if (U(c, d) == cd(0.0)) continue;
            for (int i = 0; i < n; ++i)
                out.coeffs[static_cast<std::size_t>(c) * n + i] += U(c, d) * f.coeffs[static_cast<std::size_t>(d) * n + i];
        }
    return out;
}

SpectralSO3Signal mix_channels(const CMatrix& U, const SpectralSO3Signal& f) {
    if (U.cols() != f.channels) shape_error("mix_channels", "matrix columns differ from channel count");
    auto out = SpectralSO3Signal::zeros(f.bandlimit, static_cast<int>(U.rows()));
    const int n = so3_size(f.bandlimit);
    for (int c = 0; c < U.rows(); ++c)
        for (int d = 0; d < f.channels; ++d) {
            if (U(c, d) == cd(0.0)) continue;
            for (int i = 0; i < n; ++i)
                out.coeffs[static_cast<std::size_t>(c) * n + i] += U(c, d) * f.coeffs[static_cast<std::size_t>(d) * n + i];
        }
    return out;
}

namespace {

template <typename K>
K mix_kernel_impl(const CMatrix& A, const K& k, const CMatrix& B, int block) {
    if (A.cols() != k.out_channels || B.rows() != k.in_channels)
        shape_error("mix_kernel", "matrix sizes differ from kernel channels");
    K out = K::zeros(k.bandlimit, static_cast<int>(A.rows()), static_cast<int>(B.cols()));
    for (int o = 0; o < A.rows(); ++o)
        for (int i = 0; i < B.cols(); ++i)
            for (int a = 0; a < k.out_channels; ++a) {
                if (A(o, a) == cd(0.0)) continue;
                for (int b = 0; b < k.in_channels; ++b) {
                    const cd w = A(o, a) * B(b, i);
                    if (w == cd(0.0)) continue;
                    const cd* src = k.coeffs.data() + (static_cast<std::size_t>(a) * k.in_channels + b) * block;
                    cd* dst = out.coeffs.data() + (static_cast<std::size_t>(o) * out.in_channels + i) * block;
                    for (int x = 0; x < block; ++x) dst[x] += w * src[x];
                }
            }
    return out;
}

}  // namespace

KernelS2 mix_kernel(const CMatrix& A, const KernelS2& k, const CMatrix& B) {
    return mix_kernel_impl(A, k, B, s2_size(k.bandlimit));
}

KernelSO3 mix_kernel(const CMatrix& A, const KernelSO3& k, const CMatrix& B) {
    return mix_kernel_impl(A, k, B, so3_size(k.bandlimit));
}

}  // namespace equivar
