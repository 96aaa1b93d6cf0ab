#include "equivar/grids.hpp"
#include "equivar/errors.hpp"

#include <cmath>
#include <sstream>

namespace equivar {

namespace {

void check_samples(int grid_L, int L, int channels, std::size_t have, std::size_t per_channel, const char* what) {
    if (grid_L != L || channels <= 0 || have != per_channel * channels) {
        std::ostringstream os;
        os << what << ": samples (bandlimit " << L << ", " << channels << " channels, " << have
           << " values) do not match grid bandlimit " << grid_L;
        throw ShapeMismatch(os.str());
    }
}

void check_shape(int grid_L, int L, int channels, std::size_t have, std::size_t per_channel, const char* what) {
    if (grid_L != L || channels <= 0 || have != per_channel * channels) {
        std::ostringstream os;
        os << what << ": coefficients (bandlimit " << L << ", " << channels
           << " channels) do not match grid bandlimit " << grid_L;
        throw ShapeMismatch(os.str());
    }
}

// e^{i m phi_k} for m = -(L-1)..(L-1), k < 2L.
std::vector<cd> twiddles(int L) {
    const int M = 2 * L - 1, K = 2 * L;
    std::vector<cd> t(static_cast<std::size_t>(M) * K);
    for (int m = -(L - 1); m <= L - 1; ++m)
        for (int k = 0; k < K; ++k) t[(m + L - 1) * K + k] = std::polar(1.0, m * kPi * k / L);
    return t;
}

}  // namespace

SpectralS2Signal SpectralS2Signal::zeros(int L, int C) {
    SpectralS2Signal s;
    s.bandlimit = L;
    s.channels = C;
    s.coeffs.assign(static_cast<std::size_t>(C) * s2_size(L), cd(0.0));
    return s;
}

double SpectralS2Signal::real_symmetry_residual() const {
    double r = 0.0;
    for (int c = 0; c < channels; ++c)
        for (int l = 0; l < bandlimit; ++l)
            for (int m = -l; m <= l; ++m) {
                const double sgn = (std::abs(m) % 2) ? -1.0 : 1.0;
                r = std::max(r, std::abs(at(c, l, -m) - sgn * std::conj(at(c, l, m))));
            }
    return r;
}

SpectralSO3Signal SpectralSO3Signal::zeros(int L, int C) {
    SpectralSO3Signal s;
    s.bandlimit = L;
    s.channels = C;
    s.coeffs.assign(static_cast<std::size_t>(C) * so3_size(L), cd(0.0));
    return s;
}

double SpectralSO3Signal::real_symmetry_residual() const {
    double r = 0.0;
    for (int c = 0; c < channels; ++c)
        for (int l = 0; l < bandlimit; ++l)
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) {
                    const double sgn = (std::abs(m - n) % 2) ? -1.0 : 1.0;
                    r = std::max(r, std::abs(at(c, l, -m, -n) - sgn * std::conj(at(c, l, m, n))));
                }
    return r;
}

S2Samples S2Samples::zeros(int L, int C) {
    S2Samples s;
    s.bandlimit = L;
    s.channels = C;
    s.values.assign(static_cast<std::size_t>(C) * 4 * L * L, cd(0.0));
    return s;
}

SO3Samples SO3Samples::zeros(int L, int C) {
    SO3Samples s;
    s.bandlimit = L;
    s.channels = C;
    s.values.assign(static_cast<std::size_t>(C) * 8 * L * L * L, cd(0.0));
    return s;
}

std::vector<double> beta_quadrature_weights(int L) {
    std::vector<double> w(2 * L);
    for (int j = 0; j < 2 * L; ++j) {
        const double b = kPi * (2 * j + 1) / (4.0 * L);
        double s = 0.0;
        for (int k = 0; k < L; ++k) s += std::sin((2 * k + 1) * b) / (2 * k + 1);
        w[j] = 2.0 / L * std::sin(b) * s;
    }
    return w;
}

S2Grid::S2Grid(int L) : L_(L) {
    if (L <= 0) throw ShapeMismatch("bandlimit must be positive");
    const auto w = beta_quadrature_weights(L);
    theta_.resize(2 * L);
    weight_.resize(2 * L);
    legendre_.assign(static_cast<std::size_t>(2 * L) * s2_size(L), 0.0);
    for (int j = 0; j < 2 * L; ++j) {
        theta_[j] = kPi * (2 * j + 1) / (4.0 * L);
        weight_[j] = w[j] * kPi / L;
        const auto P = normalized_legendre(L, theta_[j]);
        for (int l = 0; l < L; ++l)
            for (int m = 0; m <= l; ++m) {
                const double v = P[static_cast<std::size_t>(l) * (l + 1) / 2 + m];
                legendre_[static_cast<std::size_t>(j) * s2_size(L) + s2_index(l, m)] = v;
                legendre_[static_cast<std::size_t>(j) * s2_size(L) + s2_index(l, -m)] = (m % 2 ? -v : v);
            }
    }
}

double S2Grid::phi(int k) const { return kPi * k / L_; }

SO3Grid::SO3Grid(int L) : L_(L) {
    if (L <= 0) throw ShapeMismatch("bandlimit must be positive");
    const auto w = beta_quadrature_weights(L);
    beta_.resize(2 * L);
    weight_.resize(2 * L);
    dtable_.assign(static_cast<std::size_t>(2 * L) * so3_size(L), 0.0);
#pragma omp parallel for schedule(static)
    for (int b = 0; b < 2 * L; ++b) {
        beta_[b] = kPi * (2 * b + 1) / (4.0 * L);
        weight_[b] = w[b] * (kPi / L) * (kPi / L);
        for (int m = -(L - 1); m <= L - 1; ++m)
            for (int n = -(L - 1); n <= L - 1; ++n) {
                const auto col = wigner_d_column(m, n, L - 1, beta_[b]);
                for (int l = std::max(std::abs(m), std::abs(n)); l < L; ++l)
                    dtable_[static_cast<std::size_t>(b) * so3_size(L) + so3_index(l, m, n)] = col[l];
            }
    }
}

double SO3Grid::alpha(int a) const { return kPi * a / L_; }

SpectralS2Signal s2_analysis(const S2Grid& grid, const S2Samples& samples) {
    const int L = grid.bandlimit();
    check_samples(L, samples.bandlimit, samples.channels, samples.values.size(), grid.size(), "s2_analysis");
    const int C = samples.channels, R = 2 * L, M = 2 * L - 1;
    const auto tw = twiddles(L);
    std::vector<cd> F(static_cast<std::size_t>(C) * R * M);
#pragma omp parallel for collapse(2) schedule(static)
    for (int c = 0; c < C; ++c)
        for (int j = 0; j < R; ++j)
            for (int mi = 0; mi < M; ++mi) {
                cd s = 0;
                for (int k = 0; k < R; ++k) s += samples.at(c, j, k) * std::conj(tw[mi * R + k]);
                F[(static_cast<std::size_t>(c) * R + j) * M + mi] = s;
            }
    auto out = SpectralS2Signal::zeros(L, C);
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (int c = 0; c < C; ++c)
        for (int l = 0; l < L; ++l)
            for (int m = -l; m <= l; ++m) {
                cd s = 0;
                for (int j = 0; j < R; ++j)
                    s += grid.weight(j) * grid.legendre(j, l, m) * F[(static_cast<std::size_t>(c) * R + j) * M + m + L - 1];
                out.at(c, l, m) = s;
            }
    return out;
}

S2Samples s2_synthesis(const SpectralS2Signal& sig, const S2Grid& grid) {
    const int L = grid.bandlimit();
    check_shape(L, sig.bandlimit, sig.channels, sig.coeffs.size(), s2_size(L), "s2_synthesis");
    const int C = sig.channels, R = 2 * L, M = 2 * L - 1;
    const auto tw = twiddles(L);
    auto out = S2Samples::zeros(L, C);
#pragma omp parallel for collapse(2) schedule(static)
    for (int c = 0; c < C; ++c)
        for (int j = 0; j < R; ++j) {
            std::vector<cd> G(M, cd(0.0));
            for (int l = 0; l < L; ++l)
                for (int m = -l; m <= l; ++m) G[m + L - 1] += sig.at(c, l, m) * grid.legendre(j, l, m);
            for (int k = 0; k < R; ++k) {
                cd s = 0;
                for (int mi = 0; mi < M; ++mi) s += G[mi] * tw[mi * R + k];
                out.at(c, j, k) = s;
            }
        }
    return out;
}

SpectralSO3Signal so3_analysis(const SO3Grid& grid, const SO3Samples& samples) {
    const int L = grid.bandlimit();
    check_samples(L, samples.bandlimit, samples.channels, samples.values.size(), grid.size(), "so3_analysis");
    const int C = samples.channels, S = 2 * L, M = 2 * L - 1;
    const auto tw = twiddles(L);
    // F[(ch, b)][m][n] = sum_{a,c} f e^{i m alpha_a} e^{i n gamma_c}
    std::vector<cd> F(static_cast<std::size_t>(C) * S * M * M);
#pragma omp parallel for collapse(2) schedule(static)
    for (int ch = 0; ch < C; ++ch)
        for (int b = 0; b < S; ++b) {
            std::vector<cd> A(static_cast<std::size_t>(S) * M);
            for (int a = 0; a < S; ++a)
                for (int ni = 0; ni < M; ++ni) {
                    cd s = 0;
                    for (int c = 0; c < S; ++c) s += samples.at(ch, b, a, c) * tw[ni * S + c];
                    A[a * M + ni] = s;
                }
            cd* dst = F.data() + (static_cast<std::size_t>(ch) * S + b) * M * M;
            for (int mi = 0; mi < M; ++mi)
                for (int ni = 0; ni < M; ++ni) {
                    cd s = 0;
                    for (int a = 0; a < S; ++a) s += A[a * M + ni] * tw[mi * S + a];
                    dst[mi * M + ni] = s;
                }
        }
    auto out = SpectralSO3Signal::zeros(L, C);
#pragma omp parallel for collapse(2) schedule(dynamic)
    for (int ch = 0; ch < C; ++ch)
        for (int l = 0; l < L; ++l) {
            const double norm = (2 * l + 1) / (8 * kPi * kPi);
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) {
                    cd s = 0;
                    for (int b = 0; b < S; ++b)
                        s += grid.weight(b) * grid.small_d(b, l, m, n) *
                             F[((static_cast<std::size_t>(ch) * S + b) * M + m + L - 1) * M + n + L - 1];
                    out.at(ch, l, m, n) = norm * s;
                }
        }
    return out;
}

SO3Samples so3_synthesis(const SpectralSO3Signal& sig, const SO3Grid& grid) {
    const int L = grid.bandlimit();
    check_shape(L, sig.bandlimit, sig.channels, sig.coeffs.size(), so3_size(L), "so3_synthesis");
    const int C = sig.channels, S = 2 * L, M = 2 * L - 1;
    const auto tw = twiddles(L);
    auto out = SO3Samples::zeros(L, C);
#pragma omp parallel for collapse(2) schedule(static)
    for (int ch = 0; ch < C; ++ch)
        for (int b = 0; b < S; ++b) {
            std::vector<cd> G(static_cast<std::size_t>(M) * M, cd(0.0));
            for (int l = 0; l < L; ++l)
                for (int m = -l; m <= l; ++m)
                    for (int n = -l; n <= l; ++n)
                        G[(m + L - 1) * M + n + L - 1] += sig.at(ch, l, m, n) * grid.small_d(b, l, m, n);
            std::vector<cd> B(static_cast<std::size_t>(M) * S);
            for (int mi = 0; mi < M; ++mi)
                for (int c = 0; c < S; ++c) {
                    cd s = 0;
                    for (int ni = 0; ni < M; ++ni) s += G[mi * M + ni] * std::conj(tw[ni * S + c]);
                    B[mi * S + c] = s;
                }
            for (int a = 0; a < S; ++a)
                for (int c = 0; c < S; ++c) {
                    cd s = 0;
                    for (int mi = 0; mi < M; ++mi) s += B[mi * S + c] * std::conj(tw[mi * S + a]);
                    out.at(ch, b, a, c) = s;
                }
        }
    return out;
}

namespace reference {

SpectralS2Signal s2_analysis(const S2Grid& grid, const S2Samples& samples) {
    const int L = grid.bandlimit();
    check_samples(L, samples.bandlimit, samples.channels, samples.values.size(), grid.size(), "s2_analysis");
    auto out = SpectralS2Signal::zeros(L, samples.channels);
    for (int j = 0; j < 2 * L; ++j)
        for (int k = 0; k < 2 * L; ++k) {
            const auto Y = sph_harm_all(L, grid.theta(j), grid.phi(k));
            for (int c = 0; c < samples.channels; ++c)
                for (int i = 0; i < s2_size(L); ++i)
                    out.coeffs[static_cast<std::size_t>(c) * s2_size(L) + i] +=
                        grid.weight(j) * samples.at(c, j, k) * std::conj(Y[i]);
        }
    return out;
}

S2Samples s2_synthesis(const SpectralS2Signal& sig, const S2Grid& grid) {
    const int L = grid.bandlimit();
    check_shape(L, sig.bandlimit, sig.channels, sig.coeffs.size(), s2_size(L), "s2_synthesis");
    auto out = S2Samples::zeros(L, sig.channels);
    for (int j = 0; j < 2 * L; ++j)
        for (int k = 0; k < 2 * L; ++k) {
            const auto Y = sph_harm_all(L, grid.theta(j), grid.phi(k));
            for (int c = 0; c < sig.channels; ++c) {
                cd s = 0;
                for (int i = 0; i < s2_size(L); ++i) s += sig.coeffs[static_cast<std::size_t>(c) * s2_size(L) + i] * Y[i];
                out.at(c, j, k) = s;
            }
        }
    return out;
}

SpectralSO3Signal so3_analysis(const SO3Grid& grid, const SO3Samples& samples) {
    const int L = grid.bandlimit(), S = 2 * L;
    check_samples(L, samples.bandlimit, samples.channels, samples.values.size(), grid.size(), "so3_analysis");
    auto out = SpectralSO3Signal::zeros(L, samples.channels);
    for (int b = 0; b < S; ++b)
        for (int a = 0; a < S; ++a)
            for (int c = 0; c < S; ++c) {
                const EulerZYZ g = grid.node(a, b, c);
                for (int l = 0; l < L; ++l) {
                    const CMatrix D = wigner_D(l, g);
                    const double norm = (2 * l + 1) / (8 * kPi * kPi) * grid.weight(b);
                    for (int ch = 0; ch < samples.channels; ++ch)
                        for (int m = -l; m <= l; ++m)
                            for (int n = -l; n <= l; ++n)
                                out.at(ch, l, m, n) += norm * samples.at(ch, b, a, c) * std::conj(D(m + l, n + l));
                }
            }
    return out;
}

SO3Samples so3_synthesis(const SpectralSO3Signal& sig, const SO3Grid& grid) {
    const int L = grid.bandlimit(), S = 2 * L;
    check_shape(L, sig.bandlimit, sig.channels, sig.coeffs.size(), so3_size(L), "so3_synthesis");
    auto out = SO3Samples::zeros(L, sig.channels);
    for (int b = 0; b < S; ++b)
        for (int a = 0; a < S; ++a)
            for (int c = 0; c < S; ++c) {
                const EulerZYZ g = grid.node(a, b, c);
                for (int l = 0; l < L; ++l) {
                    const CMatrix D = wigner_D(l, g);
                    for (int ch = 0; ch < sig.channels; ++ch)
                        for (int m = -l; m <= l; ++m)
                            for (int n = -l; n <= l; ++n) out.at(ch, b, a, c) += sig.at(ch, l, m, n) * D(m + l, n + l);
                }
            }
    return out;
}

}  // namespace reference

std::vector<cd> s2_evaluate(const SpectralS2Signal& sig, double theta, double phi) {
    const auto Y = sph_harm_all(sig.bandlimit, theta, phi);
    std::vector<cd> out(sig.channels, cd(0.0));
    for (int c = 0; c < sig.channels; ++c)
        for (int i = 0; i < s2_size(sig.bandlimit); ++i)
            out[c] += sig.coeffs[static_cast<std::size_t>(c) * s2_size(sig.bandlimit) + i] * Y[i];
    return out;
}

std::vector<cd> so3_evaluate(const SpectralSO3Signal& sig, const EulerZYZ& g) {
    std::vector<cd> out(sig.channels, cd(0.0));
    for (int l = 0; l < sig.bandlimit; ++l) {
        const CMatrix D = wigner_D(l, g);
        for (int c = 0; c < sig.channels; ++c)
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) out[c] += sig.at(c, l, m, n) * D(m + l, n + l);
    }
    return out;
}

SpectralS2Signal rotate_spectral_s2(const SpectralS2Signal& sig, const EulerZYZ& g) {
    SpectralS2Signal out = sig;
#pragma omp parallel for schedule(dynamic)
    for (int l = 0; l < sig.bandlimit; ++l) {
        const CMatrix D = wigner_D(l, g);
        for (int c = 0; c < sig.channels; ++c)
            for (int m = -l; m <= l; ++m) {
                cd s = 0;
                for (int n = -l; n <= l; ++n) s += D(m + l, n + l) * sig.at(c, l, n);
                out.at(c, l, m) = s;
            }
    }
    return out;
}

SpectralSO3Signal rotate_spectral_so3(const SpectralSO3Signal& sig, const EulerZYZ& g) {
    SpectralSO3Signal out = sig;
#pragma omp parallel for schedule(dynamic)
    for (int l = 0; l < sig.bandlimit; ++l) {
        const CMatrix D = wigner_D(l, g);
        for (int c = 0; c < sig.channels; ++c)
            for (int p = -l; p <= l; ++p)
                for (int n = -l; n <= l; ++n) {
                    cd s = 0;
                    for (int m = -l; m <= l; ++m) s += std::conj(D(p + l, m + l)) * sig.at(c, l, m, n);
                    out.at(c, l, p, n) = s;
                }
    }
    return out;
}

double s2_norm_squared(const S2Grid& grid, const S2Samples& samples) {
    double s = 0.0;
    for (int c = 0; c < samples.channels; ++c)
        for (int j = 0; j < grid.rings(); ++j)
            for (int k = 0; k < grid.longitudes(); ++k) s += grid.weight(j) * std::norm(samples.at(c, j, k));
    return s;
}

double so3_norm_squared(const SO3Grid& grid, const SO3Samples& samples) {
    double s = 0.0;
    const int S = grid.side();
    for (int ch = 0; ch < samples.channels; ++ch)
        for (int b = 0; b < S; ++b)
            for (int a = 0; a < S; ++a)
                for (int c = 0; c < S; ++c) s += grid.weight(b) * std::norm(samples.at(ch, b, a, c));
    return s;
}

double s2_coeff_norm_squared(const SpectralS2Signal& sig) {
    double s = 0.0;
    for (const cd& v : sig.coeffs) s += std::norm(v);
    return s;
}

double so3_coeff_norm_squared(const SpectralSO3Signal& sig) {
    double s = 0.0;
    for (int c = 0; c < sig.channels; ++c)
        for (int l = 0; l < sig.bandlimit; ++l) {
            const double f = 8 * kPi * kPi / (2 * l + 1);
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) s += f * std::norm(sig.at(c, l, m, n));
        }
    return s;
}

}  // namespace equivar
