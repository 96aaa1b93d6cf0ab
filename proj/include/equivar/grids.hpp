#pragma once

#include "equivar/harmonics.hpp"

#include <vector>

namespace equivar {

// Coefficient index helpers. S2 blocks are flattened as l*l + (m + l); SO(3)
// blocks start at so3_offset(l) and are row-major in (m, n).
inline int s2_index(int l, int m) { return l * l + l + m; }
inline int so3_offset(int l) { return l * (2 * l - 1) * (2 * l + 1) / 3; }
inline int so3_index(int l, int m, int n) { return so3_offset(l) + (m + l) * (2 * l + 1) + (n + l); }
inline int s2_size(int L) { return L * L; }
inline int so3_size(int L) { return so3_offset(L); }

struct SpectralS2Signal {
    int bandlimit = 0;
    int channels = 0;
    bool real_valued = false;
    std::vector<cd> coeffs;  // (channel, l, m)

    static SpectralS2Signal zeros(int L, int C);
    cd& at(int c, int l, int m) { return coeffs[static_cast<std::size_t>(c) * s2_size(bandlimit) + s2_index(l, m)]; }
    cd at(int c, int l, int m) const {
        return coeffs[static_cast<std::size_t>(c) * s2_size(bandlimit) + s2_index(l, m)];
    }
    // Largest violation of f_{l,-m} = (-1)^m conj(f_{lm}).
    double real_symmetry_residual() const;
};

struct SpectralSO3Signal {
    int bandlimit = 0;
    int channels = 0;
    bool real_valued = false;
    std::vector<cd> coeffs;  // (channel, l, m, n)

    static SpectralSO3Signal zeros(int L, int C);
    cd& at(int c, int l, int m, int n) {
        return coeffs[static_cast<std::size_t>(c) * so3_size(bandlimit) + so3_index(l, m, n)];
    }
    cd at(int c, int l, int m, int n) const {
        return coeffs[static_cast<std::size_t>(c) * so3_size(bandlimit) + so3_index(l, m, n)];
    }
    double real_symmetry_residual() const;
};

class S2Grid {
public:
    explicit S2Grid(int L);

    int bandlimit() const { return L_; }
    int rings() const { return 2 * L_; }
    int longitudes() const { return 2 * L_; }
    int size() const { return 4 * L_ * L_; }
    double theta(int j) const { return theta_[j]; }
    double phi(int k) const;
    // Quadrature weight of every node on ring j; all weights sum to 4 pi.
    double weight(int j) const { return weight_[j]; }
    // Y^l_m(theta_j, phi) = legendre(j, l, m) e^{i m phi}.
    double legendre(int j, int l, int m) const {
        return legendre_[static_cast<std::size_t>(j) * s2_size(L_) + s2_index(l, m)];
    }

private:
    int L_;
    std::vector<double> theta_, weight_, legendre_;
};

class SO3Grid {
public:
    explicit SO3Grid(int L);

    int bandlimit() const { return L_; }
    int side() const { return 2 * L_; }
    int size() const { return 8 * L_ * L_ * L_; }
    double alpha(int a) const;
    double beta(int b) const { return beta_[b]; }
    double gamma(int c) const { return alpha(c); }
    EulerZYZ node(int a, int b, int c) const { return {alpha(a), beta(b), gamma(c)}; }
    // Weight of every node with beta index b, including the sin(beta) measure; sums to 8 pi^2.
    double weight(int b) const { return weight_[b]; }
    double small_d(int b, int l, int m, int n) const {
        return dtable_[static_cast<std::size_t>(b) * so3_size(L_) + so3_index(l, m, n)];
    }

private:
    int L_;
    std::vector<double> beta_, weight_, dtable_;
};

// Equiangular quadrature weights in beta for bandlimit L: sum 2, exact for
// polynomials in cos(beta) of degree below 2L.
std::vector<double> beta_quadrature_weights(int L);

// Spatial samples. S2 layout (channel, theta j, phi k); SO(3) layout
// (channel, beta b, alpha a, gamma c).
struct S2Samples {
    int bandlimit = 0;
    int channels = 0;
    std::vector<cd> values;

    static S2Samples zeros(int L, int C);
    cd& at(int c, int j, int k) { return values[(static_cast<std::size_t>(c) * 2 * bandlimit + j) * 2 * bandlimit + k]; }
    cd at(int c, int j, int k) const {
        return values[(static_cast<std::size_t>(c) * 2 * bandlimit + j) * 2 * bandlimit + k];
    }
};

struct SO3Samples {
    int bandlimit = 0;
    int channels = 0;
    std::vector<cd> values;

    static SO3Samples zeros(int L, int C);
    cd& at(int ch, int b, int a, int c) {
        const std::size_t s = 2 * bandlimit;
        return values[((static_cast<std::size_t>(ch) * s + b) * s + a) * s + c];
    }
    cd at(int ch, int b, int a, int c) const {
        const std::size_t s = 2 * bandlimit;
        return values[((static_cast<std::size_t>(ch) * s + b) * s + a) * s + c];
    }
};

// Separated transforms, parallel over channels and rings / degree blocks.
SpectralS2Signal s2_analysis(const S2Grid& grid, const S2Samples& samples);
S2Samples s2_synthesis(const SpectralS2Signal& sig, const S2Grid& grid);
SpectralSO3Signal so3_analysis(const SO3Grid& grid, const SO3Samples& samples);
SO3Samples so3_synthesis(const SpectralSO3Signal& sig, const SO3Grid& grid);

// Serial direct quadrature sums over every node; slow but independent of the
// separated fast path.
namespace reference {
SpectralS2Signal s2_analysis(const S2Grid& grid, const S2Samples& samples);
S2Samples s2_synthesis(const SpectralS2Signal& sig, const S2Grid& grid);
SpectralSO3Signal so3_analysis(const SO3Grid& grid, const SO3Samples& samples);
SO3Samples so3_synthesis(const SpectralSO3Signal& sig, const SO3Grid& grid);
}  // namespace reference

// Pointwise evaluation of the harmonic expansion, one value per channel.
std::vector<cd> s2_evaluate(const SpectralS2Signal& sig, double theta, double phi);
std::vector<cd> so3_evaluate(const SpectralSO3Signal& sig, const EulerZYZ& g);

// Coefficients of x -> f(g^{-1} x) and R -> f(g^{-1} R).
SpectralS2Signal rotate_spectral_s2(const SpectralS2Signal& sig, const EulerZYZ& g);
SpectralSO3Signal rotate_spectral_so3(const SpectralSO3Signal& sig, const EulerZYZ& g);

// Quadrature integral of |f|^2 summed over channels, and the matching
// coefficient-side sums (SO(3) carries 8 pi^2 / (2l + 1) per degree).
double s2_norm_squared(const S2Grid& grid, const S2Samples& samples);
double so3_norm_squared(const SO3Grid& grid, const SO3Samples& samples);
double s2_coeff_norm_squared(const SpectralS2Signal& sig);
double so3_coeff_norm_squared(const SpectralSO3Signal& sig);

}  // namespace equivar
