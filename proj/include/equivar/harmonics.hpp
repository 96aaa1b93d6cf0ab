#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>
#include <vector>

namespace equivar {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;

constexpr double kPi = 3.14159265358979323846;

// Active ZYZ Euler angles: R = Rz(alpha) Ry(beta) Rz(gamma).
struct EulerZYZ {
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
};

// Sign convention of the associated Legendre functions. The second value is a
// deliberate mutation used by the audit to demonstrate that checks catch it.
enum class PhaseConvention { CondonShortley, NoCondonShortley };

void set_phase_convention(PhaseConvention c);
PhaseConvention phase_convention();

// Row m, column n, both shifted by +ell.
RMatrix wigner_d_small(int ell, double beta);
CMatrix wigner_D(int ell, const EulerZYZ& g);

// d^l_{mn}(beta) for l = lo..hi at fixed (m, n), computed by the three-term
// recurrence in l. Entries below max(|m|,|n|) are zero.
std::vector<double> wigner_d_column(int m, int n, int hi, double beta);

// Orthonormal complex spherical harmonic.
cd sph_harm(int ell, int m, double theta, double phi);

// All Y^l_m(theta, phi) for l < L, flattened as l*l + (m + l).
std::vector<cd> sph_harm_all(int L, double theta, double phi);

// Fully normalized associated Legendre values Pbar^m_l(cos theta) for l < L,
// 0 <= m <= l, flattened as l*(l+1)/2 + m. Y^l_m = Pbar^m_l e^{i m phi}.
std::vector<double> normalized_legendre(int L, double theta);

double clebsch_gordan(int l1, int m1, int l2, int m2, int J, int M);

Eigen::Matrix3d rotation_matrix(const EulerZYZ& g);
EulerZYZ rotation_from_matrix(const Eigen::Matrix3d& R);
EulerZYZ compose(const EulerZYZ& a, const EulerZYZ& b);
EulerZYZ inverse(const EulerZYZ& g);

// Change of basis between Cartesian (x, y, z) vectors and the m = -1, 0, 1
// components of a degree-1 feature: v_sph = spherical_basis() * v_cart, and
// wigner_D(1, g) = spherical_basis() * rotation_matrix(g) * spherical_basis()^H.
CMatrix spherical_basis();

// Unitary map from complex degree-ell components to a real basis in which
// wigner_D becomes real orthogonal: real_basis(l) * D * real_basis(l)^H is real.
CMatrix real_basis(int ell);

// Precomputed Clebsch-Gordan coefficients for l1, l2 <= max_degree, all J.
class CGTable {
public:
    explicit CGTable(int max_degree);

    int max_degree() const { return max_degree_; }

    // C^{J, m1+m2}_{l1 m1; l2 m2}; zero outside the coupling range.
    double operator()(int l1, int m1, int l2, int m2, int J) const;

    // Reads from EQUIVAR_CACHE_DIR when set and a matching file exists,
    // otherwise builds and (when the directory is set) writes it.
    static CGTable load_or_build(int max_degree);

    const std::vector<double>& raw() const { return data_; }

private:
    CGTable() = default;
    std::size_t block_offset(int l1, int l2, int J) const;
    void index();

    int max_degree_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<double> data_;
};

}  // namespace equivar
