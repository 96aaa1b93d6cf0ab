#pragma once

#include "equivar/harmonics.hpp"
#include "equivar/repr.hpp"

#include <functional>
#include <string>
#include <vector>

namespace equivar {

// Gaussian shells exp(-(r - k spacing)^2 / (2 width^2)), k = 0..count-1.
struct RadialShells {
    int count = 1;
    double spacing = 1.0;
    double width = 0.6;

    double operator()(int k, double r) const;
    // spacing = h, width = 0.6 h.
    static RadialShells for_lattice(double h, int count);
};

// (2 lambda + 1) x (2 theta + 1) kernel block at a unit direction whose
// vectorization lies in the degree-J summand of D^lambda (x) conj(D^theta);
// it obeys k(R y) = D^lambda(R) k(y) D^theta(R)^dagger.
CMatrix angular_element(int lambda, int theta, int J, const Eigen::Vector3d& dir);

struct SteerableElement {
    int J;
    int shell;
};

struct SteerableKernelBasis {
    int lambda_out = 0;
    int theta_in = 0;
    std::vector<int> J_list;
    RadialShells radial;
    std::vector<SteerableElement> elements;

    // Value at a point of R^3. At the origin only J = 0 survives.
    CMatrix evaluate(const SteerableElement& e, const Eigen::Vector3d& y) const;
    CMatrix evaluate(const std::vector<cd>& weights, const Eigen::Vector3d& y) const;
};

// One element per (J, shell) for J = |lambda - theta|..lambda + theta.
SteerableKernelBasis solve_angular_basis(int lambda_out, int theta_in, const RadialShells& radial);

// Dimension of the degree-j solution space of the kernel constraint found by
// SVD of the constraint sampled at random rotations and points, independent
// of the Clebsch-Gordan construction.
int constraint_nullspace_dimension(int lambda, int theta, int j, unsigned seed = 7);

// max over rotations and points of |k(R y) - D^l k(y) D^t(R)^dagger|.
double continuous_constraint_residual(const std::function<CMatrix(const Eigen::Vector3d&)>& kernel, int lambda,
                                      int theta, const std::vector<EulerZYZ>& rotations,
                                      const std::vector<Eigen::Vector3d>& points);

// Samples on a cubic lattice of odd side, index (i, j, k, out, in); the
// lattice point (i, j, k) sits at ((i, j, k) - (side - 1) / 2) * spacing.
struct VolumetricKernel {
    int side = 1;
    double spacing = 1.0;
    int out_dim = 1;
    int in_dim = 1;
    std::vector<cd> values;

    static VolumetricKernel zeros(int side, double spacing, int out_dim, int in_dim);
    std::size_t offset(int i, int j, int k) const {
        return ((static_cast<std::size_t>(i) * side + j) * side + k) * out_dim * in_dim;
    }
    cd& at(int i, int j, int k, int o, int c) { return values[offset(i, j, k) + o * in_dim + c]; }
    cd at(int i, int j, int k, int o, int c) const { return values[offset(i, j, k) + o * in_dim + c]; }
    Eigen::Vector3d position(int i, int j, int k) const;
    CMatrix block(int i, int j, int k) const;
};

VolumetricKernel sample_kernel(const std::function<CMatrix(const Eigen::Vector3d&)>& kernel, int out_dim, int in_dim,
                               int side, double spacing);

// Lattice residual. The kernel is least-squares fitted on every entry to
// shells x Y^j (j <= (side-1)/2, shells of for_lattice(spacing)), a space
// closed under rotation, so the fit can be evaluated at R y exactly. Returns
// max_{R, y} ||fit(R y) - rho_out(R) kernel(y) rho_in(R)^dagger|| divided by
// max_y ||kernel(y)|| (Frobenius norms).
double constraint_residual(const VolumetricKernel& kernel, const FeatureType& in, const FeatureType& out,
                           const std::vector<EulerZYZ>& rotations);

// Vector field on a cube of lattice points, index (x, y, z, channel), same
// centring convention as VolumetricKernel.
struct LatticeField {
    int side = 1;
    int channels = 1;
    double spacing = 1.0;
    std::vector<cd> values;

    static LatticeField zeros(int side, int channels, double spacing);
    cd& at(int x, int y, int z, int c) {
        return values[((static_cast<std::size_t>(x) * side + y) * side + z) * channels + c];
    }
    cd at(int x, int y, int z, int c) const {
        return values[((static_cast<std::size_t>(x) * side + y) * side + z) * channels + c];
    }
};

// out(x) = h^3 sum_u kernel(u) f(x - u), zero outside the field.
LatticeField semidirect_conv(const VolumetricKernel& kernel, const LatticeField& f);

// (R f)(x) = rho f(R^{-1} x) for a signed permutation matrix R about the
// centre of the cube.
LatticeField rotate_lattice_field(const LatticeField& f, const Eigen::Matrix3i& R, const CMatrix& rho);

// Equivariance defect of the lattice sum approximating the continuous
// convolution of a smooth field at a point y under a generic rotation, for a
// kernel of fixed physical size sampled at each spacing. One residual per
// spacing.
std::vector<double> refinement_study(int lambda, int theta, const std::vector<double>& spacings, unsigned seed = 11);

// R(r) e^{i (m angle + phase)}; rotating the argument by phi multiplies by
// e^{-i m phi}.
struct CircularHarmonic {
    int m = 0;
    double phase = 0.0;
    std::function<double(double)> radial;

    cd operator()(double r, double angle) const;
};

// Planar constraint k(r, angle - phi) = e^{-i m_out phi} k(r, angle) e^{i m_in phi}
// between SO(2) irreps, max residual over the given samples.
double se2_constraint_residual(const std::function<cd(double, double)>& kernel, int m_in, int m_out,
                               const std::vector<double>& radii, const std::vector<double>& angles,
                               const std::vector<double>& shifts);

// JSON export: lattice metadata, per-element lattice samples and residuals.
std::string basis_to_json(const SteerableKernelBasis& basis, int side, double spacing, unsigned seed = 5);

}  // namespace equivar
