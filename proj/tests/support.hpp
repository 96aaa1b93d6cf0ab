#pragma once

#include "equivar/grids.hpp"
#include "equivar/harmonics.hpp"

#include <random>

namespace testing_support {

using equivar::cd;
using equivar::CMatrix;
using equivar::EulerZYZ;

// Haar-distributed rotation via a normalized random quaternion.
EulerZYZ random_rotation(std::mt19937_64& rng);
Eigen::Matrix3d random_rotation_matrix(std::mt19937_64& rng);
cd random_complex(std::mt19937_64& rng);
double random_angle(std::mt19937_64& rng, double hi);

// Wigner d from the explicit factorial sum, independent of the recurrence.
double wigner_d_explicit(int j, int m, int n, double beta);

// Random coefficients below the bandlimit; with real_valued the expansion is a
// real function.
equivar::SpectralS2Signal random_s2(int L, int C, std::mt19937_64& rng, bool real_valued = false);
equivar::SpectralSO3Signal random_so3(int L, int C, std::mt19937_64& rng, bool real_valued = false);

double max_abs_diff(const std::vector<cd>& a, const std::vector<cd>& b);
double max_abs(const std::vector<cd>& a);

Eigen::Vector3d unit_vector(double theta, double phi);
void to_angles(const Eigen::Vector3d& v, double& theta, double& phi);

}  // namespace testing_support
