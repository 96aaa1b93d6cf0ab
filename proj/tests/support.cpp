#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace testing_support {

Eigen::Matrix3d random_rotation_matrix(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return q.toRotationMatrix();
}

EulerZYZ random_rotation(std::mt19937_64& rng) {
    return equivar::rotation_from_matrix(random_rotation_matrix(rng));
}

cd random_complex(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    return {n(rng), n(rng)};
}

double random_angle(std::mt19937_64& rng, double hi) {
    return std::uniform_real_distribution<double>(0.0, hi)(rng);
}

double wigner_d_explicit(int j, int m, int n, double beta) {
    auto fact = [](int k) { return std::tgamma(k + 1.0); };
    const double c = std::cos(beta / 2), s = std::sin(beta / 2);
    double sum = 0.0;
    for (int k = 0; k <= 2 * j; ++k) {
        if (j + n - k < 0 || m - n + k < 0 || j - m - k < 0) continue;
        const double sign = ((m - n + k) % 2) ? -1.0 : 1.0;
        sum += sign * std::sqrt(fact(j + m) * fact(j - m) * fact(j + n) * fact(j - n)) /
               (fact(j + n - k) * fact(k) * fact(m - n + k) * fact(j - m - k)) *
               std::pow(c, 2 * j + n - m - 2 * k) * std::pow(s, m - n + 2 * k);
    }
    return sum;
}

equivar::SpectralS2Signal random_s2(int L, int C, std::mt19937_64& rng, bool real_valued) {
    auto s = equivar::SpectralS2Signal::zeros(L, C);
    s.real_valued = real_valued;
    for (int c = 0; c < C; ++c)
        for (int l = 0; l < L; ++l)
            for (int m = 0; m <= l; ++m) {
                const cd v = random_complex(rng);
                if (!real_valued) {
                    s.at(c, l, m) = v;
                    s.at(c, l, -m) = random_complex(rng);
                } else if (m == 0) {
                    s.at(c, l, 0) = v.real();
                } else {
                    s.at(c, l, m) = v;
                    s.at(c, l, -m) = ((m % 2) ? -1.0 : 1.0) * std::conj(v);
                }
            }
    return s;
}

equivar::SpectralSO3Signal random_so3(int L, int C, std::mt19937_64& rng, bool real_valued) {
    auto s = equivar::SpectralSO3Signal::zeros(L, C);
    s.real_valued = real_valued;
    for (int c = 0; c < C; ++c)
        for (int l = 0; l < L; ++l)
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) s.at(c, l, m, n) = random_complex(rng);
    if (real_valued) {
        const auto orig = s;
        for (int c = 0; c < C; ++c)
            for (int l = 0; l < L; ++l)
                for (int m = -l; m <= l; ++m)
                    for (int n = -l; n <= l; ++n) {
                        const double sgn = (std::abs(m - n) % 2) ? -1.0 : 1.0;
                        const cd a = orig.at(c, l, m, n), b = sgn * std::conj(orig.at(c, l, -m, -n));
                        s.at(c, l, m, n) = 0.5 * (a + b);
                    }
    }
    return s;
}

double max_abs_diff(const std::vector<cd>& a, const std::vector<cd>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("size mismatch");
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
    return r;
}

double max_abs(const std::vector<cd>& a) {
    double r = 0.0;
    for (const cd& v : a) r = std::max(r, std::abs(v));
    return r;
}

Eigen::Vector3d unit_vector(double theta, double phi) {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

void to_angles(const Eigen::Vector3d& v, double& theta, double& phi) {
    const Eigen::Vector3d u = v.normalized();
    theta = std::acos(std::clamp(u.z(), -1.0, 1.0));
    phi = std::atan2(u.y(), u.x());
}

}  // namespace testing_support
