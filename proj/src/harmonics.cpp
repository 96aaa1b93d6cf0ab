#include "equivar/harmonics.hpp"
#include "equivar/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace equivar {

namespace {

std::atomic<PhaseConvention> g_phase{PhaseConvention::CondonShortley};

double log_factorial(int n) {
    static const std::vector<double> table = [] {
        std::vector<double> t(512);
        t[0] = 0.0;
        for (int i = 1; i < 512; ++i) t[i] = t[i - 1] + std::log(static_cast<double>(i));
        return t;
    }();
    if (n < 0) return 0.0;
    if (n < 512) return table[n];
    return std::lgamma(n + 1.0);
}

// Single-term Wigner formula at j = max(|m|, |n|).
double wigner_d_seed(int j, int m, int n, double beta) {
    const double c = std::cos(beta / 2), s = std::sin(beta / 2);
    const int smin = std::max(0, n - m);
    const int smax = std::min(j + n, j - m);
    double sum = 0.0;
    for (int k = smin; k <= smax; ++k) {
        const double lognum = 0.5 * (log_factorial(j + m) + log_factorial(j - m) +
                                     log_factorial(j + n) + log_factorial(j - n));
        const double logden = log_factorial(j + n - k) + log_factorial(k) +
                              log_factorial(m - n + k) + log_factorial(j - m - k);
        const double sign = ((m - n + k) % 2 == 0) ? 1.0 : -1.0;
        sum += sign * std::exp(lognum - logden) * std::pow(c, 2 * j + n - m - 2 * k) *
               std::pow(s, m - n + 2 * k);
    }
    return sum;
}

}  // namespace

void set_phase_convention(PhaseConvention c) { g_phase.store(c); }
PhaseConvention phase_convention() { return g_phase.load(); }

std::vector<double> wigner_d_column(int m, int n, int hi, double beta) {
    std::vector<double> out(std::max(hi + 1, 0), 0.0);
    const int l0 = std::max(std::abs(m), std::abs(n));
    if (hi < l0) return out;
    const double x = std::cos(beta);
    double prev = 0.0;
    double cur = wigner_d_seed(l0, m, n, beta);
    out[l0] = cur;
    for (int l = l0; l < hi; ++l) {
        const double lp = l + 1.0;
        const double S = std::sqrt((lp * lp - m * m) * (lp * lp - n * n));
        double a = x;
        double b = 0.0;
        if (l > 0) {
            a -= static_cast<double>(m) * n / (l * lp);
            b = lp * std::sqrt((static_cast<double>(l) * l - m * m) * (static_cast<double>(l) * l - n * n)) /
                (l * S);
        }
        const double next = lp * (2.0 * l + 1.0) / S * a * cur - b * prev;
        prev = cur;
        cur = next;
        out[l + 1] = cur;
    }
    return out;
}

RMatrix wigner_d_small(int ell, double beta) {
    const int d = 2 * ell + 1;
    RMatrix out(d, d);
    for (int m = -ell; m <= ell; ++m)
        for (int n = -ell; n <= ell; ++n)
            out(m + ell, n + ell) = wigner_d_column(m, n, ell, beta)[ell];
    return out;
}

CMatrix wigner_D(int ell, const EulerZYZ& g) {
    const RMatrix d = wigner_d_small(ell, g.beta);
    CMatrix out(d.rows(), d.cols());
    for (int m = -ell; m <= ell; ++m)
        for (int n = -ell; n <= ell; ++n)
            out(m + ell, n + ell) = std::polar(1.0, -m * g.alpha) * d(m + ell, n + ell) *
                                    std::polar(1.0, -n * g.gamma);
    return out;
}

std::vector<double> normalized_legendre(int L, double theta) {
    std::vector<double> P(static_cast<std::size_t>(L) * (L + 1) / 2, 0.0);
    if (L <= 0) return P;
    const double x = std::cos(theta), s = std::sin(theta);
    const double cs = phase_convention() == PhaseConvention::CondonShortley ? -1.0 : 1.0;
    auto at = [](int l, int m) { return static_cast<std::size_t>(l) * (l + 1) / 2 + m; };
    double pmm = 1.0 / std::sqrt(4.0 * kPi);
    for (int m = 0; m < L; ++m) {
        if (m > 0) pmm *= cs * std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s;
        P[at(m, m)] = pmm;
        if (m + 1 < L) P[at(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * x * pmm;
        for (int l = m + 2; l < L; ++l) {
            const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
            const double aprev =
                std::sqrt((4.0 * (l - 1) * (l - 1) - 1.0) / (static_cast<double>(l - 1) * (l - 1) - m * m));
            P[at(l, m)] = a * (x * P[at(l - 1, m)] - P[at(l - 2, m)] / aprev);
        }
    }
    return P;
}

std::vector<cd> sph_harm_all(int L, double theta, double phi) {
    const auto P = normalized_legendre(L, theta);
    std::vector<cd> out(static_cast<std::size_t>(L) * L);
    for (int l = 0; l < L; ++l) {
        for (int m = 0; m <= l; ++m) {
            const cd y = P[static_cast<std::size_t>(l) * (l + 1) / 2 + m] * std::polar(1.0, m * phi);
            out[l * l + l + m] = y;
            if (m > 0) out[l * l + l - m] = ((m % 2) ? -1.0 : 1.0) * std::conj(y);
        }
    }
    return out;
}

cd sph_harm(int ell, int m, double theta, double phi) {
    const int am = std::abs(m);
    const auto P = normalized_legendre(ell + 1, theta);
    const cd y = P[static_cast<std::size_t>(ell) * (ell + 1) / 2 + am] * std::polar(1.0, am * phi);
    if (m >= 0) return y;
    return ((am % 2) ? -1.0 : 1.0) * std::conj(y);
}

double clebsch_gordan(int l1, int m1, int l2, int m2, int J, int M) {
    if (M != m1 + m2) return 0.0;
    if (std::abs(m1) > l1 || std::abs(m2) > l2 || std::abs(M) > J) return 0.0;
    if (J < std::abs(l1 - l2) || J > l1 + l2) return 0.0;
    const double pre =
        0.5 * (std::log(2.0 * J + 1.0) + log_factorial(J + l1 - l2) + log_factorial(J - l1 + l2) +
               log_factorial(l1 + l2 - J) - log_factorial(l1 + l2 + J + 1)) +
        0.5 * (log_factorial(J + M) + log_factorial(J - M) + log_factorial(l1 - m1) + log_factorial(l1 + m1) +
               log_factorial(l2 - m2) + log_factorial(l2 + m2));
    const int kmin = std::max({0, l2 - J - m1, l1 - J + m2});
    const int kmax = std::min({l1 + l2 - J, l1 - m1, l2 + m2});
    double sum = 0.0;
    for (int k = kmin; k <= kmax; ++k) {
        const double den = log_factorial(k) + log_factorial(l1 + l2 - J - k) + log_factorial(l1 - m1 - k) +
                           log_factorial(l2 + m2 - k) + log_factorial(J - l2 + m1 + k) +
                           log_factorial(J - l1 - m2 + k);
        sum += ((k % 2) ? -1.0 : 1.0) * std::exp(pre - den);
    }
    return sum;
}

Eigen::Matrix3d rotation_matrix(const EulerZYZ& g) {
    auto rz = [](double a) {
        Eigen::Matrix3d r;
        r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
        return r;
    };
    Eigen::Matrix3d ry;
    ry << std::cos(g.beta), 0, std::sin(g.beta), 0, 1, 0, -std::sin(g.beta), 0, std::cos(g.beta);
    return rz(g.alpha) * ry * rz(g.gamma);
}

EulerZYZ rotation_from_matrix(const Eigen::Matrix3d& R) {
    if (!R.allFinite() || (R.transpose() * R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
        std::abs(R.determinant() - 1.0) > 1e-9) {
        std::ostringstream os;
        os << "matrix is not a proper rotation (det " << R.determinant() << ")";
        throw NotARotation(os.str());
    }
    auto wrap = [](double a) {
        a = std::fmod(a, 2 * kPi);
        if (a < 0) a += 2 * kPi;
        if (a >= 2 * kPi) a = 0.0;
        return a;
    };
    EulerZYZ g;
    // beta from atan2 stays accurate near the poles where acos loses half the
    // digits; gamma is read off the remainder so that alpha + gamma stays exact
    // even when alpha itself is poorly determined.
    const double s = std::hypot(R(0, 2), R(1, 2));
    g.beta = std::atan2(s, R(2, 2));
    if (s < 1e-12) {
        // Gimbal lock: the whole z-rotation goes into alpha.
        g.gamma = 0.0;
        g.alpha = R(2, 2) > 0 ? wrap(std::atan2(R(1, 0), R(0, 0))) : wrap(std::atan2(-R(1, 0), R(1, 1)));
        return g;
    }
    g.alpha = wrap(std::atan2(R(1, 2), R(0, 2)));
    const Eigen::Matrix3d rest = (Eigen::AngleAxisd(g.alpha, Eigen::Vector3d::UnitZ()) *
                                  Eigen::AngleAxisd(g.beta, Eigen::Vector3d::UnitY()))
                                     .toRotationMatrix()
                                     .transpose() *
                                 R;
    g.gamma = wrap(std::atan2(rest(1, 0), rest(0, 0)));
    return g;
}

EulerZYZ compose(const EulerZYZ& a, const EulerZYZ& b) {
    return rotation_from_matrix(rotation_matrix(a) * rotation_matrix(b));
}

EulerZYZ inverse(const EulerZYZ& g) { return rotation_from_matrix(rotation_matrix(g).transpose()); }

CMatrix spherical_basis() {
    const double r = 1.0 / std::sqrt(2.0);
    const cd i(0.0, 1.0);
    CMatrix V = CMatrix::Zero(3, 3);
    V(0, 0) = r;
    V(0, 1) = i * r;
    V(1, 2) = 1.0;
    V(2, 0) = -r;
    V(2, 1) = i * r;
    return V;
}

CMatrix real_basis(int ell) {
    const int d = 2 * ell + 1;
    const double r = 1.0 / std::sqrt(2.0);
    const cd i(0.0, 1.0);
    CMatrix C = CMatrix::Zero(d, d);
    for (int m = -ell; m <= ell; ++m) {
        const double sgn = (std::abs(m) % 2) ? -1.0 : 1.0;
        if (m < 0) {
            C(m + ell, m + ell) = i * r;
            C(m + ell, -m + ell) = -sgn * i * r;
        } else if (m == 0) {
            C(ell, ell) = 1.0;
        } else {
            C(m + ell, -m + ell) = r;
            C(m + ell, m + ell) = sgn * r;
        }
    }
    return C.conjugate();
}

CGTable::CGTable(int max_degree) : max_degree_(max_degree) {
    index();
    const int N = max_degree_ + 1;
    for (int l1 = 0; l1 < N; ++l1)
        for (int l2 = 0; l2 < N; ++l2)
            for (int J = std::abs(l1 - l2); J <= l1 + l2; ++J) {
                double* blk = data_.data() + block_offset(l1, l2, J);
                for (int m1 = -l1; m1 <= l1; ++m1)
                    for (int m2 = -l2; m2 <= l2; ++m2)
                        blk[(m1 + l1) * (2 * l2 + 1) + (m2 + l2)] = clebsch_gordan(l1, m1, l2, m2, J, m1 + m2);
            }
}

void CGTable::index() {
    const int N = max_degree_ + 1;
    offsets_.assign(static_cast<std::size_t>(N) * N * (2 * N + 1), 0);
    std::size_t total = 0;
    for (int l1 = 0; l1 < N; ++l1)
        for (int l2 = 0; l2 < N; ++l2)
            for (int J = std::abs(l1 - l2); J <= l1 + l2; ++J) {
                offsets_[(static_cast<std::size_t>(l1) * N + l2) * (2 * N + 1) + J] = total;
                total += static_cast<std::size_t>(2 * l1 + 1) * (2 * l2 + 1);
            }
    data_.assign(total, 0.0);
}

std::size_t CGTable::block_offset(int l1, int l2, int J) const {
    const int N = max_degree_ + 1;
    return offsets_[(static_cast<std::size_t>(l1) * N + l2) * (2 * N + 1) + J];
}

double CGTable::operator()(int l1, int m1, int l2, int m2, int J) const {
    if (l1 > max_degree_ || l2 > max_degree_) {
        std::ostringstream os;
        os << "Clebsch-Gordan degree (" << l1 << "," << l2 << ") exceeds table maximum " << max_degree_;
        throw BandlimitOverflow(os.str());
    }
    if (J < std::abs(l1 - l2) || J > l1 + l2 || std::abs(m1 + m2) > J) return 0.0;
    return data_[block_offset(l1, l2, J) + (m1 + l1) * (2 * l2 + 1) + (m2 + l2)];
}

CGTable CGTable::load_or_build(int max_degree) {
    const char* dir = std::getenv("EQUIVAR_CACHE_DIR");
    if (!dir || !*dir) return CGTable(max_degree);
    namespace fs = std::filesystem;
    const fs::path path = fs::path(dir) / ("cg_" + std::to_string(max_degree) + ".bin");
    {
        std::ifstream in(path, std::ios::binary);
        if (in) {
            CGTable t;
            t.max_degree_ = max_degree;
            t.index();
            std::uint64_t n = 0;
            in.read(reinterpret_cast<char*>(&n), sizeof(n));
            if (in && n == t.data_.size()) {
                in.read(reinterpret_cast<char*>(t.data_.data()), static_cast<std::streamsize>(n * sizeof(double)));
                if (in) return t;
            }
        }
    }
    CGTable t(max_degree);
    std::error_code ec;
    fs::create_directories(dir, ec);
    const fs::path tmp = path.string() + ".tmp";
    std::ofstream out(tmp, std::ios::binary);
    if (out) {
        const std::uint64_t n = t.data_.size();
        out.write(reinterpret_cast<const char*>(&n), sizeof(n));
        out.write(reinterpret_cast<const char*>(t.data_.data()), static_cast<std::streamsize>(n * sizeof(double)));
        out.close();
        fs::rename(tmp, path, ec);
    }
    return t;
}

}  // namespace equivar
