#include "equivar/steerable.hpp"
#include "equivar/errors.hpp"

#include <json.hpp>

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <random>
#include <stdexcept>

namespace equivar {

namespace {

void direction_angles(const Eigen::Vector3d& v, double& theta, double& phi) {
    theta = std::atan2(std::hypot(v.x(), v.y()), v.z());
    phi = std::atan2(v.y(), v.x());
}

EulerZYZ seeded_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return rotation_from_matrix(q.toRotationMatrix());
}

Eigen::Vector3d seeded_point(std::mt19937_64& rng, double radius) {
    std::normal_distribution<double> n;
    std::uniform_real_distribution<double> u(0.2, 1.0);
    Eigen::Vector3d v(n(rng), n(rng), n(rng));
    return v.normalized() * radius * u(rng);
}

cd seeded_complex(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    return {n(rng), n(rng)};
}

}  // namespace

double RadialShells::operator()(int k, double r) const {
    const double d = r - k * spacing;
    return std::exp(-d * d / (2 * width * width));
}

RadialShells RadialShells::for_lattice(double h, int count) { return {count, h, 0.6 * h}; }

CMatrix angular_element(int lambda, int theta, int J, const Eigen::Vector3d& dir) {
    if (J < std::abs(lambda - theta) || J > lambda + theta)
        throw std::invalid_argument("angular_element: degree outside the coupling range");
    const int dl = 2 * lambda + 1, dt = 2 * theta + 1;
    const RMatrix Q = cg_change_of_basis(lambda, theta);
    double t, p;
    direction_angles(dir, t, p);
    const auto Y = sph_harm_all(J + 1, t, p);
    int row = 0;
    for (int j = std::abs(lambda - theta); j < J; ++j) row += 2 * j + 1;
    Eigen::VectorXcd k = Eigen::VectorXcd::Zero(dl * dt);
    for (int M = -J; M <= J; ++M) k(row + M + J) = std::conj(Y[J * J + J + M]);
    const Eigen::VectorXcd v = Q.transpose().cast<cd>() * k;
    // (I kron S) with S_{b,c} = (-1)^b delta_{c,-b} turns the second D^theta
    // factor into its conjugate.
    CMatrix out(dl, dt);
    for (int a = -lambda; a <= lambda; ++a)
        for (int b = -theta; b <= theta; ++b)
            out(a + lambda, b + theta) = ((std::abs(b) % 2) ? -1.0 : 1.0) * v((a + lambda) * dt + (-b + theta));
    return out;
}

CMatrix SteerableKernelBasis::evaluate(const SteerableElement& e, const Eigen::Vector3d& y) const {
    const double r = y.norm();
    if (r < 1e-12) {
        if (e.J != 0) return CMatrix::Zero(2 * lambda_out + 1, 2 * theta_in + 1);
        return radial(e.shell, 0.0) * angular_element(lambda_out, theta_in, 0, Eigen::Vector3d::UnitZ());
    }
    return radial(e.shell, r) * angular_element(lambda_out, theta_in, e.J, y / r);
}

CMatrix SteerableKernelBasis::evaluate(const std::vector<cd>& weights, const Eigen::Vector3d& y) const {
    if (weights.size() != elements.size()) throw ShapeMismatch("steerable weights differ from element count");
    CMatrix out = CMatrix::Zero(2 * lambda_out + 1, 2 * theta_in + 1);
    for (std::size_t i = 0; i < elements.size(); ++i)
        if (weights[i] != cd(0.0)) out += weights[i] * evaluate(elements[i], y);
    return out;
}

SteerableKernelBasis solve_angular_basis(int lambda_out, int theta_in, const RadialShells& radial) {
    if (lambda_out < 0 || theta_in < 0) throw std::invalid_argument("degrees must be non-negative");
    SteerableKernelBasis b;
    b.lambda_out = lambda_out;
    b.theta_in = theta_in;
    b.radial = radial;
    for (int J = std::abs(lambda_out - theta_in); J <= lambda_out + theta_in; ++J) {
        b.J_list.push_back(J);
        for (int k = 0; k < radial.count; ++k) b.elements.push_back({J, k});
    }
    return b;
}

int constraint_nullspace_dimension(int lambda, int theta, int j, unsigned seed) {
    const int dl = 2 * lambda + 1, dt = 2 * theta + 1, dj = 2 * j + 1;
    const int unknowns = dl * dt * dj;
    const int pairs = unknowns / (dl * dt) * 3 + 8;
    std::mt19937_64 rng(seed);
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(pairs) * dl * dt, unknowns);
    // entry (a, b) of the kernel is sum_m c_{a b m} Y^j_m(y); the unknown
    // index is (a * dt + b) * dj + m + j.
    for (int s = 0; s < pairs; ++s) {
        const EulerZYZ g = seeded_rotation(rng);
        const Eigen::Vector3d y = seeded_point(rng, 1.0).normalized();
        const Eigen::Vector3d Ry = rotation_matrix(g) * y;
        double t0, p0, t1, p1;
        direction_angles(y, t0, p0);
        direction_angles(Ry, t1, p1);
        const auto Y0 = sph_harm_all(j + 1, t0, p0), Y1 = sph_harm_all(j + 1, t1, p1);
        const CMatrix Dl = wigner_D(lambda, g), Dt = wigner_D(theta, g);
        for (int a = 0; a < dl; ++a)
            for (int b = 0; b < dt; ++b) {
                const Eigen::Index row = (static_cast<Eigen::Index>(s) * dl + a) * dt + b;
                for (int m = -j; m <= j; ++m) A(row, (a * dt + b) * dj + m + j) += Y1[j * j + j + m];
                // - sum_{a' b'} Dl(a, a') k_{a' b'}(y) conj(Dt(b, b'))
                for (int a2 = 0; a2 < dl; ++a2)
                    for (int b2 = 0; b2 < dt; ++b2) {
                        const cd w = Dl(a, a2) * std::conj(Dt(b, b2));
                        for (int m = -j; m <= j; ++m) A(row, (a2 * dt + b2) * dj + m + j) -= w * Y0[j * j + j + m];
                    }
            }
    }
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(A);
    const auto& sv = svd.singularValues();
    int zero = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) < 1e-9 * std::max(sv(0), 1.0)) ++zero;
    return zero + std::max(0, unknowns - static_cast<int>(sv.size()));
}

double continuous_constraint_residual(const std::function<CMatrix(const Eigen::Vector3d&)>& kernel, int lambda,
                                      int theta, const std::vector<EulerZYZ>& rotations,
                                      const std::vector<Eigen::Vector3d>& points) {
    double worst = 0.0;
    for (const auto& g : rotations) {
        const Eigen::Matrix3d R = rotation_matrix(g);
        const CMatrix Dl = wigner_D(lambda, g), Dt = wigner_D(theta, g);
        for (const auto& y : points) {
            const CMatrix diff = kernel(R * y) - Dl * kernel(y) * Dt.adjoint();
            worst = std::max(worst, diff.cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

VolumetricKernel VolumetricKernel::zeros(int side, double spacing, int out_dim, int in_dim) {
    if (side < 1 || side % 2 == 0) throw ShapeMismatch("lattice side must be odd");
    VolumetricKernel k;
    k.side = side;
    k.spacing = spacing;
    k.out_dim = out_dim;
    k.in_dim = in_dim;
    k.values.assign(static_cast<std::size_t>(side) * side * side * out_dim * in_dim, cd(0.0));
    return k;
}

Eigen::Vector3d VolumetricKernel::position(int i, int j, int k) const {
    const int c = (side - 1) / 2;
    return Eigen::Vector3d(i - c, j - c, k - c) * spacing;
}

CMatrix VolumetricKernel::block(int i, int j, int k) const {
    CMatrix out(out_dim, in_dim);
    for (int o = 0; o < out_dim; ++o)
        for (int c = 0; c < in_dim; ++c) out(o, c) = at(i, j, k, o, c);
    return out;
}

VolumetricKernel sample_kernel(const std::function<CMatrix(const Eigen::Vector3d&)>& kernel, int out_dim, int in_dim,
                               int side, double spacing) {
    auto out = VolumetricKernel::zeros(side, spacing, out_dim, in_dim);
    for (int i = 0; i < side; ++i)
        for (int j = 0; j < side; ++j)
            for (int k = 0; k < side; ++k) {
                const CMatrix v = kernel(out.position(i, j, k));
                if (v.rows() != out_dim || v.cols() != in_dim) throw ShapeMismatch("kernel block size differs");
                for (int o = 0; o < out_dim; ++o)
                    for (int c = 0; c < in_dim; ++c) out.at(i, j, k, o, c) = v(o, c);
            }
    return out;
}

namespace {

// Row of the fit design matrix at a point: shells x Y^j_m, j <= J.
Eigen::RowVectorXcd fit_row(const Eigen::Vector3d& y, const RadialShells& shells, int J) {
    const int per = (J + 1) * (J + 1);
    Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(shells.count * per);
    const double r = y.norm();
    std::vector<cd> Y;
    if (r < 1e-12) {
        Y.assign(per, cd(0.0));
        Y[0] = 1.0 / std::sqrt(4 * kPi);
    } else {
        double t, p;
        direction_angles(y, t, p);
        Y = sph_harm_all(J + 1, t, p);
    }
    for (int k = 0; k < shells.count; ++k) {
        const double w = shells(k, r);
        for (int i = 0; i < per; ++i) row(k * per + i) = w * Y[i];
    }
    return row;
}

}  // namespace

double constraint_residual(const VolumetricKernel& kernel, const FeatureType& in, const FeatureType& out,
                           const std::vector<EulerZYZ>& rotations) {
    if (kernel.in_dim != in.dimension() || kernel.out_dim != out.dimension())
        throw ShapeMismatch("constraint_residual: kernel block size differs from feature types");
    const int s = kernel.side, J = (s - 1) / 2;
    const auto shells = RadialShells::for_lattice(kernel.spacing, J + 1);
    const int n = s * s * s, E = kernel.out_dim * kernel.in_dim;
    const int nb = shells.count * (J + 1) * (J + 1);
    Eigen::MatrixXcd A(n, nb), K(n, E);
    std::vector<Eigen::Vector3d> pos(n);
    double scale = 0.0;
    for (int i = 0, p = 0; i < s; ++i)
        for (int j = 0; j < s; ++j)
            for (int k = 0; k < s; ++k, ++p) {
                pos[p] = kernel.position(i, j, k);
                A.row(p) = fit_row(pos[p], shells, J);
                const CMatrix b = kernel.block(i, j, k);
                for (int e = 0; e < E; ++e) K(p, e) = b(e / kernel.in_dim, e % kernel.in_dim);
                scale = std::max(scale, b.norm());
            }
    if (scale == 0.0) return 0.0;
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(A);
    if (qr.rank() < nb) throw std::runtime_error("constraint_residual: lattice too small for the fit basis");
    const Eigen::MatrixXcd C = qr.solve(K);
    double worst = 0.0;
    for (const auto& g : rotations) {
        const Eigen::Matrix3d R = rotation_matrix(g);
        const CMatrix Din = block_representation(in, g), Dout = block_representation(out, g);
        for (int p = 0; p < n; ++p) {
            const Eigen::RowVectorXcd v = fit_row(R * pos[p], shells, J) * C;
            CMatrix lhs(kernel.out_dim, kernel.in_dim), raw(kernel.out_dim, kernel.in_dim);
            for (int e = 0; e < E; ++e) {
                lhs(e / kernel.in_dim, e % kernel.in_dim) = v(e);
                raw(e / kernel.in_dim, e % kernel.in_dim) = K(p, e);
            }
            worst = std::max(worst, (lhs - Dout * raw * Din.adjoint()).norm());
        }
    }
    return worst / scale;
}

LatticeField LatticeField::zeros(int side, int channels, double spacing) {
    LatticeField f;
    f.side = side;
    f.channels = channels;
    f.spacing = spacing;
    f.values.assign(static_cast<std::size_t>(side) * side * side * channels, cd(0.0));
    return f;
}

LatticeField semidirect_conv(const VolumetricKernel& kernel, const LatticeField& f) {
    if (kernel.in_dim != f.channels) throw ShapeMismatch("semidirect_conv: kernel input size differs from channels");
    if (std::abs(kernel.spacing - f.spacing) > 1e-12 * f.spacing)
        throw ShapeMismatch("semidirect_conv: kernel and field spacings differ");
    const int N = f.side, s = kernel.side, c = (s - 1) / 2;
    const double vol = kernel.spacing * kernel.spacing * kernel.spacing;
    auto out = LatticeField::zeros(N, kernel.out_dim, f.spacing);
#pragma omp parallel for collapse(2) schedule(static)
    for (int x = 0; x < N; ++x)
        for (int y = 0; y < N; ++y)
            for (int z = 0; z < N; ++z)
                for (int i = 0; i < s; ++i) {
                    const int sx = x - (i - c);
                    if (sx < 0 || sx >= N) continue;
                    for (int j = 0; j < s; ++j) {
                        const int sy = y - (j - c);
                        if (sy < 0 || sy >= N) continue;
                        for (int k = 0; k < s; ++k) {
                            const int sz = z - (k - c);
                            if (sz < 0 || sz >= N) continue;
                            for (int o = 0; o < kernel.out_dim; ++o) {
                                cd acc = 0;
                                for (int a = 0; a < kernel.in_dim; ++a) acc += kernel.at(i, j, k, o, a) * f.at(sx, sy, sz, a);
                                out.at(x, y, z, o) += vol * acc;
                            }
                        }
                    }
                }
    return out;
}

LatticeField rotate_lattice_field(const LatticeField& f, const Eigen::Matrix3i& R, const CMatrix& rho) {
    if (rho.rows() != f.channels || rho.cols() != f.channels) throw ShapeMismatch("rotation matrix size differs");
    if ((R.transpose() * R - Eigen::Matrix3i::Identity()).cwiseAbs().maxCoeff() != 0 || R.determinant() != 1)
        throw NotARotation("rotate_lattice_field: not a lattice rotation");
    const int N = f.side, c = (N - 1) / 2;
    auto out = LatticeField::zeros(N, f.channels, f.spacing);
    const Eigen::Matrix3i Rinv = R.transpose();
    for (int x = 0; x < N; ++x)
        for (int y = 0; y < N; ++y)
            for (int z = 0; z < N; ++z) {
                const Eigen::Vector3i src = Rinv * Eigen::Vector3i(x - c, y - c, z - c) + Eigen::Vector3i::Constant(c);
                for (int o = 0; o < f.channels; ++o) {
                    cd acc = 0;
                    for (int a = 0; a < f.channels; ++a) acc += rho(o, a) * f.at(src.x(), src.y(), src.z(), a);
                    out.at(x, y, z, o) = acc;
                }
            }
    return out;
}

std::vector<double> refinement_study(int lambda, int theta, const std::vector<double>& spacings, unsigned seed) {
    std::mt19937_64 rng(seed);
    const auto basis = solve_angular_basis(lambda, theta, {2, 0.5, 0.3});
    std::vector<cd> w(basis.elements.size());
    for (auto& v : w) v = seeded_complex(rng);
    const int dt = 2 * theta + 1;
    // Smooth input field: a few Gaussian blobs with random vector amplitudes.
    struct Blob {
        Eigen::Vector3d centre;
        Eigen::VectorXcd amp;
    };
    std::vector<Blob> blobs;
    for (int b = 0; b < 4; ++b) {
        Blob blob{seeded_point(rng, 1.0), Eigen::VectorXcd(dt)};
        for (int i = 0; i < dt; ++i) blob.amp(i) = seeded_complex(rng);
        blobs.push_back(blob);
    }
    auto field = [&](const Eigen::Vector3d& x) {
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(dt);
        for (const auto& b : blobs) v += std::exp(-(x - b.centre).squaredNorm() / (2 * 0.6 * 0.6)) * b.amp;
        return v;
    };
    const Eigen::Vector3d y = seeded_point(rng, 0.5);
    const EulerZYZ g = seeded_rotation(rng);
    const Eigen::Matrix3d Rinv = rotation_matrix(g).transpose();
    const CMatrix Dl = wigner_D(lambda, g), Dt = wigner_D(theta, g);
    const double reach = 3.0;
    std::vector<double> out;
    for (double h : spacings) {
        const int c = static_cast<int>(std::lround(reach / h));
        Eigen::VectorXcd plain = Eigen::VectorXcd::Zero(2 * lambda + 1), moved = plain;
        for (int i = -c; i <= c; ++i)
            for (int j = -c; j <= c; ++j)
                for (int k = -c; k <= c; ++k) {
                    const Eigen::Vector3d u = Eigen::Vector3d(i, j, k) * h;
                    const CMatrix K = basis.evaluate(w, u);
                    plain += K * field(y - u);
                    moved += K * (Dt * field(y - Rinv * u));
                }
        const double vol = h * h * h;
        out.push_back((vol * moved - Dl * (vol * plain)).norm() / (vol * plain).norm());
    }
    return out;
}

cd CircularHarmonic::operator()(double r, double angle) const {
    return (radial ? radial(r) : 1.0) * std::polar(1.0, m * angle + phase);
}

double se2_constraint_residual(const std::function<cd(double, double)>& kernel, int m_in, int m_out,
                               const std::vector<double>& radii, const std::vector<double>& angles,
                               const std::vector<double>& shifts) {
    double worst = 0.0;
    for (double r : radii)
        for (double a : angles)
            for (double phi : shifts) {
                const cd lhs = kernel(r, a - phi);
                const cd rhs = std::polar(1.0, -m_out * phi) * kernel(r, a) * std::polar(1.0, m_in * phi);
                worst = std::max(worst, std::abs(lhs - rhs));
            }
    return worst;
}

std::string basis_to_json(const SteerableKernelBasis& basis, int side, double spacing, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::vector<EulerZYZ> rots;
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 10; ++i) {
        rots.push_back(seeded_rotation(rng));
        pts.push_back(seeded_point(rng, spacing * (side - 1) / 2.0));
    }
    FeatureType in, out;
    in.mult[basis.theta_in] = 1;
    out.mult[basis.lambda_out] = 1;
    nlohmann::json j;
    j["lambda_out"] = basis.lambda_out;
    j["theta_in"] = basis.theta_in;
    j["J_list"] = basis.J_list;
    j["radial"] = {{"kind", "gaussian_shells"},
                   {"count", basis.radial.count},
                   {"spacing", basis.radial.spacing},
                   {"width", basis.radial.width}};
    j["lattice"] = {{"side", side},
                    {"spacing", spacing},
                    {"layout", "i,j,k,out,in row-major; value [re, im]"},
                    {"out_dim", 2 * basis.lambda_out + 1},
                    {"in_dim", 2 * basis.theta_in + 1}};
    j["elements"] = nlohmann::json::array();
    for (const auto& e : basis.elements) {
        auto fn = [&](const Eigen::Vector3d& y) { return basis.evaluate(e, y); };
        const auto lattice = sample_kernel(fn, 2 * basis.lambda_out + 1, 2 * basis.theta_in + 1, side, spacing);
        nlohmann::json el;
        el["J"] = e.J;
        el["shell"] = e.shell;
        el["continuous_residual"] = continuous_constraint_residual(fn, basis.lambda_out, basis.theta_in, rots, pts);
        el["lattice_residual"] = constraint_residual(lattice, in, out, {rots.begin(), rots.begin() + 3});
        nlohmann::json vals = nlohmann::json::array();
        for (const auto& v : lattice.values) vals.push_back({v.real(), v.imag()});
        el["values"] = std::move(vals);
        j["elements"].push_back(std::move(el));
    }
    return j.dump();
}

}  // namespace equivar
