#include "equivar/errors.hpp"
#include "equivar/steerable.hpp"
#include "support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <cmath>

using namespace equivar;
using namespace testing_support;

namespace {

std::vector<EulerZYZ> rotations(int n, std::mt19937_64& rng) {
    std::vector<EulerZYZ> out;
    for (int i = 0; i < n; ++i) out.push_back(random_rotation(rng));
    return out;
}

std::vector<Eigen::Vector3d> points(int n, double radius, std::mt19937_64& rng) {
    std::vector<Eigen::Vector3d> out;
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int i = 0; i < n; ++i) out.push_back(random_rotation_matrix(rng).col(0) * radius * u(rng));
    return out;
}

FeatureType single(int l) { return FeatureType{{{l, 1}}}; }

}  // namespace

TEST(SteerableBasis, ScalarPairIsIsotropic) {
    const auto b = solve_angular_basis(0, 0, RadialShells::for_lattice(1.0, 3));
    ASSERT_EQ(b.J_list, std::vector<int>{0});
    EXPECT_EQ(b.elements.size(), 3u);
    std::mt19937_64 rng(1);
    const cd ref = angular_element(0, 0, 0, Eigen::Vector3d::UnitZ())(0, 0);
    for (const auto& y : points(5, 1.0, rng)) EXPECT_NEAR(std::abs(angular_element(0, 0, 0, y.normalized())(0, 0) - ref), 0.0, 1e-15);
}

TEST(SteerableBasis, VectorFromScalarFollowsDegreeOneHarmonics) {
    const auto b = solve_angular_basis(1, 0, RadialShells::for_lattice(1.0, 1));
    ASSERT_EQ(b.J_list, std::vector<int>{1});
    std::mt19937_64 rng(2);
    for (const auto& y : points(5, 1.0, rng)) {
        double t, p;
        to_angles(y, t, p);
        const CMatrix k = angular_element(1, 0, 1, y.normalized());
        for (int a = -1; a <= 1; ++a) EXPECT_NEAR(std::abs(k(a + 1, 0) - std::conj(sph_harm(1, a, t, p))), 0.0, 1e-14);
    }
}

TEST(SteerableBasis, DegreeRangeRule) {
    EXPECT_EQ(solve_angular_basis(1, 1, {}).J_list, (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(solve_angular_basis(2, 1, {}).J_list, (std::vector<int>{1, 2, 3}));
    EXPECT_THROW(angular_element(2, 0, 1, Eigen::Vector3d::UnitZ()), std::invalid_argument);
}

TEST(SteerableBasis, NullSpaceHasOneSolutionPerCoupledDegree) {
    for (int l = 0; l <= 2; ++l)
        for (int t = 0; t <= 2; ++t)
            for (int j = 0; j <= l + t + 1; ++j) {
                const int want = (j >= std::abs(l - t) && j <= l + t) ? 1 : 0;
                EXPECT_EQ(constraint_nullspace_dimension(l, t, j), want) << l << " " << t << " " << j;
            }
}

TEST(SteerableBasis, ContinuousConstraintHoldsForEveryElement) {
    std::mt19937_64 rng(3);
    const auto rots = rotations(50, rng);
    const auto pts = points(20, 3.0, rng);
    for (int l = 0; l <= 2; ++l)
        for (int t = 0; t <= 2; ++t) {
            const auto b = solve_angular_basis(l, t, RadialShells::for_lattice(1.0, 3));
            for (const auto& e : b.elements) {
                const double r = continuous_constraint_residual([&](const Eigen::Vector3d& y) { return b.evaluate(e, y); },
                                                                l, t, rots, pts);
                EXPECT_LT(r, 1e-9) << l << " " << t << " J=" << e.J;
            }
        }
}

TEST(SteerableBasis, ElementsAreLinearlyIndependent) {
    std::mt19937_64 rng(4);
    const auto b = solve_angular_basis(2, 2, RadialShells::for_lattice(1.0, 2));
    const auto pts = points(30, 2.0, rng);
    Eigen::MatrixXcd A(pts.size() * 25, b.elements.size());
    for (std::size_t e = 0; e < b.elements.size(); ++e)
        for (std::size_t p = 0; p < pts.size(); ++p) {
            const CMatrix k = b.evaluate(b.elements[e], pts[p]);
            for (int i = 0; i < 25; ++i) A(p * 25 + i, e) = k(i / 5, i % 5);
        }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
    EXPECT_GT(svd.singularValues().tail(1)(0), 1e-3 * svd.singularValues()(0));
}

TEST(LatticeKernel, SteerableElementsPassResidual) {
    std::mt19937_64 rng(5);
    const auto rots = rotations(4, rng);
    for (auto [l, t] : {std::pair{1, 1}, std::pair{2, 1}}) {
        const auto b = solve_angular_basis(l, t, RadialShells::for_lattice(1.0, 5));
        for (const auto& e : b.elements) {
            const auto k = sample_kernel([&](const Eigen::Vector3d& y) { return b.evaluate(e, y); }, 2 * l + 1,
                                         2 * t + 1, 9, 1.0);
            EXPECT_LT(constraint_residual(k, single(t), single(l), rots), 1e-6) << l << t << " J=" << e.J << " k=" << e.shell;
        }
    }
}

TEST(LatticeKernel, RandomKernelFailsResidual) {
    std::mt19937_64 rng(6);
    auto k = VolumetricKernel::zeros(9, 1.0, 3, 3);
    for (auto& v : k.values) v = random_complex(rng);
    EXPECT_GT(constraint_residual(k, single(1), single(1), rotations(3, rng)), 0.1);
}

TEST(LatticeKernel, IsotropicScalarPasses) {
    std::mt19937_64 rng(7);
    // Radial profile drawn from the lattice's own shells.
    const auto shells = RadialShells::for_lattice(1.0, 5);
    const std::vector<double> w{0.3, -1.0, 0.5, 2.0, 0.7};
    const auto k = sample_kernel(
        [&](const Eigen::Vector3d& y) {
            double v = 0.0;
            for (int s = 0; s < 5; ++s) v += w[s] * shells(s, y.norm());
            return CMatrix::Constant(1, 1, v);
        },
        1, 1, 9, 1.0);
    EXPECT_LT(constraint_residual(k, single(0), single(0), rotations(3, rng)), 1e-9);
}

TEST(SemidirectConv, DeltaKernelIsIdentityOnInterior) {
    std::mt19937_64 rng(8);
    auto f = LatticeField::zeros(7, 2, 0.5);
    for (auto& v : f.values) v = random_complex(rng);
    auto k = VolumetricKernel::zeros(3, 0.5, 2, 2);
    k.at(1, 1, 1, 0, 0) = k.at(1, 1, 1, 1, 1) = 8.0;  // 1 / h^3
    const auto out = semidirect_conv(k, f);
    for (int x = 1; x < 6; ++x)
        for (int y = 1; y < 6; ++y)
            for (int z = 1; z < 6; ++z)
                for (int c = 0; c < 2; ++c) EXPECT_NEAR(std::abs(out.at(x, y, z, c) - f.at(x, y, z, c)), 0.0, 1e-14);
}

TEST(SemidirectConv, ConvolutionOrientation) {
    auto f = LatticeField::zeros(5, 1, 1.0);
    f.at(2, 2, 2, 0) = 1.0;
    auto k = VolumetricKernel::zeros(3, 1.0, 1, 1);
    k.at(2, 1, 1, 0, 0) = 1.0;  // offset +x
    const auto out = semidirect_conv(k, f);
    EXPECT_EQ(out.at(3, 2, 2, 0), cd(1.0));
    EXPECT_EQ(out.at(1, 2, 2, 0), cd(0.0));
}

TEST(SemidirectConv, LatticeRotationsExact) {
    std::mt19937_64 rng(9);
    const int l = 1, t = 2;
    const auto b = solve_angular_basis(l, t, RadialShells::for_lattice(1.0, 3));
    std::vector<cd> w(b.elements.size());
    for (auto& v : w) v = random_complex(rng);
    const auto k = sample_kernel([&](const Eigen::Vector3d& y) { return b.evaluate(w, y); }, 2 * l + 1, 2 * t + 1, 5, 1.0);
    auto f = LatticeField::zeros(9, 2 * t + 1, 1.0);
    for (auto& v : f.values) v = random_complex(rng);
    const auto out = semidirect_conv(k, f);
    std::vector<Eigen::Matrix3i> rots;
    Eigen::Matrix3i z90, x90;
    z90 << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    x90 << 1, 0, 0, 0, 0, -1, 0, 1, 0;
    rots = {z90, x90, z90 * x90, x90 * x90 * z90};
    for (const auto& R : rots) {
        const EulerZYZ g = rotation_from_matrix(R.cast<double>());
        const auto lhs = semidirect_conv(k, rotate_lattice_field(f, R, wigner_D(t, g)));
        const auto rhs = rotate_lattice_field(out, R, wigner_D(l, g));
        EXPECT_LT(max_abs_diff(lhs.values, rhs.values), 1e-10);
    }
}

TEST(SemidirectConv, Errors) {
    EXPECT_THROW(semidirect_conv(VolumetricKernel::zeros(3, 1.0, 1, 2), LatticeField::zeros(5, 1, 1.0)), ShapeMismatch);
    EXPECT_THROW(VolumetricKernel::zeros(4, 1.0, 1, 1), ShapeMismatch);
}

TEST(SemidirectConv, RefinementMonotone) {
    const auto r = refinement_study(1, 1, {0.5, 0.25, 0.125});
    ASSERT_EQ(r.size(), 3u);
    EXPECT_GT(r[0], r[1]);
    EXPECT_GT(r[1], r[2]);
}

TEST(CircularHarmonics, IsotropicAtZero) {
    const CircularHarmonic k{0, 0.0, [](double r) { return std::exp(-r); }};
    EXPECT_NEAR(std::abs(k(1.3, 0.2) - k(1.3, 2.9)), 0.0, 1e-15);
}

TEST(CircularHarmonics, RotatingArgumentMultipliesPhase) {
    std::mt19937_64 rng(10);
    for (int m : {-2, 1, 3}) {
        const CircularHarmonic k{m, 0.4, [](double r) { return r * std::exp(-r); }};
        for (int i = 0; i < 5; ++i) {
            const double a = random_angle(rng, 2 * kPi), phi = random_angle(rng, 2 * kPi);
            EXPECT_NEAR(std::abs(k(0.7, a - phi) - std::polar(1.0, -m * phi) * k(0.7, a)), 0.0, 1e-14);
        }
    }
}

TEST(CircularHarmonics, SolvesPlanarConstraint) {
    const std::vector<double> radii{0.3, 1.0, 2.2}, angles{0.0, 1.1, 2.5, 4.0}, shifts{0.3, 1.7, 5.9};
    for (auto [mi, mo] : {std::pair{0, 1}, std::pair{1, 1}, std::pair{2, -1}}) {
        const CircularHarmonic k{mo - mi, 0.2, [](double r) { return std::exp(-r * r); }};
        EXPECT_LT(se2_constraint_residual(k, mi, mo, radii, angles, shifts), 1e-12);
        const CircularHarmonic wrong{mi - mo + 1, 0.2, [](double r) { return std::exp(-r * r); }};
        EXPECT_GT(se2_constraint_residual(wrong, mi, mo, radii, angles, shifts), 0.1);
    }
}

TEST(BasisExport, JsonCarriesResiduals) {
    const auto b = solve_angular_basis(1, 1, RadialShells::for_lattice(1.0, 2));
    const auto j = nlohmann::json::parse(basis_to_json(b, 5, 1.0));
    EXPECT_EQ(j["elements"].size(), 6u);
    EXPECT_EQ(j["lattice"]["side"], 5);
    for (const auto& e : j["elements"]) {
        EXPECT_LT(e["continuous_residual"].get<double>(), 1e-9);
        EXPECT_EQ(e["values"].size(), 125u * 9u);
    }
}
