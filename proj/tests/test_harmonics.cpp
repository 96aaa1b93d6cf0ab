#include "equivar/errors.hpp"
#include "equivar/harmonics.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>

using namespace equivar;
using namespace testing_support;

namespace {

double max_abs(const CMatrix& a) { return a.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(WignerSmallD, DegreeZeroIsOne) {
    EXPECT_DOUBLE_EQ(wigner_d_small(0, 1.234)(0, 0), 1.0);
}

TEST(WignerSmallD, IdentityAtZeroAngle) {
    for (int l = 0; l <= 16; ++l)
        EXPECT_LT((wigner_d_small(l, 0.0) - RMatrix::Identity(2 * l + 1, 2 * l + 1)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(WignerSmallD, DegreeOneClosedForm) {
    const double b = 0.731, c = std::cos(b), s = std::sin(b), r = std::sqrt(2.0);
    RMatrix expect(3, 3);
    expect << (1 + c) / 2, s / r, (1 - c) / 2,
              -s / r, c, s / r,
              (1 - c) / 2, -s / r, (1 + c) / 2;
    EXPECT_LT((wigner_d_small(1, b) - expect).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_NEAR(wigner_d_small(1, b)(1, 1), std::cos(b), 1e-15);
}

TEST(WignerSmallD, RecurrenceMatchesExplicitSum) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 5; ++trial) {
        const double beta = random_angle(rng, kPi);
        for (int l = 0; l <= 12; ++l) {
            const RMatrix d = wigner_d_small(l, beta);
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n)
                    EXPECT_NEAR(d(m + l, n + l), wigner_d_explicit(l, m, n, beta), 1e-11) << l << " " << m << " " << n;
        }
    }
}

TEST(WignerSmallD, OrthogonalUpToDegree16) {
    std::mt19937_64 rng(5);
    for (int l = 0; l <= 16; ++l) {
        const RMatrix d = wigner_d_small(l, random_angle(rng, kPi));
        EXPECT_LT((d * d.transpose() - RMatrix::Identity(2 * l + 1, 2 * l + 1)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(WignerSmallD, EndpointsAreExact) {
    for (int l = 0; l <= 8; ++l) {
        const RMatrix d = wigner_d_small(l, kPi);
        for (int m = -l; m <= l; ++m)
            EXPECT_NEAR(d(m + l, -m + l), ((l + m) % 2 ? -1.0 : 1.0), 1e-12);
    }
}

TEST(WignerD, IdentityRotation) {
    for (int l = 0; l <= 6; ++l)
        EXPECT_LT(max_abs(wigner_D(l, {}) - CMatrix::Identity(2 * l + 1, 2 * l + 1)), 1e-15);
}

TEST(WignerD, UnitaryAndHomomorphic) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Matrix3d A = random_rotation_matrix(rng), B = random_rotation_matrix(rng);
        const EulerZYZ a = rotation_from_matrix(A), b = rotation_from_matrix(B), ab = rotation_from_matrix(A * B);
        for (int l = 0; l <= 16; ++l) {
            const CMatrix Da = wigner_D(l, a);
            const CMatrix I = CMatrix::Identity(2 * l + 1, 2 * l + 1);
            ASSERT_LT(max_abs(Da * Da.adjoint() - I), 1e-12);
            ASSERT_LT(max_abs(wigner_D(l, ab) - Da * wigner_D(l, b)), 1e-11);
        }
    }
}

TEST(WignerD, ConjugationSymmetry) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const EulerZYZ g = random_rotation(rng);
        for (int l = 0; l <= 8; ++l) {
            const CMatrix D = wigner_D(l, g);
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) {
                    const double sgn = ((n - m) % 2) ? -1.0 : 1.0;
                    EXPECT_LT(std::abs(std::conj(D(m + l, n + l)) - sgn * D(-m + l, -n + l)), 1e-13);
                }
        }
    }
}

TEST(WignerD, DegreeOneMatchesRotationMatrix) {
    std::mt19937_64 rng(3);
    const CMatrix V = spherical_basis();
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Matrix3d R = random_rotation_matrix(rng);
        const CMatrix D = wigner_D(1, rotation_from_matrix(R));
        EXPECT_LT(max_abs(D - V * R.cast<cd>() * V.adjoint()), 1e-12);
    }
    EXPECT_LT(max_abs(V * V.adjoint() - CMatrix::Identity(3, 3)), 1e-15);
}

TEST(WignerD, RealBasisMakesBlocksReal) {
    std::mt19937_64 rng(4);
    for (int l = 0; l <= 6; ++l) {
        const CMatrix Q = real_basis(l);
        EXPECT_LT(max_abs(Q * Q.adjoint() - CMatrix::Identity(2 * l + 1, 2 * l + 1)), 1e-15);
        const CMatrix Dr = Q * wigner_D(l, random_rotation(rng)) * Q.adjoint();
        EXPECT_LT(Dr.imag().cwiseAbs().maxCoeff(), 1e-13);
    }
}

TEST(SphHarm, ConstantValue) {
    EXPECT_NEAR(sph_harm(0, 0, 0.4, 2.0).real(), 0.28209479177387814, 1e-15);
    EXPECT_NEAR(sph_harm(0, 0, 0.4, 2.0).imag(), 0.0, 1e-15);
}

TEST(SphHarm, ClosedFormsUpToDegreeTwo) {
    std::mt19937_64 rng(6);
    const cd i(0, 1);
    for (int trial = 0; trial < 20; ++trial) {
        const double t = random_angle(rng, kPi), p = random_angle(rng, 2 * kPi);
        const double c = std::cos(t), s = std::sin(t);
        EXPECT_LT(std::abs(sph_harm(1, 0, t, p) - std::sqrt(3 / (4 * kPi)) * c), 1e-14);
        EXPECT_LT(std::abs(sph_harm(1, 1, t, p) + std::sqrt(3 / (8 * kPi)) * s * std::exp(i * p)), 1e-14);
        EXPECT_LT(std::abs(sph_harm(1, -1, t, p) - std::sqrt(3 / (8 * kPi)) * s * std::exp(-i * p)), 1e-14);
        EXPECT_LT(std::abs(sph_harm(2, 0, t, p) - std::sqrt(5 / (16 * kPi)) * (3 * c * c - 1)), 1e-14);
        EXPECT_LT(std::abs(sph_harm(2, 1, t, p) + std::sqrt(15 / (8 * kPi)) * s * c * std::exp(i * p)), 1e-14);
        EXPECT_LT(std::abs(sph_harm(2, 2, t, p) - std::sqrt(15 / (32 * kPi)) * s * s * std::exp(2.0 * i * p)), 1e-14);
        EXPECT_LT(std::abs(sph_harm(2, -2, t, p) - std::sqrt(15 / (32 * kPi)) * s * s * std::exp(-2.0 * i * p)), 1e-14);
    }
}

TEST(SphHarm, BatchMatchesSingle) {
    const auto all = sph_harm_all(9, 1.1, 0.3);
    for (int l = 0; l < 9; ++l)
        for (int m = -l; m <= l; ++m)
            EXPECT_LT(std::abs(all[l * l + l + m] - sph_harm(l, m, 1.1, 0.3)), 1e-15);
}

TEST(SphHarm, ConjugateOrderIdentity) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const double t = random_angle(rng, kPi), p = random_angle(rng, 2 * kPi);
        for (int l = 0; l <= 8; ++l)
            for (int m = -l; m <= l; ++m) {
                const double sgn = (std::abs(m) % 2) ? -1.0 : 1.0;
                EXPECT_LT(std::abs(std::conj(sph_harm(l, m, t, p)) - sgn * sph_harm(l, -m, t, p)), 1e-14);
            }
    }
}

TEST(SphHarm, DegreeParitySignIsNotTheConjugationRule) {
    // conj(Y^1_0) equals Y^1_0, so a (-1)^l factor on the right cannot hold.
    const double t = 0.7, p = 0.2;
    EXPECT_GT(std::abs(std::conj(sph_harm(1, 0, t, p)) + sph_harm(1, 0, t, p)), 0.1);
}

TEST(SphHarm, RotationRule) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Matrix3d R = random_rotation_matrix(rng);
        const EulerZYZ g = rotation_from_matrix(R);
        const double t = random_angle(rng, kPi), p = random_angle(rng, 2 * kPi);
        double rt, rp;
        to_angles(R * unit_vector(t, p), rt, rp);
        for (int l = 0; l <= 8; ++l) {
            const CMatrix D = wigner_D(l, g);
            for (int m = -l; m <= l; ++m) {
                cd rhs = 0;
                for (int n = -l; n <= l; ++n) rhs += std::conj(D(m + l, n + l)) * sph_harm(l, n, t, p);
                EXPECT_LT(std::abs(sph_harm(l, m, rt, rp) - rhs), 1e-11);
            }
        }
    }
}

TEST(SphHarm, MutatedPhaseBreaksRotationRule) {
    set_phase_convention(PhaseConvention::NoCondonShortley);
    const cd mutated = sph_harm(1, 1, 0.5, 0.0);
    set_phase_convention(PhaseConvention::CondonShortley);
    EXPECT_NEAR(mutated.real(), -sph_harm(1, 1, 0.5, 0.0).real(), 1e-15);
}

TEST(ClebschGordan, SelectionRule) {
    EXPECT_EQ(clebsch_gordan(1, 1, 1, 0, 2, 0), 0.0);
    EXPECT_EQ(clebsch_gordan(1, 1, 1, 1, 1, 2), 0.0);
    EXPECT_EQ(clebsch_gordan(1, 0, 1, 0, 3, 0), 0.0);
}

TEST(ClebschGordan, TrivialCoupling) {
    for (int l = 0; l <= 6; ++l)
        for (int m = -l; m <= l; ++m)
            for (int J = 0; J <= 7; ++J)
                for (int M = -J; M <= J; ++M)
                    EXPECT_NEAR(clebsch_gordan(l, m, 0, 0, J, M), (J == l && M == m) ? 1.0 : 0.0, 1e-14);
}

TEST(ClebschGordan, KnownValues) {
    EXPECT_NEAR(clebsch_gordan(1, 1, 1, -1, 0, 0), 1 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(clebsch_gordan(1, 0, 1, 0, 0, 0), -1 / std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(clebsch_gordan(1, 1, 1, -1, 1, 0), 1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(clebsch_gordan(1, 0, 1, 0, 2, 0), std::sqrt(2.0 / 3.0), 1e-15);
    EXPECT_NEAR(clebsch_gordan(1, 1, 1, 1, 2, 2), 1.0, 1e-15);
    EXPECT_NEAR(clebsch_gordan(2, 1, 1, -1, 1, 0), std::sqrt(3.0 / 10.0), 1e-15);
}

TEST(ClebschGordan, Orthogonality) {
    for (int l1 = 0; l1 <= 8; ++l1)
        for (int l2 = 0; l2 <= 8; ++l2)
            for (int J = std::abs(l1 - l2); J <= l1 + l2; ++J)
                for (int Jp = std::abs(l1 - l2); Jp <= l1 + l2; ++Jp)
                    for (int M = -std::min(J, Jp); M <= std::min(J, Jp); ++M) {
                        double s = 0;
                        for (int m1 = -l1; m1 <= l1; ++m1) {
                            const int m2 = M - m1;
                            if (std::abs(m2) > l2) continue;
                            s += clebsch_gordan(l1, m1, l2, m2, J, M) * clebsch_gordan(l1, m1, l2, m2, Jp, M);
                        }
                        ASSERT_NEAR(s, J == Jp ? 1.0 : 0.0, 1e-12) << l1 << l2 << J << Jp << M;
                    }
}

TEST(ClebschGordan, ProductDecomposition) {
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const EulerZYZ g = random_rotation(rng);
        std::vector<CMatrix> D;
        for (int l = 0; l <= 8; ++l) D.push_back(wigner_D(l, g));
        for (int l1 = 0; l1 <= 4; ++l1)
            for (int l2 = 0; l2 <= 4; ++l2)
                for (int m1 = -l1; m1 <= l1; ++m1)
                    for (int n1 = -l1; n1 <= l1; ++n1)
                        for (int m2 = -l2; m2 <= l2; ++m2)
                            for (int n2 = -l2; n2 <= l2; ++n2) {
                                cd rhs = 0;
                                const int M = m1 + m2, N = n1 + n2;
                                for (int J = std::abs(l1 - l2); J <= l1 + l2; ++J) {
                                    if (std::abs(M) > J || std::abs(N) > J) continue;
                                    rhs += clebsch_gordan(l1, m1, l2, m2, J, M) *
                                           clebsch_gordan(l1, n1, l2, n2, J, N) * D[J](M + J, N + J);
                                }
                                const cd lhs = D[l1](m1 + l1, n1 + l1) * D[l2](m2 + l2, n2 + l2);
                                ASSERT_LT(std::abs(lhs - rhs), 1e-11);
                            }
    }
}

TEST(CGTable, MatchesDirectEvaluation) {
    const CGTable t(5);
    for (int l1 = 0; l1 <= 5; ++l1)
        for (int l2 = 0; l2 <= 5; ++l2)
            for (int J = std::abs(l1 - l2); J <= l1 + l2; ++J)
                for (int m1 = -l1; m1 <= l1; ++m1)
                    for (int m2 = -l2; m2 <= l2; ++m2)
                        EXPECT_EQ(t(l1, m1, l2, m2, J), clebsch_gordan(l1, m1, l2, m2, J, m1 + m2));
    EXPECT_THROW(t(6, 0, 0, 0, 6), BandlimitOverflow);
}

TEST(CGTable, CacheRoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "equivar_cg_cache_test";
    std::filesystem::remove_all(dir);
    setenv("EQUIVAR_CACHE_DIR", dir.c_str(), 1);
    const CGTable built = CGTable::load_or_build(4);
    EXPECT_TRUE(std::filesystem::exists(dir / "cg_4.bin"));
    const CGTable loaded = CGTable::load_or_build(4);
    unsetenv("EQUIVAR_CACHE_DIR");
    EXPECT_EQ(built.raw(), loaded.raw());
    std::filesystem::remove_all(dir);
}

TEST(Rotation, IdentityGivesZeroAngles) {
    const EulerZYZ g = rotation_from_matrix(Eigen::Matrix3d::Identity());
    EXPECT_EQ(g.alpha, 0.0);
    EXPECT_EQ(g.beta, 0.0);
    EXPECT_EQ(g.gamma, 0.0);
}

TEST(Rotation, QuarterTurnAboutZ) {
    Eigen::Matrix3d R;
    R << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    const EulerZYZ g = rotation_from_matrix(R);
    EXPECT_NEAR(g.alpha, kPi / 2, 1e-15);
    EXPECT_EQ(g.beta, 0.0);
    EXPECT_EQ(g.gamma, 0.0);
    EXPECT_LT((rotation_matrix(g) * Eigen::Vector3d::UnitX() - Eigen::Vector3d::UnitY()).norm(), 1e-15);
}

TEST(Rotation, RandomRoundTrip) {
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Matrix3d R = random_rotation_matrix(rng);
        const EulerZYZ g = rotation_from_matrix(R);
        EXPECT_GE(g.alpha, 0.0);
        EXPECT_LT(g.alpha, 2 * kPi);
        EXPECT_GE(g.gamma, 0.0);
        EXPECT_LT(g.gamma, 2 * kPi);
        EXPECT_LT((rotation_matrix(g) - R).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Rotation, GimbalLockSetsGammaZero) {
    for (double beta : {0.0, kPi}) {
        const EulerZYZ in{0.7, beta, 1.9};
        const Eigen::Matrix3d R = rotation_matrix(in);
        const EulerZYZ g = rotation_from_matrix(R);
        EXPECT_EQ(g.gamma, 0.0);
        EXPECT_LT((rotation_matrix(g) - R).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT(max_abs(wigner_D(3, g) - wigner_D(3, in)), 1e-12);
    }
}

TEST(Rotation, RejectsNonRotations) {
    Eigen::Matrix3d reflect = Eigen::Matrix3d::Identity();
    reflect(2, 2) = -1;
    EXPECT_THROW(rotation_from_matrix(reflect), NotARotation);
    EXPECT_THROW(rotation_from_matrix(2.0 * Eigen::Matrix3d::Identity()), NotARotation);
}

TEST(Rotation, NearPoleRoundTripKeepsFullPrecision) {
    std::mt19937_64 rng(77);
    for (double beta : {1e-13, 1e-10, 1e-8, 1e-6, kPi - 1e-9}) {
        const Eigen::Matrix3d Q = random_rotation_matrix(rng);
        const Eigen::Matrix3d R = Q.transpose() * rotation_matrix({0.3, beta, 2.1}) * Q;
        const EulerZYZ g = rotation_from_matrix(R);
        EXPECT_LT((rotation_matrix(g) - R).cwiseAbs().maxCoeff(), 1e-14) << beta;
    }
}
