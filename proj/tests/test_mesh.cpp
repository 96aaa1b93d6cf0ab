#include "equivar/errors.hpp"
#include "equivar/mesh.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace equivar;
using namespace testing_support;

namespace {

MeshFeature random_feature(int n, std::vector<int> orders, std::mt19937_64& rng) {
    auto f = MeshFeature::zeros(n, std::move(orders));
    for (auto& v : f.values) v = random_complex(rng);
    return f;
}

std::vector<double> random_gauge(int n, std::mt19937_64& rng) {
    std::vector<double> g(n);
    for (auto& v : g) v = random_angle(rng, 2 * kPi);
    return g;
}

CircularHarmonic bump(int m, double phase) {
    return CircularHarmonic{m, phase, [](double r) { return std::exp(-r * r) * (1.0 + r); }};
}

}  // namespace

TEST(MeshConstruction, IcosahedronAndSphere) {
    const auto ico = icosahedron();
    EXPECT_EQ(ico.vertices.size(), 12u);
    EXPECT_EQ(ico.faces.size(), 20u);
    ico.validate();
    const auto atlas = build_atlas(ico);
    for (int i = 0; i < 12; ++i) {
        EXPECT_EQ(atlas.neighbors[i].size(), 5u);
        EXPECT_FALSE(atlas.boundary[i]);
        EXPECT_GT(atlas.normal[i].dot(ico.vertices[i]), 0.99);  // outward
    }
    const auto sphere = random_sphere_mesh(200, 1);
    EXPECT_EQ(sphere.vertices.size(), 200u);
    EXPECT_EQ(sphere.faces.size(), 396u);  // Euler: F = 2V - 4
    sphere.validate();
}

TEST(MeshConstruction, RejectsBrokenMeshes) {
    auto m = icosahedron();
    auto flipped = m;
    std::swap(flipped.faces[0][1], flipped.faces[0][2]);
    EXPECT_THROW(flipped.validate(), NonManifold);
    auto degenerate = flat_fan(4);
    degenerate.vertices[1] = degenerate.vertices[0];
    EXPECT_THROW(degenerate.validate(), NonManifold);
    auto bowtie = flat_fan(3);
    bowtie.vertices.emplace_back(-2.0, 0.0, 0.0);
    bowtie.vertices.emplace_back(-2.0, 1.0, 0.0);
    bowtie.faces.push_back({0, 4, 5});  // second fan at the centre
    EXPECT_THROW(build_atlas(bowtie), NonManifold);
    auto lonely = flat_fan(3);
    lonely.vertices.emplace_back(5.0, 5.0, 5.0);
    EXPECT_THROW(lonely.validate(), NonManifold);
}

TEST(MeshIO, OffRoundTripAndErrors) {
    const auto ico = icosahedron();
    std::stringstream ss;
    write_off(ico, ss);
    const auto back = read_off(ss);
    ASSERT_EQ(back.faces, ico.faces);
    for (std::size_t i = 0; i < ico.vertices.size(); ++i) EXPECT_EQ(back.vertices[i], ico.vertices[i]);
    std::istringstream bad1("OFF\n3 1 0\n0 0 0\n1 0 0\n");
    EXPECT_THROW(read_off(bad1), FormatError);
    std::istringstream bad2("PLY\n");
    EXPECT_THROW(read_off(bad2), FormatError);
    std::istringstream bad3("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n4 0 1 2 0\n");
    EXPECT_THROW(read_off(bad3), FormatError);
    std::istringstream bad4("OFF\n3 1 0\n0 0 0\n1 0 x\n0 1 0\n3 0 1 2\n");
    EXPECT_THROW(read_off(bad4), FormatError);
}

TEST(MeshIO, ObjReadsTrianglesWithSlashes) {
    std::istringstream in("# tri\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1/1 2/2 4/4\nf 1 4 -2\n");
    const auto m = read_obj(in);
    ASSERT_EQ(m.faces.size(), 2u);
    EXPECT_EQ(m.faces[0], (std::array<int, 3>{0, 1, 3}));
    EXPECT_EQ(m.faces[1], (std::array<int, 3>{0, 3, 2}));
    std::istringstream quad("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nf 1 2 4 3\n");
    EXPECT_THROW(read_obj(quad), FormatError);
}

TEST(Atlas, FlatGridHasEqualNormalsAndZeroTransport) {
    const auto m = flat_grid(5, 4, 0.5);
    const auto a = build_atlas(m);
    for (int i = 0; i < a.size(); ++i) {
        EXPECT_LT((a.normal[i] - Eigen::Vector3d::UnitZ()).norm(), 1e-15);
        EXPECT_LT(std::abs(a.e1[i].dot(a.e2[i])), 1e-12);
        EXPECT_NEAR(a.e1[i].norm(), 1.0, 1e-12);
        for (double phi : a.transport[i]) EXPECT_LT(std::abs(std::polar(1.0, phi) - 1.0), 1e-12);
        for (const auto& p : log_map(a, i)) {
            const Eigen::Vector3d d = m.vertices[p.j] - m.vertices[i];
            EXPECT_NEAR(p.r, d.norm(), 1e-15);
            EXPECT_LT(std::abs(std::polar(1.0, p.theta) - std::polar(1.0, std::atan2(d.y(), d.x()))), 1e-12);
        }
    }
}

TEST(Atlas, SymmetricFanSpacedByThirdPi) {
    auto m = flat_fan(6);
    for (int k = 1; k <= 6; ++k) m.vertices[k] *= 1.0 + 0.1 * k;  // radii differ, angles stay
    const auto a = build_atlas(m);
    const auto ring = log_map(a, 0);
    ASSERT_EQ(ring.size(), 6u);
    for (int k = 0; k < 6; ++k) {
        EXPECT_NEAR(ring[k].theta, k * kPi / 3, 1e-12);
        EXPECT_NEAR(ring[k].r, 1.0 + 0.1 * (k + 1), 1e-15);
    }
}

TEST(Atlas, NormalizedAnglesSumToFullTurnOnCurvedMesh) {
    const auto m = random_sphere_mesh(60, 2);
    const auto a = build_atlas(m);
    for (int i = 0; i < a.size(); ++i) {
        const auto& th = a.angle[i];
        double total = 0.0;
        for (std::size_t t = 0; t < th.size(); ++t) {
            double step = th[(t + 1) % th.size()] - th[t];
            if (step < 0) step += 2 * kPi;
            total += step;
        }
        EXPECT_NEAR(total, 2 * kPi, 1e-12);
        for (double v : th) {
            EXPECT_GE(v, 0.0);
            EXPECT_LT(v, 2 * kPi);
        }
        double area = 0.0;
        for (const auto& f : m.faces)
            if (f[0] == i || f[1] == i || f[2] == i)
                area += (m.vertices[f[1]] - m.vertices[f[0]]).cross(m.vertices[f[2]] - m.vertices[f[0]]).norm() / 2;
        EXPECT_NEAR(a.weight[i], area / 3, 1e-15);
    }
}

TEST(Atlas, DeterministicAndTransportAntisymmetric) {
    const auto m = random_sphere_mesh(200, 3);
    const auto a = build_atlas(m), b = build_atlas(m);
    EXPECT_EQ(a.angle, b.angle);
    EXPECT_EQ(a.transport, b.transport);
    for (int i = 0; i < a.size(); ++i)
        for (int j : a.neighbors[i])
            EXPECT_LT(std::abs(std::polar(1.0, transport_angle(a, j, i)) - std::conj(std::polar(1.0, transport_angle(a, i, j)))),
                      1e-12);
    EXPECT_THROW(transport_angle(a, 0, 0), std::out_of_range);
}

TEST(Atlas, RotatingFrameShiftsAnglesAndTransport) {
    const auto m = icosahedron();
    const auto a = build_atlas(m);
    std::vector<double> gauge(12, 0.0);
    const double delta = 0.8;
    gauge[4] = delta;
    const auto b = build_atlas(m, gauge);
    for (std::size_t t = 0; t < a.angle[4].size(); ++t)
        EXPECT_LT(std::abs(std::polar(1.0, b.angle[4][t]) - std::polar(1.0, a.angle[4][t] + delta)), 1e-12);
    // Frame at j rotated: phi_ji moves by -delta; frame at i rotated: by +delta.
    for (int i : a.neighbors[4]) {
        EXPECT_LT(std::abs(std::polar(1.0, transport_angle(b, i, 4)) - std::polar(1.0, transport_angle(a, i, 4) - delta)), 1e-12);
        EXPECT_LT(std::abs(std::polar(1.0, transport_angle(b, 4, i)) - std::polar(1.0, transport_angle(a, 4, i) + delta)), 1e-12);
    }
}

TEST(HarmonicConv, ZeroInputAndFlatConstant) {
    const auto m = flat_fan(6);
    const auto a = build_atlas(m);
    const auto zero = harmonic_conv(a, MeshFeature::zeros(7, {1}), bump(2, 0.3));
    for (auto v : zero.values) EXPECT_EQ(v, cd(0.0));
    auto f = MeshFeature::zeros(7, {0});
    for (auto& v : f.values) v = cd(0.7, -0.2);
    const CircularHarmonic flat{0, 0.0, [](double) { return 1.5; }};
    const auto out = harmonic_conv(a, f, flat);
    double wsum = 0.0;
    for (int j : a.neighbors[0]) wsum += a.weight[j];
    EXPECT_LT(std::abs(out.at(0, 0) - f.at(0, 0) * 1.5 * wsum), 1e-14);
    EXPECT_EQ(out.orders, std::vector<int>{0});
}

TEST(HarmonicConv, SingleVertexRotationPicksUpPhase) {
    std::mt19937_64 rng(4);
    const auto m = icosahedron();
    const auto f = random_feature(12, {1, -2}, rng);
    const auto k = bump(2, 0.4);
    std::vector<double> gauge(12, 0.0);
    const double phi = 1.1;
    gauge[7] = phi;
    const auto base = harmonic_conv(build_atlas(m), f, k);
    const auto moved = harmonic_conv(build_atlas(m, gauge), apply_gauge(f, gauge), k);
    EXPECT_EQ(base.orders, (std::vector<int>{3, 0}));
    for (int c = 0; c < 2; ++c) {
        EXPECT_LT(std::abs(moved.at(7, c) - std::polar(1.0, base.orders[c] * phi) * base.at(7, c)), 1e-12);
        EXPECT_LT(std::abs(moved.at(3, c) - base.at(3, c)), 1e-12);
    }
}

TEST(HarmonicConv, GaugeAuditOnIcosahedronAndSphere) {
    std::mt19937_64 rng(5);
    for (const auto& m : {icosahedron(), random_sphere_mesh(200, 6)}) {
        const int n = static_cast<int>(m.vertices.size());
        for (int trial = 0; trial < 5; ++trial) {
            const auto f = random_feature(n, {0, 1, -1, 2}, rng);
            const auto k = bump(trial - 2, 0.5 * trial);
            EXPECT_LT(harmonic_gauge_residual(m, f, k, random_gauge(n, rng)), 1e-10);
        }
    }
}

TEST(HarmonicConv, WrongOrderFailsAudit) {
    // Treating an order-1 feature as order 0 ignores transport: not equivariant.
    std::mt19937_64 rng(7);
    const auto m = icosahedron();
    auto f = random_feature(12, {1}, rng);
    const auto g = random_gauge(12, rng);
    const auto moved_f = apply_gauge(f, g);
    auto as_scalar = moved_f;
    as_scalar.orders = {0};
    auto base_scalar = f;
    base_scalar.orders = {0};
    const auto k = bump(1, 0.0);
    const auto lhs = harmonic_conv(build_atlas(m, g), as_scalar, k);
    const auto rhs = apply_gauge(harmonic_conv(build_atlas(m), f, k), g);
    EXPECT_GT(max_abs_diff(lhs.values, rhs.values), 1e-2);
    EXPECT_THROW(harmonic_conv(build_atlas(m), MeshFeature::zeros(5, {0}), k), ShapeMismatch);
}

TEST(GemConv, SelfOnlyAndIsotropicGraphConv) {
    std::mt19937_64 rng(8);
    const auto m = icosahedron();
    const auto a = build_atlas(m);
    const auto f = random_feature(12, {0, 0}, rng);
    CMatrix self(1, 2);
    self << cd(0.5, 0.1), cd(-1.0, 0.0);
    const GemKernel only_self{{0}, {0, 0}, self, nullptr};
    const auto out = gem_conv(a, f, only_self);
    for (int v = 0; v < 12; ++v) EXPECT_LT(std::abs(out.at(v, 0) - (self(0, 0) * f.at(v, 0) + self(0, 1) * f.at(v, 1))), 1e-15);
    // Isotropic scalar neighbour kernel: plain sum over neighbours.
    const auto iso = circular_harmonic_gem_kernel({0}, {0, 0}, CMatrix::Constant(1, 2, 1.0), [](double) { return 1.0; },
                                                  CMatrix::Zero(1, 2));
    const auto g = gem_conv(a, f, iso);
    for (int v = 0; v < 12; ++v) {
        cd want = 0.0;
        for (int j : a.neighbors[v]) want += f.at(j, 0) + f.at(j, 1);
        EXPECT_LT(std::abs(g.at(v, 0) - want), 1e-14);
    }
}

TEST(GemConv, GaugeEquivariantUnderRandomFields) {
    std::mt19937_64 rng(9);
    const std::vector<int> in{0, 1, 2, -1}, out{0, 1, -2};
    CMatrix c(3, 4), s(3, 4);
    for (int i = 0; i < 12; ++i) c.data()[i] = random_complex(rng), s.data()[i] = random_complex(rng);
    const auto k = circular_harmonic_gem_kernel(out, in, c, [](double r) { return r * std::exp(-r); }, s);
    for (const auto& m : {icosahedron(), random_sphere_mesh(200, 10)}) {
        const int n = static_cast<int>(m.vertices.size());
        for (int trial = 0; trial < 20; ++trial)
            EXPECT_LT(gem_gauge_residual(m, random_feature(n, in, rng), k, random_gauge(n, rng)), 1e-10);
    }
}

TEST(GemConv, ConstraintViolationsAreRejected) {
    const auto m = icosahedron();
    const auto a = build_atlas(m);
    const auto f = MeshFeature::zeros(12, {0, 1});
    GemKernel bad_nb{{1}, {0, 1}, CMatrix::Zero(1, 2), [](double, double theta) {
                         CMatrix k(1, 2);
                         k << std::polar(1.0, 2 * theta), 1.0;  // order 0 -> 1 needs e^{i theta}
                         return k;
                     }};
    EXPECT_THROW(gem_conv(a, f, bad_nb), KernelConstraintViolated);
    CMatrix self(1, 2);
    self << 1.0, 0.0;  // couples 0 -> 1
    GemKernel bad_self{{1}, {0, 1}, self, nullptr};
    EXPECT_THROW(gem_conv(a, f, bad_self), KernelConstraintViolated);
    GemKernel mismatch{{1}, {0}, CMatrix::Zero(1, 1), nullptr};
    EXPECT_THROW(gem_conv(a, f, mismatch), ShapeMismatch);
}

TEST(MeshFeatureIO, JsonRoundTrip) {
    std::mt19937_64 rng(11);
    const auto f = random_feature(5, {0, -1, 3}, rng);
    const auto back = MeshFeature::from_json(f.to_json());
    EXPECT_EQ(back.orders, f.orders);
    EXPECT_EQ(back.values, f.values);
    EXPECT_THROW(MeshFeature::from_json("{\"vertices\":2,\"channels\":[{\"order\":0,\"values\":[[1,0]]}]}"), FormatError);
}
