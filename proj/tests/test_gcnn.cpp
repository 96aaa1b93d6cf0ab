#include "equivar/errors.hpp"
#include "equivar/gcnn.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace equivar;

namespace {

double uniform(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(-1.0, 1.0)(rng); }

ImageZ2 random_image(int w, int h, int c, std::mt19937_64& rng) {
    auto f = ImageZ2::zeros(w, h, c);
    for (auto& v : f.values) v = uniform(rng);
    return f;
}

P4Feature random_p4(int n, int c, std::mt19937_64& rng) {
    auto f = P4Feature::zeros(n, n, c);
    for (auto& v : f.values) v = uniform(rng);
    return f;
}

KernelZ2 random_kernel(int size, int out, int in, std::mt19937_64& rng) {
    auto k = KernelZ2::zeros(size, out, in);
    for (auto& v : k.values) v = uniform(rng);
    return k;
}

GroupKernel random_group_kernel(int size, int out, int in, std::mt19937_64& rng) {
    auto k = GroupKernel::zeros(size, (size - 1) / 2, out, in);
    for (auto& v : k.values) v = uniform(rng);
    return k;
}

Eigen::VectorXd flat(const P4Feature& f) { return Eigen::Map<const Eigen::VectorXd>(f.values.data(), f.values.size()); }

P4Feature unflat(const Eigen::VectorXd& v, int n) {
    auto f = P4Feature::zeros(n, n, 1);
    for (int i = 0; i < v.size(); ++i) f.values[i] = v(i);
    return f;
}

}  // namespace

TEST(Z2Conv, OnesKernelOnDeltaGivesBox) {
    auto f = ImageZ2::zeros(7, 7, 1);
    f.at(3, 3, 0) = 1.0;
    auto k = KernelZ2::zeros(3, 1, 1);
    for (auto& v : k.values) v = 1.0;
    const auto out = z2_conv(k, f);
    for (int y = 0; y < 7; ++y)
        for (int x = 0; x < 7; ++x) EXPECT_EQ(out.at(x, y, 0), (std::abs(x - 3) <= 1 && std::abs(y - 3) <= 1) ? 1.0 : 0.0);
}

TEST(Z2Conv, CrossCorrelationOrientation) {
    auto f = ImageZ2::zeros(5, 5, 1);
    f.at(2, 2, 0) = 1.0;
    auto k = KernelZ2::zeros(3, 1, 1);
    k.at(2, 1, 0, 0) = 1.0;  // offset (+1, 0)
    const auto out = z2_conv(k, f);
    EXPECT_EQ(out.at(1, 2, 0), 1.0);
    EXPECT_EQ(out.at(3, 2, 0), 0.0);
}

TEST(Z2Conv, IdentityKernel) {
    std::mt19937_64 rng(1);
    const auto f = random_image(6, 4, 2, rng);
    auto k = KernelZ2::zeros(1, 2, 2);
    k.at(0, 0, 0, 0) = k.at(0, 0, 1, 1) = 1.0;
    EXPECT_EQ(z2_conv(k, f).values, f.values);
}

TEST(Z2Conv, PeriodicShiftCommutesExactly) {
    std::mt19937_64 rng(2);
    const auto f = random_image(9, 7, 3, rng);
    const auto k = random_kernel(5, 2, 3, rng);
    for (auto [tx, ty] : {std::pair{3, -2}, std::pair{-4, 5}, std::pair{8, 1}})
        EXPECT_EQ(z2_conv(k, translate(f, tx, ty)).values, translate(z2_conv(k, f), tx, ty).values);
}

TEST(Z2Conv, ZeroPaddingEquivariantOnInteriorOnly) {
    std::mt19937_64 rng(3);
    auto f = ImageZ2::zeros(12, 12, 1);
    for (int y = 3; y < 9; ++y)
        for (int x = 3; x < 9; ++x) f.at(x, y, 0) = uniform(rng);
    const auto k = random_kernel(3, 1, 1, rng);
    // Support stays clear of the border after the shift: exact everywhere.
    EXPECT_EQ(z2_conv(k, translate(f, 2, 1), Padding::Zero).values,
              translate(z2_conv(k, f, Padding::Zero), 2, 1).values);
    // A full random image shifted across the border differs at the edge.
    const auto g = random_image(12, 12, 1, rng);
    const auto a = z2_conv(k, translate(g, 2, 1), Padding::Zero);
    const auto b = translate(z2_conv(k, g, Padding::Zero), 2, 1);
    double edge = 0.0;
    for (int y = 0; y < 12; ++y)
        for (int x = 0; x < 12; ++x) {
            const double d = std::abs(a.at(x, y, 0) - b.at(x, y, 0));
            if (x >= 4 && x <= 10 && y >= 3 && y <= 10) EXPECT_EQ(d, 0.0) << x << "," << y;
            edge = std::max(edge, d);
        }
    EXPECT_GT(edge, 1e-3);
}

TEST(Z2Conv, ChannelMismatchThrows) {
    EXPECT_THROW(z2_conv(KernelZ2::zeros(3, 1, 2), ImageZ2::zeros(4, 4, 1)), ShapeMismatch);
    EXPECT_THROW(KernelZ2::zeros(4, 1, 1), ShapeMismatch);
}

TEST(GroupAction, C4TranslationsFormTheGroup) {
    std::mt19937_64 rng(4);
    const auto f = random_p4(5, 2, rng);
    // (r1, t1)(r2, t2) = (r1 + r2, t1 + R_r1 t2)
    const auto lhs = act_c4(act_c4(f, 3, 1, 4), 1, 2, -1);
    const auto t = rotate_c4(1, 1, 4);
    EXPECT_EQ(lhs.values, act_c4(f, 4, 2 + t[0], -1 + t[1]).values);
    EXPECT_EQ(act_c4(f, 4, 0, 0).values, f.values);
}

TEST(LiftingConv, ExactlyEquivariantOverWholeGroup) {
    std::mt19937_64 rng(5);
    const auto f = random_image(5, 5, 2, rng);
    const auto k = random_kernel(3, 3, 2, rng);
    const auto out = lifting_conv(k, f);
    for (int r = 0; r < 4; ++r)
        for (int ty = 0; ty < 5; ++ty)
            for (int tx = 0; tx < 5; ++tx)
                ASSERT_EQ(lifting_conv(k, act_c4(f, r, tx, ty)).values, act_c4(out, r, tx, ty).values)
                    << r << " " << tx << " " << ty;
}

TEST(GroupConv, ExactlyEquivariantOverWholeGroup) {
    std::mt19937_64 rng(6);
    const auto f = random_p4(5, 2, rng);
    const auto k = random_group_kernel(3, 2, 2, rng);
    const auto out = group_conv(k, f);
    for (int r = 0; r < 4; ++r)
        for (int ty = 0; ty < 5; ++ty)
            for (int tx = 0; tx < 5; ++tx)
                ASSERT_EQ(group_conv(k, act_c4(f, r, tx, ty)).values, act_c4(out, r, tx, ty).values);
}

TEST(GroupConv, DeltaKernelIsIdentity) {
    std::mt19937_64 rng(7);
    const auto f = random_p4(4, 1, rng);
    auto k = GroupKernel::zeros(1, 0, 1, 1);
    k.at(0, 0, 0, 0, 0) = 1.0;
    EXPECT_EQ(group_conv(k, f).values, f.values);
}

TEST(GroupConv, CompositionStaysEquivariant) {
    std::mt19937_64 rng(8);
    const auto img = random_image(6, 6, 1, rng);
    const auto k0 = random_kernel(3, 2, 1, rng);
    const auto k1 = random_group_kernel(3, 2, 2, rng), k2 = random_group_kernel(3, 1, 2, rng);
    auto net = [&](const ImageZ2& x) { return group_conv(k2, group_conv(k1, lifting_conv(k0, x))); };
    const auto out = net(img);
    for (auto [r, tx, ty] : {std::array{1, 2, 3}, std::array{2, 5, 0}, std::array{3, 1, 1}})
        EXPECT_EQ(net(act_c4(img, r, tx, ty)).values, act_c4(out, r, tx, ty).values);
}

TEST(KernelRecovery, GroupAveragedMapIsAGroupConvolution) {
    std::mt19937_64 rng(9);
    const int n = 4;
    Eigen::MatrixXd A(4 * n * n, 4 * n * n);
    for (int i = 0; i < A.size(); ++i) A.data()[i] = uniform(rng);
    const Eigen::MatrixXd avg = group_average(A, n);
    auto map = [&](const P4Feature& f) { return unflat(avg * flat(f), n); };
    // The average commutes with every group element.
    const auto probe = random_p4(n, 1, rng);
    for (int r = 0; r < 4; ++r)
        EXPECT_LT((flat(map(act_c4(probe, r, 1, 3))) - flat(act_c4(map(probe), r, 1, 3))).cwiseAbs().maxCoeff(), 1e-12);
    const auto k = recover_group_kernel(map, n);
    for (int t = 0; t < 5; ++t) {
        const auto f = random_p4(n, 1, rng);
        EXPECT_LT((flat(group_conv(k, f)) - flat(map(f))).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(KernelRecovery, UnaveragedMapIsNotReproduced) {
    std::mt19937_64 rng(10);
    const int n = 4;
    Eigen::MatrixXd A(4 * n * n, 4 * n * n);
    for (int i = 0; i < A.size(); ++i) A.data()[i] = uniform(rng);
    auto map = [&](const P4Feature& f) { return unflat(A * flat(f), n); };
    const auto k = recover_group_kernel(map, n);
    const auto f = random_p4(n, 1, rng);
    EXPECT_GT((flat(group_conv(k, f)) - flat(map(f))).cwiseAbs().maxCoeff(), 0.1);
}

TEST(Segmentation, RowsSumToOneAndShiftCommutes) {
    std::mt19937_64 rng(11);
    const auto img = random_image(8, 6, 3, rng);
    const auto k1 = random_kernel(3, 4, 3, rng), k2 = random_kernel(3, 5, 4, rng);
    const auto out = segmentation_pipeline(img, k1, k2);
    ASSERT_EQ(out.channels, 5);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 8; ++x) {
            double s = 0.0;
            for (int c = 0; c < 5; ++c) s += out.at(x, y, c);
            EXPECT_NEAR(s, 1.0, 1e-12);
        }
    EXPECT_EQ(segmentation_pipeline(translate(img, 3, -2), k1, k2).values, translate(out, 3, -2).values);
}

TEST(Segmentation, ConstantImageGivesConstantDistribution) {
    std::mt19937_64 rng(12);
    auto img = ImageZ2::zeros(5, 5, 3);
    for (int i = 0; i < 25; ++i) img.values[3 * i] = 0.3, img.values[3 * i + 1] = -0.2, img.values[3 * i + 2] = 0.9;
    const auto out = segmentation_pipeline(img, random_kernel(3, 2, 3, rng), random_kernel(3, 3, 2, rng));
    for (int i = 1; i < 25; ++i)
        for (int c = 0; c < 3; ++c) EXPECT_EQ(out.values[3 * i + c], out.values[c]);
}

TEST(Detection, TranslationShiftsAnchorsOnly) {
    DetectionField f{4, 4, false, 1, {}};
    for (int i = 0; i < 16; ++i) f.records.push_back({double(i % 4), double(i / 4), 2.0, 1.5, 0.25 + i / 64.0});
    const auto g = detection_head_transform(f, 0, 3, -2);
    const auto& rec = g.at(3, 2);  // came from (0, 0)
    EXPECT_EQ(rec, (std::vector<double>{3.0, -2.0, 2.0, 1.5, 0.25}));
    EXPECT_EQ(detection_head_transform(f, 0, 0, 0).records, f.records);
    EXPECT_THROW(detection_head_transform(f, 1, 0, 0), std::invalid_argument);
}

TEST(Detection, QuarterTurnUsesRowConvention) {
    const Eigen::Vector2d v = so2_row_rotation(1) * Eigen::Vector2d(1.0, 0.0);
    EXPECT_EQ(v, Eigen::Vector2d(0.0, -1.0));
    DetectionField f{3, 3, true, 2, {}};
    for (int i = 0; i < 9; ++i) f.records.push_back({1.0, 2.0, 1.0, 0.0, 0.0, 3.0, 0.4, 0.6});
    const auto g = detection_head_transform(f, 1, 0, 0);
    for (const auto& rec : g.records)
        EXPECT_EQ(rec, (std::vector<double>{2.0, -1.0, 0.0, -1.0, 3.0, 0.0, 0.4, 0.6}));
}

TEST(Detection, FourQuarterTurnsIsIdentity) {
    std::mt19937_64 rng(13);
    DetectionField f{5, 5, true, 1, {}};
    for (int i = 0; i < 25; ++i) {
        std::vector<double> rec(7);
        for (auto& v : rec) v = uniform(rng);
        rec[6] = 1.0;
        f.records.push_back(rec);
    }
    auto g = f;
    for (int i = 0; i < 4; ++i) g = rotate_detections(g, 1);
    EXPECT_EQ(g.records, f.records);
    // Pixel positions move with the same matrix as the vectors.
    f.at(1, 0)[0] = 42.0;
    EXPECT_EQ(rotate_detections(f, 1).at(0, 4)[1], -42.0);
}
