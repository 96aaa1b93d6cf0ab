#include "equivar/gcnn.hpp"

#include "equivar/errors.hpp"
#include "equivar/nonlin.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace equivar {

namespace {

int wrap(int v, int n) {
    const int r = v % n;
    return r < 0 ? r + n : r;
}

void require_square(int w, int h, const char* what) {
    if (w != h || w <= 0) throw ShapeMismatch(std::string(what) + ": rotations need a square window, got " +
                                              std::to_string(w) + "x" + std::to_string(h));
}

}  // namespace

ImageZ2 ImageZ2::zeros(int width, int height, int channels) {
    if (width <= 0 || height <= 0 || channels <= 0) throw ShapeMismatch("ImageZ2: non-positive shape");
    return ImageZ2{width, height, channels, std::vector<double>(static_cast<std::size_t>(width) * height * channels)};
}

KernelZ2 KernelZ2::zeros(int size, int out, int in) {
    if (size % 2 == 0) throw ShapeMismatch("KernelZ2: centred kernels need an odd size");
    return zeros(size, (size - 1) / 2, out, in);
}

KernelZ2 KernelZ2::zeros(int size, int origin, int out, int in) {
    if (size <= 0 || out <= 0 || in <= 0) throw ShapeMismatch("KernelZ2: non-positive shape");
    return KernelZ2{size, origin, out, in, std::vector<double>(static_cast<std::size_t>(size) * size * out * in)};
}

P4Feature P4Feature::zeros(int width, int height, int channels) {
    if (width <= 0 || height <= 0 || channels <= 0) throw ShapeMismatch("P4Feature: non-positive shape");
    return P4Feature{width, height, channels,
                     std::vector<double>(static_cast<std::size_t>(4) * width * height * channels)};
}

GroupKernel GroupKernel::zeros(int size, int origin, int out, int in) {
    if (size <= 0 || out <= 0 || in <= 0) throw ShapeMismatch("GroupKernel: non-positive shape");
    return GroupKernel{size, origin, out, in,
                       std::vector<double>(static_cast<std::size_t>(4) * size * size * out * in)};
}

ImageZ2 z2_conv(const KernelZ2& k, const ImageZ2& f, Padding padding) {
    if (k.in_channels != f.channels)
        throw ShapeMismatch("z2_conv: kernel takes " + std::to_string(k.in_channels) + " channels, image has " +
                            std::to_string(f.channels));
    auto out = ImageZ2::zeros(f.width, f.height, k.out_channels);
#pragma omp parallel for
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            for (int o = 0; o < k.out_channels; ++o) {
                double acc = 0.0;
                for (int iy = 0; iy < k.size; ++iy)
                    for (int ix = 0; ix < k.size; ++ix) {
                        int sx = x + ix - k.origin, sy = y + iy - k.origin;
                        if (padding == Padding::Periodic) {
                            sx = wrap(sx, f.width);
                            sy = wrap(sy, f.height);
                        } else if (sx < 0 || sy < 0 || sx >= f.width || sy >= f.height) {
                            continue;
                        }
                        for (int i = 0; i < k.in_channels; ++i) acc += k.at(ix, iy, o, i) * f.at(sx, sy, i);
                    }
                out.at(x, y, o) = acc;
            }
    return out;
}

ImageZ2 translate(const ImageZ2& f, int tx, int ty) {
    auto out = ImageZ2::zeros(f.width, f.height, f.channels);
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x)
            for (int c = 0; c < f.channels; ++c)
                out.at(x, y, c) = f.at(wrap(x - tx, f.width), wrap(y - ty, f.height), c);
    return out;
}

std::array<int, 2> rotate_c4(int r, int x, int y) {
    switch (wrap(r, 4)) {
        case 0: return {x, y};
        case 1: return {-y, x};
        case 2: return {-x, -y};
        default: return {y, -x};
    }
}

ImageZ2 act_c4(const ImageZ2& f, int r, int tx, int ty) {
    require_square(f.width, f.height, "act_c4");
    const int n = f.width;
    auto out = ImageZ2::zeros(n, n, f.channels);
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const auto s = rotate_c4(-r, x - tx, y - ty);
            for (int c = 0; c < f.channels; ++c) out.at(x, y, c) = f.at(wrap(s[0], n), wrap(s[1], n), c);
        }
    return out;
}

P4Feature act_c4(const P4Feature& f, int r, int tx, int ty) {
    require_square(f.width, f.height, "act_c4");
    const int n = f.width;
    auto out = P4Feature::zeros(n, n, f.channels);
    for (int s = 0; s < 4; ++s)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const auto p = rotate_c4(-r, x - tx, y - ty);
                for (int c = 0; c < f.channels; ++c)
                    out.at(s, x, y, c) = f.at(wrap(s - r, 4), wrap(p[0], n), wrap(p[1], n), c);
            }
    return out;
}

P4Feature lifting_conv(const KernelZ2& k, const ImageZ2& f) {
    require_square(f.width, f.height, "lifting_conv");
    if (k.in_channels != f.channels) throw ShapeMismatch("lifting_conv: channel mismatch");
    const int n = f.width;
    auto out = P4Feature::zeros(n, n, k.out_channels);
#pragma omp parallel for collapse(2)
    for (int r = 0; r < 4; ++r)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                for (int o = 0; o < k.out_channels; ++o) {
                    double acc = 0.0;
                    for (int iy = 0; iy < k.size; ++iy)
                        for (int ix = 0; ix < k.size; ++ix) {
                            const auto u = rotate_c4(r, ix - k.origin, iy - k.origin);
                            const int sx = wrap(x + u[0], n), sy = wrap(y + u[1], n);
                            for (int i = 0; i < k.in_channels; ++i) acc += k.at(ix, iy, o, i) * f.at(sx, sy, i);
                        }
                    out.at(r, x, y, o) = acc;
                }
    return out;
}

P4Feature group_conv(const GroupKernel& k, const P4Feature& f) {
    require_square(f.width, f.height, "group_conv");
    if (k.in_channels != f.channels) throw ShapeMismatch("group_conv: channel mismatch");
    const int n = f.width;
    auto out = P4Feature::zeros(n, n, k.out_channels);
#pragma omp parallel for collapse(2)
    for (int r = 0; r < 4; ++r)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x)
                for (int o = 0; o < k.out_channels; ++o) {
                    double acc = 0.0;
                    for (int s = 0; s < 4; ++s)
                        for (int iy = 0; iy < k.size; ++iy)
                            for (int ix = 0; ix < k.size; ++ix) {
                                const auto u = rotate_c4(r, ix - k.origin, iy - k.origin);
                                const int sx = wrap(x + u[0], n), sy = wrap(y + u[1], n);
                                for (int i = 0; i < k.in_channels; ++i)
                                    acc += k.at(s, ix, iy, o, i) * f.at((r + s) % 4, sx, sy, i);
                            }
                    out.at(r, x, y, o) = acc;
                }
    return out;
}

Eigen::MatrixXd group_average(const Eigen::MatrixXd& A, int width) {
    const int n = 4 * width * width;
    if (A.rows() != n || A.cols() != n)
        throw ShapeMismatch("group_average: expected a " + std::to_string(n) + "x" + std::to_string(n) + " map");
    // Index permutation of each group element, read off its action on a
    // feature holding its own indices.
    auto idx = P4Feature::zeros(width, width, 1);
    for (int i = 0; i < n; ++i) idx.values[i] = i;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, n);
    for (int r = 0; r < 4; ++r)
        for (int ty = 0; ty < width; ++ty)
            for (int tx = 0; tx < width; ++tx) {
                const auto moved = act_c4(idx, r, tx, ty);
                for (int i = 0; i < n; ++i) {
                    const int si = static_cast<int>(moved.values[i]);
                    for (int j = 0; j < n; ++j) sum(i, j) += A(si, static_cast<int>(moved.values[j]));
                }
            }
    return sum / (4.0 * width * width);
}

GroupKernel recover_group_kernel(const std::function<P4Feature(const P4Feature&)>& map, int width) {
    auto delta = P4Feature::zeros(width, width, 1);
    delta.at(0, 0, 0, 0) = 1.0;
    const auto response = map(delta);
    if (response.width != width || response.height != width || response.channels != 1)
        throw ShapeMismatch("recover_group_kernel: map changed the feature shape");
    auto k = GroupKernel::zeros(width, 0, 1, 1);
    for (int s = 0; s < 4; ++s)
        for (int uy = 0; uy < width; ++uy)
            for (int ux = 0; ux < width; ++ux) {
                const auto p = rotate_c4(-s, -ux, -uy);
                k.at(s, ux, uy, 0, 0) = response.at(wrap(-s, 4), wrap(p[0], width), wrap(p[1], width), 0);
            }
    return k;
}

ImageZ2 segmentation_pipeline(const ImageZ2& image, const KernelZ2& first, const KernelZ2& second, Padding padding) {
    return softmax_channels(z2_conv(second, relu(z2_conv(first, image, padding)), padding));
}

Eigen::Matrix2d so2_row_rotation(int quarter_turns) {
    const int r = wrap(quarter_turns, 4);
    const double c = r == 0 ? 1.0 : r == 2 ? -1.0 : 0.0;
    const double s = r == 1 ? 1.0 : r == 3 ? -1.0 : 0.0;
    Eigen::Matrix2d m;
    m << c, s, -s, c;
    return m;
}

DetectionField translate_detections(const DetectionField& f, int tx, int ty) {
    DetectionField out = f;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            auto rec = f.at(wrap(x - tx, f.width), wrap(y - ty, f.height));
            rec[0] += tx;
            rec[1] += ty;
            out.at(x, y) = std::move(rec);
        }
    return out;
}

DetectionField rotate_detections(const DetectionField& f, int quarter_turns) {
    require_square(f.width, f.height, "rotate_detections");
    if (!f.rotating) throw std::invalid_argument("rotate_detections: plain (x, y, w, h, c) records carry no orientation");
    const Eigen::Matrix2d M = so2_row_rotation(quarter_turns);
    const Eigen::Matrix2d Minv = M.transpose();
    const int n = f.width;
    DetectionField out = f;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const Eigen::Vector2d src = Minv * Eigen::Vector2d(x, y);
            auto rec = f.at(wrap(static_cast<int>(std::lround(src.x())), n), wrap(static_cast<int>(std::lround(src.y())), n));
            for (int v = 0; v < 3; ++v) {
                const Eigen::Vector2d w = M * Eigen::Vector2d(rec[2 * v], rec[2 * v + 1]);
                rec[2 * v] = w.x();
                rec[2 * v + 1] = w.y();
            }
            out.at(x, y) = std::move(rec);
        }
    return out;
}

DetectionField detection_head_transform(const DetectionField& f, int quarter_turns, int tx, int ty) {
    const DetectionField turned = wrap(quarter_turns, 4) == 0 ? f : rotate_detections(f, quarter_turns);
    return translate_detections(turned, tx, ty);
}

}  // namespace equivar
