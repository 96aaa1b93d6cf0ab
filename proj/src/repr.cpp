#include "equivar/repr.hpp"
#include "equivar/errors.hpp"
#include "equivar/grids.hpp"

#include <json.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace equivar {

int FeatureType::dimension() const {
    int d = 0;
    for (const auto& [l, c] : mult) d += (2 * l + 1) * c;
    return d;
}

int FeatureType::max_degree() const {
    int m = 0;
    for (const auto& [l, c] : mult)
        if (c > 0) m = std::max(m, l);
    return m;
}

std::vector<FeatureType::Block> FeatureType::blocks() const {
    std::vector<Block> out;
    int offset = 0;
    for (const auto& [l, c] : mult)
        for (int k = 0; k < c; ++k) {
            out.push_back({l, k, offset});
            offset += 2 * l + 1;
        }
    return out;
}

bool FeatureType::operator==(const FeatureType& o) const {
    auto strip = [](const std::map<int, int>& m) {
        std::map<int, int> r;
        for (const auto& [l, c] : m)
            if (c != 0) r[l] = c;
        return r;
    };
    return strip(mult) == strip(o.mult);
}

std::string FeatureType::to_json() const {
    nlohmann::json j;
    j["mult"] = nlohmann::json::object();
    for (const auto& [l, c] : mult) j["mult"][std::to_string(l)] = c;
    return j.dump();
}

FeatureType FeatureType::from_json(const std::string& text) {
    FeatureType t;
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("feature type: ") + e.what());
    }
    if (!j.contains("mult") || !j["mult"].is_object()) throw FormatError("feature type: missing \"mult\" object");
    for (const auto& [key, val] : j["mult"].items()) {
        std::size_t used = 0;
        int l = -1;
        try {
            l = std::stoi(key, &used);
        } catch (const std::exception&) {
        }
        if (l < 0 || used != key.size() || !val.is_number_integer() || val.get<int>() < 0)
            throw FormatError("feature type: bad entry \"" + key + "\"");
        t.mult[l] = val.get<int>();
    }
    return t;
}

CMatrix block_representation(const FeatureType& t, const EulerZYZ& g, bool real_basis) {
    const int d = t.dimension();
    CMatrix out = CMatrix::Zero(d, d);
    for (const auto& [l, c] : t.mult) {
        if (c == 0) continue;
        CMatrix D = wigner_D(l, g);
        if (real_basis) {
            const CMatrix Q = equivar::real_basis(l);
            D = Q * D * Q.adjoint();
        }
        for (const auto& b : t.blocks())
            if (b.degree == l) out.block(b.offset, b.offset, 2 * l + 1, 2 * l + 1) = D;
    }
    return out;
}

CMatrix feature_real_basis(const FeatureType& t) {
    const int d = t.dimension();
    CMatrix out = CMatrix::Zero(d, d);
    for (const auto& b : t.blocks()) out.block(b.offset, b.offset, 2 * b.degree + 1, 2 * b.degree + 1) = real_basis(b.degree);
    return out;
}

FeatureType extract_multiplicities(const std::function<CMatrix(const EulerZYZ&)>& rho, int max_degree) {
    const int L = max_degree + 1;
    const SO3Grid grid(L);
    std::vector<cd> proj(L, cd(0.0));
    for (int b = 0; b < grid.side(); ++b)
        for (int a = 0; a < grid.side(); ++a)
            for (int c = 0; c < grid.side(); ++c) {
                const EulerZYZ g = grid.node(a, b, c);
                const cd chi = rho(g).trace();
                for (int l = 0; l < L; ++l) proj[l] += grid.weight(b) * chi * std::conj(wigner_D(l, g).trace());
            }
    FeatureType t;
    for (int l = 0; l < L; ++l) {
        const cd v = proj[l] / (8 * kPi * kPi);
        const double r = std::round(v.real());
        if (std::abs(v - r) > 1e-6) {
            std::ostringstream os;
            os << "representation is not a direct sum of degrees <= " << max_degree << " (projection " << v << ")";
            throw std::invalid_argument(os.str());
        }
        if (r > 0) t.mult[l] = static_cast<int>(r);
    }
    return t;
}

std::vector<int> tensor_product_degrees(int l1, int l2) {
    std::vector<int> out;
    for (int J = std::abs(l1 - l2); J <= l1 + l2; ++J) out.push_back(J);
    return out;
}

Eigen::Matrix<double, 9, 9> vectorize_similarity(const Eigen::Matrix3d& R) {
    Eigen::Matrix<double, 9, 9> K;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) K.block<3, 3>(3 * i, 3 * j) = R(i, j) * R;
    return K;
}

RMatrix cg_change_of_basis(int l1, int l2) {
    const int d1 = 2 * l1 + 1, d2 = 2 * l2 + 1;
    RMatrix Q = RMatrix::Zero(d1 * d2, d1 * d2);
    int row = 0;
    for (int J = std::abs(l1 - l2); J <= l1 + l2; ++J)
        for (int M = -J; M <= J; ++M, ++row)
            for (int m1 = -l1; m1 <= l1; ++m1) {
                const int m2 = M - m1;
                if (std::abs(m2) > l2) continue;
                Q(row, (m1 + l1) * d2 + (m2 + l2)) = clebsch_gordan(l1, m1, l2, m2, J, M);
            }
    return Q;
}

FeatureType se3_output_feature_type(int num_classes) {
    if (num_classes < 1) throw std::invalid_argument("num_classes must be positive");
    FeatureType t;
    t.mult[0] = num_classes + 4;
    t.mult[1] = 2;
    t.mult[2] = 1;
    return t;
}

PointFeatures PointFeatures::zeros(int points, int dim) {
    PointFeatures f;
    f.points = points;
    f.dim = dim;
    f.values.assign(static_cast<std::size_t>(points) * dim, cd(0.0));
    return f;
}

PointFeatures intensity_scale(const IntensityField& psi, const PointFeatures& f) {
    if (static_cast<int>(psi.psi.size()) != f.points) throw ShapeMismatch("intensity field size differs from feature map");
    PointFeatures out = f;
    for (int p = 0; p < f.points; ++p)
        for (int i = 0; i < f.dim; ++i) out.at(p, i) *= psi.psi[p];
    return out;
}

PointFeatures pointwise_map(const CMatrix& T, const PointFeatures& f) {
    if (T.cols() != f.dim) throw ShapeMismatch("pointwise map input dimension differs from feature dimension");
    auto out = PointFeatures::zeros(f.points, static_cast<int>(T.rows()));
    for (int p = 0; p < f.points; ++p)
        for (int i = 0; i < T.rows(); ++i) {
            cd s = 0;
            for (int j = 0; j < f.dim; ++j) s += T(i, j) * f.at(p, j);
            out.at(p, i) = s;
        }
    return out;
}

PointFeatures cyclic_convolution(const std::vector<double>& kernel, const PointFeatures& f) {
    const int w = static_cast<int>(kernel.size());
    if (w % 2 == 0) throw ShapeMismatch("kernel width must be odd");
    const int r = w / 2, N = f.points;
    auto out = PointFeatures::zeros(N, f.dim);
    for (int x = 0; x < N; ++x)
        for (int u = -r; u <= r; ++u) {
            const int src = ((x - u) % N + N) % N;
            for (int i = 0; i < f.dim; ++i) out.at(x, i) += kernel[u + r] * f.at(src, i);
        }
    return out;
}

PointFeatures cyclic_shift(const PointFeatures& f, int s) {
    auto out = PointFeatures::zeros(f.points, f.dim);
    const int N = f.points;
    for (int x = 0; x < N; ++x) {
        const int src = ((x - s) % N + N) % N;
        for (int i = 0; i < f.dim; ++i) out.at(x, i) = f.at(src, i);
    }
    return out;
}

double intensity_commutation_residual(const std::function<PointFeatures(const PointFeatures&)>& map,
                                      const IntensityField& psi, const PointFeatures& f) {
    const auto a = map(intensity_scale(psi, f));
    const auto b = intensity_scale(psi, map(f));
    double r = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) r = std::max(r, std::abs(a.values[i] - b.values[i]));
    return r;
}

IntensityField bump_intensity(int points, int center, double eps) {
    IntensityField f;
    f.psi.assign(points, cd(1.0 - eps));
    f.psi.at(center) = 1.0;
    return f;
}

}  // namespace equivar
