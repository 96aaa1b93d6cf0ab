#pragma once

#include "equivar/harmonics.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace equivar {

// Multiplicities of irreducible degrees. Basis order: ascending degree, then
// copy index, then order -l..l.
struct FeatureType {
    std::map<int, int> mult;

    struct Block {
        int degree;
        int copy;
        int offset;
    };

    int dimension() const;
    int max_degree() const;
    std::vector<Block> blocks() const;
    bool operator==(const FeatureType& o) const;

    std::string to_json() const;
    static FeatureType from_json(const std::string& text);
};

// Block-diagonal direct sum of wigner_D blocks in basis order. With
// real_basis each block is conjugated into the real basis and is orthogonal.
CMatrix block_representation(const FeatureType& t, const EulerZYZ& g, bool real_basis = false);

// Block-diagonal unitary taking complex-basis components to real-basis ones.
CMatrix feature_real_basis(const FeatureType& t);

// Recovers multiplicities from a representation by character projection on
// an exact SO(3) quadrature.
FeatureType extract_multiplicities(const std::function<CMatrix(const EulerZYZ&)>& rho, int max_degree);

std::vector<int> tensor_product_degrees(int l1, int l2);

// R kron R: maps the row-concatenation of Q to that of R Q R^T.
Eigen::Matrix<double, 9, 9> vectorize_similarity(const Eigen::Matrix3d& R);

// Rows indexed by (J, M) for J = |l1-l2|..l1+l2 ascending, columns by
// (m1, m2) row-major; Q kron(D^l1, D^l2) Q^T is block diagonal.
RMatrix cg_change_of_basis(int l1, int l2);

// Output typing for oriented box detection: class scores, box anchor and the
// traceless/trace split of a symmetric tensor.
FeatureType se3_output_feature_type(int num_classes);

// Vector features on a finite set of points, layout (point, component).
struct PointFeatures {
    int points = 0;
    int dim = 0;
    std::vector<cd> values;

    static PointFeatures zeros(int points, int dim);
    cd& at(int p, int i) { return values[static_cast<std::size_t>(p) * dim + i]; }
    cd at(int p, int i) const { return values[static_cast<std::size_t>(p) * dim + i]; }
};

// Per-point complex scale.
struct IntensityField {
    std::vector<cd> psi;
};

PointFeatures intensity_scale(const IntensityField& psi, const PointFeatures& f);
PointFeatures pointwise_map(const CMatrix& T, const PointFeatures& f);

// Convolution on the cyclic group Z_N: out(x) = sum_u k(u) f(x - u) with
// offsets u = -(w-1)/2..(w-1)/2 for an odd-width kernel.
PointFeatures cyclic_convolution(const std::vector<double>& kernel, const PointFeatures& f);

// Cyclic relabelling of points, (shift f)(x) = f(x - s).
PointFeatures cyclic_shift(const PointFeatures& f, int s);

// Max over points of |map(S(psi) f) - S(psi) map(f)|.
double intensity_commutation_residual(const std::function<PointFeatures(const PointFeatures&)>& map,
                                      const IntensityField& psi, const PointFeatures& f);

// Narrow bump: psi = 1 at `center` and 1 - eps everywhere else.
IntensityField bump_intensity(int points, int center, double eps);

}  // namespace equivar
