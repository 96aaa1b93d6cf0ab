#pragma once

#include "equivar/harmonics.hpp"
#include "equivar/steerable.hpp"

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace equivar {

// Counter-clockwise faces seen from outside.
struct TriMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;

    // Throws NonManifold for out-of-range indices, repeated or inconsistently
    // oriented directed edges, edges with more than two faces, vertices whose
    // faces do not form a single fan, and faces of area <= 1e-12.
    void validate() const;
};

// OFF or OBJ chosen by extension; vertices and triangular faces only.
// Malformed files throw FormatError.
TriMesh read_mesh(const std::string& path);
TriMesh read_off(std::istream& in);
TriMesh read_obj(std::istream& in);
void write_off(const TriMesh& mesh, std::ostream& out);

// Outward-oriented convex hull of points in general position.
TriMesh convex_hull(const std::vector<Eigen::Vector3d>& points);
TriMesh icosahedron();
// Hull of n uniform random points on the unit sphere.
TriMesh random_sphere_mesh(int n, unsigned seed);
// nx x ny vertex grid in the z = 0 plane, two triangles per cell.
TriMesh flat_grid(int nx, int ny, double spacing);
// Centre vertex 0 with `count` neighbours evenly spaced on a unit circle.
TriMesh flat_fan(int count);

// Gauge: per-vertex tangent frames and the discrete polar coordinates and
// transport angles they induce. Neighbours are listed counter-clockwise
// around the normal; the vertex itself is not a neighbour.
struct TangentAtlas {
    std::vector<Eigen::Vector3d> e1, e2, normal;
    std::vector<std::vector<int>> neighbors;
    std::vector<std::vector<double>> radius;     // r_ij
    std::vector<std::vector<double>> angle;      // theta_ij in [0, 2 pi)
    std::vector<std::vector<double>> transport;  // phi_ji, the j -> i transport angle
    std::vector<double> weight;                  // w_j, a third of the incident area
    std::vector<bool> boundary;

    int size() const { return static_cast<int>(e1.size()); }
};

// Frames: normal = area-weighted face normal; e1 = tangent projection of
// (1, 0, 0), or of (0, 1, 0) when that projection is shorter than 1e-6;
// e2 = normal x e1. A non-empty gauge rotates frame i so that every angle
// measured at i grows by gauge[i].
// theta_ij: angle of the first one-ring edge in the frame, then the
// cumulative interior angles, rescaled to total 2 pi at interior vertices.
// phi_ji = theta_ij - theta_ji + pi, zero on a flat mesh with aligned frames.
TangentAtlas build_atlas(const TriMesh& mesh, const std::vector<double>& gauge = {});

struct PolarNeighbor {
    int j;
    double r;
    double theta;
};
std::vector<PolarNeighbor> log_map(const TangentAtlas& atlas, int i);

// phi_ji for the directed edge j -> i; throws std::out_of_range if j is not a
// neighbour of i.
double transport_angle(const TangentAtlas& atlas, int i, int j);

// Complex features, one channel per rotation order; layout (vertex, channel).
struct MeshFeature {
    int vertices = 0;
    std::vector<int> orders;
    std::vector<cd> values;

    static MeshFeature zeros(int vertices, std::vector<int> orders);
    int channels() const { return static_cast<int>(orders.size()); }
    cd& at(int v, int c) { return values[static_cast<std::size_t>(v) * orders.size() + c]; }
    cd at(int v, int c) const { return values[static_cast<std::size_t>(v) * orders.size() + c]; }

    std::string to_json() const;
    static MeshFeature from_json(const std::string& text);
};

// Feature expressed in the rotated gauge: channel of order m at vertex v is
// multiplied by e^{i m gauge[v]}.
MeshFeature apply_gauge(const MeshFeature& f, const std::vector<double>& gauge);

// out_{i} = sum_j w_j k(r_ij, theta_ij) e^{i m' phi_ji} f_j per channel; the
// channel order goes from m' to m + m'.
MeshFeature harmonic_conv(const TangentAtlas& atlas, const MeshFeature& f, const CircularHarmonic& kernel);

// Kernel between features of SO(2) irreps e^{i n phi}. neighbor(r, theta) is
// out x in and must satisfy k(theta - phi) = rho_out(-phi) k(theta) rho_in(phi);
// self must commute with the representations.
struct GemKernel {
    std::vector<int> out_orders;
    std::vector<int> in_orders;
    CMatrix self;
    std::function<CMatrix(double r, double theta)> neighbor;
};

// neighbor_ab = c_ab R(r) e^{i (n_a - n_b) theta}; self entries kept only
// where n_a = n_b.
GemKernel circular_harmonic_gem_kernel(const std::vector<int>& out_orders, const std::vector<int>& in_orders,
                                       const CMatrix& neighbor_coeffs, const std::function<double(double)>& radial,
                                       const CMatrix& self_coeffs);

// Samples the constraint and throws KernelConstraintViolated beyond tol
// (relative to the kernel's magnitude).
void validate_gem_kernel(const GemKernel& kernel, double tol = 1e-8);

// out_x = self f_x + sum_y neighbor(r_xy, theta_xy) rho(phi_yx) f_y.
MeshFeature gem_conv(const TangentAtlas& atlas, const MeshFeature& f, const GemKernel& kernel);

// Gauge audits: max over vertices and channels of
// |conv(gauge atlas, gauge f) - e^{i n gauge_i} conv(atlas, f)|, where the
// gauge atlas is rebuilt from rotated frames.
double harmonic_gauge_residual(const TriMesh& mesh, const MeshFeature& f, const CircularHarmonic& kernel,
                               const std::vector<double>& gauge);
double gem_gauge_residual(const TriMesh& mesh, const MeshFeature& f, const GemKernel& kernel,
                          const std::vector<double>& gauge);

}  // namespace equivar
