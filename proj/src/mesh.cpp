#include "equivar/mesh.hpp"

#include "equivar/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace equivar {

namespace {

using Edge = std::pair<int, int>;

double face_area(const TriMesh& m, const std::array<int, 3>& f) {
    return 0.5 * (m.vertices[f[1]] - m.vertices[f[0]]).cross(m.vertices[f[2]] - m.vertices[f[0]]).norm();
}

// Ordered one-ring of every vertex, counter-clockwise; boundary fans start at
// the neighbour with no face before it.
struct Fans {
    std::vector<std::vector<int>> ring;
    std::vector<bool> boundary;
};

Fans build_fans(const TriMesh& m) {
    const int n = static_cast<int>(m.vertices.size());
    std::vector<std::map<int, int>> next(n);  // at vertex i: j -> k for face (i, j, k)
    for (const auto& f : m.faces)
        for (int c = 0; c < 3; ++c) {
            const int i = f[c], j = f[(c + 1) % 3], k = f[(c + 2) % 3];
            if (!next[i].emplace(j, k).second)
                throw NonManifold("vertex " + std::to_string(i) + ": directed edge to " + std::to_string(j) +
                                  " used twice");
        }
    Fans fans{std::vector<std::vector<int>>(n), std::vector<bool>(n, false)};
    for (int i = 0; i < n; ++i) {
        if (next[i].empty()) throw NonManifold("vertex " + std::to_string(i) + " belongs to no face");
        std::map<int, int> incoming;
        for (const auto& [j, k] : next[i]) ++incoming[k];
        std::vector<int> starts;
        for (const auto& [j, k] : next[i])
            if (!incoming.count(j)) starts.push_back(j);
        if (starts.size() > 1) throw NonManifold("vertex " + std::to_string(i) + " joins several fans");
        const bool open = !starts.empty();
        int j = open ? starts[0] : next[i].begin()->first;
        auto& ring = fans.ring[i];
        ring.push_back(j);
        for (std::size_t steps = 0; steps < next[i].size(); ++steps) {
            const auto it = next[i].find(j);
            if (it == next[i].end()) break;
            j = it->second;
            ring.push_back(j);
        }
        if (!open) ring.pop_back();  // closed cycle returns to the start
        const std::size_t want = next[i].size() + (open ? 1 : 0);
        const std::set<int> distinct(ring.begin(), ring.end());
        if (ring.size() != want || distinct.size() != ring.size() || (!open && j != ring.front()))
            throw NonManifold("vertex " + std::to_string(i) + " has a broken one-ring");
        fans.boundary[i] = open;
    }
    return fans;
}

double wrap_angle(double a) {
    a = std::fmod(a, 2 * kPi);
    if (a < 0) a += 2 * kPi;
    return a >= 2 * kPi ? 0.0 : a;
}

int ring_index(const TangentAtlas& atlas, int i, int j) {
    const auto& r = atlas.neighbors[i];
    const auto it = std::find(r.begin(), r.end(), j);
    if (it == r.end()) throw std::out_of_range(std::to_string(j) + " is not a neighbour of " + std::to_string(i));
    return static_cast<int>(it - r.begin());
}

}  // namespace

void TriMesh::validate() const {
    const int n = static_cast<int>(vertices.size());
    for (std::size_t f = 0; f < faces.size(); ++f) {
        const auto& t = faces[f];
        for (int v : t)
            if (v < 0 || v >= n) throw NonManifold("face " + std::to_string(f) + " has an out-of-range vertex");
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            throw NonManifold("face " + std::to_string(f) + " repeats a vertex");
        if (face_area(*this, t) <= 1e-12) throw NonManifold("face " + std::to_string(f) + " is degenerate");
    }
    build_fans(*this);
}

TriMesh read_off(std::istream& in) {
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(in, line)) {
        line = line.substr(0, line.find('#'));
        std::istringstream ls(line);
        for (std::string t; ls >> t;) tokens.push_back(t);
    }
    std::size_t pos = 0;
    auto next_num = [&](const char* what) {
        if (pos >= tokens.size()) throw FormatError(std::string("OFF: truncated while reading ") + what);
        try {
            std::size_t used = 0;
            const double v = std::stod(tokens[pos], &used);
            if (used != tokens[pos].size()) throw std::invalid_argument("trailing");
            ++pos;
            return v;
        } catch (const std::logic_error&) {
            throw FormatError("OFF: expected a number for " + std::string(what) + ", got '" + tokens[pos] + "'");
        }
    };
    if (tokens.empty() || tokens[0] != "OFF") throw FormatError("OFF: missing header");
    pos = 1;
    const double nv = next_num("vertex count"), nf = next_num("face count");
    next_num("edge count");
    if (nv < 0 || nf < 0 || nv != std::floor(nv) || nf != std::floor(nf)) throw FormatError("OFF: bad counts");
    TriMesh m;
    for (int v = 0; v < nv; ++v) {
        Eigen::Vector3d p;
        for (int c = 0; c < 3; ++c) p(c) = next_num("vertex");
        m.vertices.push_back(p);
    }
    for (int f = 0; f < nf; ++f) {
        if (next_num("face size") != 3) throw FormatError("OFF: only triangular faces are supported");
        std::array<int, 3> t;
        for (auto& v : t) {
            const double idx = next_num("face index");
            if (idx != std::floor(idx) || idx < 0 || idx >= nv) throw FormatError("OFF: face index out of range");
            v = static_cast<int>(idx);
        }
        m.faces.push_back(t);
    }
    if (pos != tokens.size()) throw FormatError("OFF: trailing data");
    return m;
}

TriMesh read_obj(std::istream& in) {
    TriMesh m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line.substr(0, line.find('#')));
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            Eigen::Vector3d p;
            if (!(ls >> p.x() >> p.y() >> p.z())) throw FormatError("OBJ line " + std::to_string(lineno) + ": bad vertex");
            m.vertices.push_back(p);
        } else if (tag == "f") {
            std::vector<int> idx;
            for (std::string t; ls >> t;) {
                try {
                    int v = std::stoi(t.substr(0, t.find('/')));
                    v = v < 0 ? static_cast<int>(m.vertices.size()) + v : v - 1;
                    idx.push_back(v);
                } catch (const std::logic_error&) {
                    throw FormatError("OBJ line " + std::to_string(lineno) + ": bad face index '" + t + "'");
                }
            }
            if (idx.size() != 3) throw FormatError("OBJ line " + std::to_string(lineno) + ": only triangles");
            for (int v : idx)
                if (v < 0 || v >= static_cast<int>(m.vertices.size()))
                    throw FormatError("OBJ line " + std::to_string(lineno) + ": face index out of range");
            m.faces.push_back({idx[0], idx[1], idx[2]});
        }
    }
    if (m.faces.empty()) throw FormatError("OBJ: no faces");
    return m;
}

TriMesh read_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open mesh file " + path);
    const auto dot = path.rfind('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == "off") return read_off(in);
    if (ext == "obj") return read_obj(in);
    throw FormatError("unknown mesh extension '" + ext + "' (expected .off or .obj)");
}

void write_off(const TriMesh& mesh, std::ostream& out) {
    out.precision(17);
    out << "OFF\n" << mesh.vertices.size() << ' ' << mesh.faces.size() << " 0\n";
    for (const auto& p : mesh.vertices) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    for (const auto& f : mesh.faces) out << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
}

TriMesh convex_hull(const std::vector<Eigen::Vector3d>& pts) {
    const int n = static_cast<int>(pts.size());
    if (n < 4) throw std::invalid_argument("convex_hull: need at least 4 points");
    // Initial tetrahedron from extreme points.
    int a = 0, b = 0, c = 0, d = 0;
    for (int i = 1; i < n; ++i)
        if ((pts[i] - pts[a]).norm() > (pts[b] - pts[a]).norm()) b = i;
    double best = -1.0;
    for (int i = 0; i < n; ++i) {
        const double s = (pts[i] - pts[a]).cross(pts[b] - pts[a]).norm();
        if (s > best) best = s, c = i;
    }
    const Eigen::Vector3d nabc = (pts[b] - pts[a]).cross(pts[c] - pts[a]);
    best = -1.0;
    for (int i = 0; i < n; ++i) {
        const double s = std::abs(nabc.dot(pts[i] - pts[a]));
        if (s > best) best = s, d = i;
    }
    if (best < 1e-12) throw std::invalid_argument("convex_hull: points are coplanar");
    const double scale = (pts[b] - pts[a]).norm();
    const double eps = 1e-12 * scale * scale * scale;

    std::vector<std::array<int, 3>> faces;
    auto outward = [&](int p, int q, int r, int inside) {
        const Eigen::Vector3d nrm = (pts[q] - pts[p]).cross(pts[r] - pts[p]);
        return nrm.dot(pts[inside] - pts[p]) < 0 ? std::array<int, 3>{p, q, r} : std::array<int, 3>{p, r, q};
    };
    faces = {outward(a, b, c, d), outward(a, b, d, c), outward(a, c, d, b), outward(b, c, d, a)};
    auto visible = [&](const std::array<int, 3>& f, int p) {
        const Eigen::Vector3d nrm = (pts[f[1]] - pts[f[0]]).cross(pts[f[2]] - pts[f[0]]);
        return nrm.dot(pts[p] - pts[f[0]]) > eps;
    };
    for (int p = 0; p < n; ++p) {
        if (p == a || p == b || p == c || p == d) continue;
        std::vector<std::array<int, 3>> keep;
        std::map<Edge, int> seen;
        for (const auto& f : faces) {
            if (visible(f, p)) {
                for (int e = 0; e < 3; ++e) seen[{f[e], f[(e + 1) % 3]}] = 1;
            } else {
                keep.push_back(f);
            }
        }
        if (seen.empty()) continue;  // inside the current hull
        for (const auto& [e, unused] : seen)
            if (!seen.count({e.second, e.first})) keep.push_back({e.first, e.second, p});
        faces = std::move(keep);
    }
    // Compact to the hull's own vertices, in input order.
    std::vector<int> remap(n, -1);
    for (const auto& f : faces)
        for (int v : f) remap[v] = 0;
    TriMesh m;
    for (int i = 0; i < n; ++i)
        if (remap[i] == 0) {
            remap[i] = static_cast<int>(m.vertices.size());
            m.vertices.push_back(pts[i]);
        }
    for (const auto& f : faces) m.faces.push_back({remap[f[0]], remap[f[1]], remap[f[2]]});
    return m;
}

TriMesh icosahedron() {
    const double g = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Eigen::Vector3d> p;
    for (double s : {-1.0, 1.0})
        for (double t : {-1.0, 1.0}) {
            p.emplace_back(0.0, s, t * g);
            p.emplace_back(s, t * g, 0.0);
            p.emplace_back(t * g, 0.0, s);
        }
    for (auto& v : p) v.normalize();
    return convex_hull(p);
}

TriMesh random_sphere_mesh(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Eigen::Vector3d> p;
    for (int i = 0; i < n; ++i) {
        Eigen::Vector3d v(g(rng), g(rng), g(rng));
        p.push_back(v.normalized());
    }
    return convex_hull(p);
}

TriMesh flat_grid(int nx, int ny, double spacing) {
    if (nx < 2 || ny < 2) throw std::invalid_argument("flat_grid: need at least 2x2 vertices");
    TriMesh m;
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) m.vertices.emplace_back(x * spacing, y * spacing, 0.0);
    for (int y = 0; y + 1 < ny; ++y)
        for (int x = 0; x + 1 < nx; ++x) {
            const int v00 = y * nx + x, v10 = v00 + 1, v01 = v00 + nx, v11 = v01 + 1;
            m.faces.push_back({v00, v10, v11});
            m.faces.push_back({v00, v11, v01});
        }
    return m;
}

TriMesh flat_fan(int count) {
    if (count < 3) throw std::invalid_argument("flat_fan: need at least 3 neighbours");
    TriMesh m;
    m.vertices.emplace_back(0.0, 0.0, 0.0);
    for (int k = 0; k < count; ++k)
        m.vertices.emplace_back(std::cos(2 * kPi * k / count), std::sin(2 * kPi * k / count), 0.0);
    for (int k = 0; k < count; ++k) m.faces.push_back({0, k + 1, (k + 1) % count + 1});
    return m;
}

TangentAtlas build_atlas(const TriMesh& mesh, const std::vector<double>& gauge) {
    mesh.validate();
    const int n = static_cast<int>(mesh.vertices.size());
    if (!gauge.empty() && static_cast<int>(gauge.size()) != n)
        throw ShapeMismatch("build_atlas: gauge has " + std::to_string(gauge.size()) + " angles for " +
                            std::to_string(n) + " vertices");
    const Fans fans = build_fans(mesh);
    TangentAtlas at;
    at.e1.resize(n);
    at.e2.resize(n);
    at.normal.assign(n, Eigen::Vector3d::Zero());
    at.weight.assign(n, 0.0);
    at.neighbors = fans.ring;
    at.boundary = fans.boundary;
    for (const auto& f : mesh.faces) {
        const Eigen::Vector3d cr =
            (mesh.vertices[f[1]] - mesh.vertices[f[0]]).cross(mesh.vertices[f[2]] - mesh.vertices[f[0]]);
        for (int v : f) {
            at.normal[v] += cr;
            at.weight[v] += cr.norm() / 6.0;
        }
    }
    for (int i = 0; i < n; ++i) {
        at.normal[i].normalize();
        const Eigen::Vector3d& nrm = at.normal[i];
        Eigen::Vector3d e = Eigen::Vector3d::UnitX() - nrm.x() * nrm;
        if (e.norm() < 1e-6) e = Eigen::Vector3d::UnitY() - nrm.y() * nrm;
        e.normalize();
        Eigen::Vector3d f = nrm.cross(e);
        if (!gauge.empty()) {
            // Rotating the frame by -phi makes every measured angle grow by phi.
            const double c = std::cos(gauge[i]), s = std::sin(gauge[i]);
            const Eigen::Vector3d e_new = c * e - s * f, f_new = s * e + c * f;
            e = e_new;
            f = f_new;
        }
        at.e1[i] = e;
        at.e2[i] = f;
    }
    at.radius.resize(n);
    at.angle.resize(n);
    for (int i = 0; i < n; ++i) {
        const auto& ring = at.neighbors[i];
        const int k = static_cast<int>(ring.size());
        const Eigen::Vector3d& xi = mesh.vertices[i];
        std::vector<double> interior;
        const int wedges = at.boundary[i] ? k - 1 : k;
        double total = 0.0;
        for (int t = 0; t < wedges; ++t) {
            const Eigen::Vector3d a = mesh.vertices[ring[t]] - xi, b = mesh.vertices[ring[(t + 1) % k]] - xi;
            interior.push_back(std::atan2(a.cross(b).norm(), a.dot(b)));
            total += interior.back();
        }
        const double scale = at.boundary[i] ? 1.0 : 2 * kPi / total;
        const Eigen::Vector3d d0 = mesh.vertices[ring[0]] - xi;
        const double psi0 = std::atan2(at.e2[i].dot(d0), at.e1[i].dot(d0));
        double cum = 0.0;
        for (int t = 0; t < k; ++t) {
            at.radius[i].push_back((mesh.vertices[ring[t]] - xi).norm());
            at.angle[i].push_back(wrap_angle(psi0 + scale * cum));
            if (t < wedges) cum += interior[t];
        }
    }
    at.transport.resize(n);
    for (int i = 0; i < n; ++i)
        for (std::size_t t = 0; t < at.neighbors[i].size(); ++t) {
            const int j = at.neighbors[i][t];
            const double theta_ji = at.angle[j][ring_index(at, j, i)];
            at.transport[i].push_back(wrap_angle(at.angle[i][t] - theta_ji + kPi));
        }
    return at;
}

std::vector<PolarNeighbor> log_map(const TangentAtlas& atlas, int i) {
    if (i < 0 || i >= atlas.size()) throw std::out_of_range("log_map: vertex out of range");
    std::vector<PolarNeighbor> out;
    for (std::size_t t = 0; t < atlas.neighbors[i].size(); ++t)
        out.push_back({atlas.neighbors[i][t], atlas.radius[i][t], atlas.angle[i][t]});
    return out;
}

double transport_angle(const TangentAtlas& atlas, int i, int j) {
    if (i < 0 || i >= atlas.size()) throw std::out_of_range("transport_angle: vertex out of range");
    return atlas.transport[i][ring_index(atlas, i, j)];
}

MeshFeature MeshFeature::zeros(int vertices, std::vector<int> orders) {
    if (vertices < 0) throw ShapeMismatch("MeshFeature: negative vertex count");
    const std::size_t size = static_cast<std::size_t>(vertices) * orders.size();
    return MeshFeature{vertices, std::move(orders), std::vector<cd>(size)};
}

std::string MeshFeature::to_json() const {
    nlohmann::json j;
    j["vertices"] = vertices;
    j["channels"] = nlohmann::json::array();
    for (int c = 0; c < channels(); ++c) {
        nlohmann::json vals = nlohmann::json::array();
        for (int v = 0; v < vertices; ++v) vals.push_back({at(v, c).real(), at(v, c).imag()});
        j["channels"].push_back({{"order", orders[c]}, {"values", vals}});
    }
    return j.dump();
}

MeshFeature MeshFeature::from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        const int n = j.at("vertices").get<int>();
        std::vector<int> orders;
        for (const auto& ch : j.at("channels")) orders.push_back(ch.at("order").get<int>());
        auto f = zeros(n, orders);
        int c = 0;
        for (const auto& ch : j.at("channels")) {
            const auto& vals = ch.at("values");
            if (static_cast<int>(vals.size()) != n) throw FormatError("mesh feature: channel length mismatch");
            for (int v = 0; v < n; ++v) f.at(v, c) = cd(vals[v].at(0).get<double>(), vals[v].at(1).get<double>());
            ++c;
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("mesh feature: ") + e.what());
    }
}

MeshFeature apply_gauge(const MeshFeature& f, const std::vector<double>& gauge) {
    if (static_cast<int>(gauge.size()) != f.vertices) throw ShapeMismatch("apply_gauge: one angle per vertex");
    MeshFeature out = f;
    for (int v = 0; v < f.vertices; ++v)
        for (int c = 0; c < f.channels(); ++c) out.at(v, c) *= std::polar(1.0, f.orders[c] * gauge[v]);
    return out;
}

MeshFeature harmonic_conv(const TangentAtlas& atlas, const MeshFeature& f, const CircularHarmonic& kernel) {
    if (f.vertices != atlas.size())
        throw ShapeMismatch("harmonic_conv: feature has " + std::to_string(f.vertices) + " vertices, atlas has " +
                            std::to_string(atlas.size()));
    std::vector<int> orders;
    for (int m : f.orders) orders.push_back(m + kernel.m);
    auto out = MeshFeature::zeros(f.vertices, orders);
#pragma omp parallel for
    for (int i = 0; i < f.vertices; ++i)
        for (std::size_t t = 0; t < atlas.neighbors[i].size(); ++t) {
            const int j = atlas.neighbors[i][t];
            const cd k = atlas.weight[j] * kernel(atlas.radius[i][t], atlas.angle[i][t]);
            for (int c = 0; c < f.channels(); ++c)
                out.at(i, c) += k * std::polar(1.0, f.orders[c] * atlas.transport[i][t]) * f.at(j, c);
        }
    return out;
}

GemKernel circular_harmonic_gem_kernel(const std::vector<int>& out_orders, const std::vector<int>& in_orders,
                                       const CMatrix& neighbor_coeffs, const std::function<double(double)>& radial,
                                       const CMatrix& self_coeffs) {
    const auto rows = static_cast<Eigen::Index>(out_orders.size()), cols = static_cast<Eigen::Index>(in_orders.size());
    if (neighbor_coeffs.rows() != rows || neighbor_coeffs.cols() != cols || self_coeffs.rows() != rows ||
        self_coeffs.cols() != cols)
        throw ShapeMismatch("circular_harmonic_gem_kernel: coefficient shape must be out x in");
    CMatrix self = self_coeffs;
    for (Eigen::Index a = 0; a < rows; ++a)
        for (Eigen::Index b = 0; b < cols; ++b)
            if (out_orders[a] != in_orders[b]) self(a, b) = 0.0;
    auto nb = [out_orders, in_orders, neighbor_coeffs, radial](double r, double theta) {
        CMatrix k(out_orders.size(), in_orders.size());
        const double R = radial(r);
        for (std::size_t a = 0; a < out_orders.size(); ++a)
            for (std::size_t b = 0; b < in_orders.size(); ++b)
                k(a, b) = neighbor_coeffs(a, b) * R * std::polar(1.0, (out_orders[a] - in_orders[b]) * theta);
        return k;
    };
    return GemKernel{out_orders, in_orders, self, nb};
}

void validate_gem_kernel(const GemKernel& kernel, double tol) {
    const auto rows = static_cast<Eigen::Index>(kernel.out_orders.size());
    const auto cols = static_cast<Eigen::Index>(kernel.in_orders.size());
    if (kernel.self.rows() != rows || kernel.self.cols() != cols)
        throw ShapeMismatch("gem kernel: self-interaction must be out x in");
    const double self_scale = std::max(1.0, kernel.self.cwiseAbs().maxCoeff());
    for (Eigen::Index a = 0; a < rows; ++a)
        for (Eigen::Index b = 0; b < cols; ++b)
            if (kernel.out_orders[a] != kernel.in_orders[b] && std::abs(kernel.self(a, b)) > tol * self_scale)
                throw KernelConstraintViolated("gem kernel: self-interaction couples orders " +
                                               std::to_string(kernel.in_orders[b]) + " -> " +
                                               std::to_string(kernel.out_orders[a]));
    if (!kernel.neighbor) return;
    for (double r : {0.3, 1.0, 1.7})
        for (int t = 0; t < 7; ++t)
            for (int p = 0; p < 5; ++p) {
                const double theta = 0.37 + 0.9 * t, phi = 0.61 + 1.3 * p;
                const CMatrix k = kernel.neighbor(r, theta);
                if (k.rows() != rows || k.cols() != cols) throw ShapeMismatch("gem kernel: neighbour must be out x in");
                const CMatrix shifted = kernel.neighbor(r, theta - phi);
                double worst = 0.0;
                for (Eigen::Index a = 0; a < rows; ++a)
                    for (Eigen::Index b = 0; b < cols; ++b) {
                        const cd want = std::polar(1.0, (kernel.in_orders[b] - kernel.out_orders[a]) * phi) * k(a, b);
                        worst = std::max(worst, std::abs(shifted(a, b) - want));
                    }
                const double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
                if (worst > tol * scale)
                    throw KernelConstraintViolated("gem kernel: neighbour violates the gauge condition by " +
                                                   std::to_string(worst) + " at r=" + std::to_string(r) +
                                                   " theta=" + std::to_string(theta));
            }
}

MeshFeature gem_conv(const TangentAtlas& atlas, const MeshFeature& f, const GemKernel& kernel) {
    if (f.vertices != atlas.size()) throw ShapeMismatch("gem_conv: feature and atlas vertex counts differ");
    if (f.orders != kernel.in_orders) throw ShapeMismatch("gem_conv: feature orders differ from the kernel's input");
    validate_gem_kernel(kernel);
    auto out = MeshFeature::zeros(f.vertices, kernel.out_orders);
    const int nin = f.channels(), nout = out.channels();
#pragma omp parallel for
    for (int i = 0; i < f.vertices; ++i) {
        Eigen::VectorXcd acc = Eigen::VectorXcd::Zero(nout), fi(nin);
        for (int b = 0; b < nin; ++b) fi(b) = f.at(i, b);
        acc += kernel.self * fi;
        if (kernel.neighbor)
            for (std::size_t t = 0; t < atlas.neighbors[i].size(); ++t) {
                const int j = atlas.neighbors[i][t];
                Eigen::VectorXcd moved(nin);
                for (int b = 0; b < nin; ++b)
                    moved(b) = std::polar(1.0, f.orders[b] * atlas.transport[i][t]) * f.at(j, b);
                acc += kernel.neighbor(atlas.radius[i][t], atlas.angle[i][t]) * moved;
            }
        for (int a = 0; a < nout; ++a) out.at(i, a) = acc(a);
    }
    return out;
}

namespace {

double gauge_defect(const MeshFeature& base, const MeshFeature& gauged, const std::vector<double>& gauge) {
    const auto want = apply_gauge(base, gauge);
    double worst = 0.0, scale = 1.0;
    for (std::size_t i = 0; i < want.values.size(); ++i) {
        worst = std::max(worst, std::abs(gauged.values[i] - want.values[i]));
        scale = std::max(scale, std::abs(want.values[i]));
    }
    return worst / scale;
}

}  // namespace

double harmonic_gauge_residual(const TriMesh& mesh, const MeshFeature& f, const CircularHarmonic& kernel,
                               const std::vector<double>& gauge) {
    const auto base = harmonic_conv(build_atlas(mesh), f, kernel);
    const auto gauged = harmonic_conv(build_atlas(mesh, gauge), apply_gauge(f, gauge), kernel);
    return gauge_defect(base, gauged, gauge);
}

double gem_gauge_residual(const TriMesh& mesh, const MeshFeature& f, const GemKernel& kernel,
                          const std::vector<double>& gauge) {
    const auto base = gem_conv(build_atlas(mesh), f, kernel);
    const auto gauged = gem_conv(build_atlas(mesh, gauge), apply_gauge(f, gauge), kernel);
    return gauge_defect(base, gauged, gauge);
}

}  // namespace equivar
