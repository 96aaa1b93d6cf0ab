// equivar: transforms, spectral convolutions from a TOML run-config,
// steerable basis export, mesh gauge demo and the equivariance audit.
// Exit codes: 0 success / all checks pass, 1 check failures, 2 usage or I/O errors.

#include "equivar/audit.hpp"
#include "equivar/errors.hpp"
#include "equivar/io.hpp"
#include "equivar/mesh.hpp"
#include "equivar/spectral_conv.hpp"
#include "equivar/steerable.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <toml.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

using namespace equivar;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

// Raised for bad arguments that CLI11 cannot validate on its own.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void emit(const std::string& text, const std::string& path) {
    if (path.empty() || path == "-")
        std::cout << text;
    else
        write_file(path, text);
}

// ---------------------------------------------------------------------------
// transform

struct TransformArgs {
    std::string domain = "s2";
    std::string direction;
    int bandlimit = 0;
    std::string input, output;
    bool reference = false;
};

int cmd_transform(const TransformArgs& a) {
    if (a.bandlimit < 1 || a.bandlimit > 128) throw UsageError("bandlimit must be between 1 and 128");
    if (a.domain == "s2") {
        const S2Grid grid(a.bandlimit);
        if (a.direction == "analysis") {
            std::ifstream in(a.input);
            if (!in) throw std::runtime_error("cannot open " + a.input);
            const auto s = read_s2_samples_csv(in, a.bandlimit);
            emit(s2_coeffs_to_json(a.reference ? reference::s2_analysis(grid, s) : s2_analysis(grid, s)), a.output);
        } else {
            const auto f = s2_coeffs_from_json(read_file(a.input));
            if (f.bandlimit != a.bandlimit) throw UsageError("coefficient bandlimit differs from --bandlimit");
            std::ostringstream out;
            write_s2_samples_csv(a.reference ? reference::s2_synthesis(f, grid) : s2_synthesis(f, grid), out);
            emit(out.str(), a.output);
        }
    } else {
        const SO3Grid grid(a.bandlimit);
        if (a.direction == "analysis") {
            std::ifstream in(a.input);
            if (!in) throw std::runtime_error("cannot open " + a.input);
            const auto s = read_so3_samples_csv(in, a.bandlimit);
            emit(so3_coeffs_to_json(a.reference ? reference::so3_analysis(grid, s) : so3_analysis(grid, s)), a.output);
        } else {
            const auto f = so3_coeffs_from_json(read_file(a.input));
            if (f.bandlimit != a.bandlimit) throw UsageError("coefficient bandlimit differs from --bandlimit");
            std::ostringstream out;
            write_so3_samples_csv(a.reference ? reference::so3_synthesis(f, grid) : so3_synthesis(f, grid), out);
            emit(out.str(), a.output);
        }
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// conv

FeatureType feature_type_from(const toml::table& t, const std::string& where) {
    const auto* mult = t["multiplicities"].as_table();
    if (!mult) throw UsageError(where + ".multiplicities must be a table like {0 = 2, 1 = 1}");
    FeatureType ft;
    for (const auto& [key, value] : *mult) {
        const auto n = value.value<int64_t>();
        int degree;
        try {
            degree = std::stoi(std::string(key.str()));
        } catch (const std::exception&) {
            throw UsageError(where + ".multiplicities keys must be degrees");
        }
        if (!n || *n < 0 || degree < 0) throw UsageError(where + ".multiplicities entries must be non-negative integers");
        if (*n > 0) ft.mult[degree] = static_cast<int>(*n);
    }
    return ft;
}

Representation representation_from(const toml::table& root, const char* key) {
    const auto* t = root[key].as_table();
    if (!t) throw UsageError(std::string("missing [") + key + "] table");
    const std::string kind = (*t)["kind"].value_or<std::string>("");
    if (kind == "trivial") return Representation::trivial(static_cast<int>((*t)["dim"].value_or<int64_t>(1)));
    if (kind == "fundamental") return Representation::fundamental();
    if (kind == "irreps") return Representation::irreps(feature_type_from(*t, key), (*t)["real_basis"].value_or(true));
    throw UsageError(std::string(key) + ".kind must be trivial, fundamental or irreps");
}

FeatureType irrep_type_from(const toml::table& root, const char* key) {
    const auto* t = root[key].as_table();
    if (!t) throw UsageError(std::string("missing [") + key + "] table");
    return feature_type_from(*t, key);
}

std::vector<EulerZYZ> all_nodes(const SO3Grid& g) {
    std::vector<EulerZYZ> out;
    for (int b = 0; b < g.side(); ++b)
        for (int a = 0; a < g.side(); ++a)
            for (int c = 0; c < g.side(); ++c) out.push_back(g.node(a, b, c));
    return out;
}

std::vector<EulerZYZ> random_nodes(int n, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    std::vector<EulerZYZ> out;
    for (int i = 0; i < n; ++i) {
        Eigen::Quaterniond q(d(rng), d(rng), d(rng), d(rng));
        q.normalize();
        out.push_back(rotation_from_matrix(q.toRotationMatrix()));
    }
    return out;
}

// Relative max difference between the spectral output at the given rotations
// and the quadrature oracle there.
double oracle_gap(const SpectralSO3Signal& out, const std::vector<EulerZYZ>& rots, const std::vector<cd>& oracle) {
    double err = 0.0, scale = 1.0;
    for (const cd& v : oracle) scale = std::max(scale, std::abs(v));
    for (std::size_t r = 0; r < rots.size(); ++r) {
        const auto v = so3_evaluate(out, rots[r]);
        for (int o = 0; o < out.channels; ++o) err = std::max(err, std::abs(v[o] - oracle[r * out.channels + o]));
    }
    return err / scale;
}

SpectralSO3Signal padded(const SpectralSO3Signal& f, int L) {
    auto out = SpectralSO3Signal::zeros(L, f.channels);
    for (int c = 0; c < f.channels; ++c)
        for (int l = 0; l < std::min(L, f.bandlimit); ++l)
            for (int m = -l; m <= l; ++m)
                for (int n = -l; n <= l; ++n) out.at(c, l, m, n) = f.at(c, l, m, n);
    return out;
}

struct ConvArgs {
    std::string config;
    std::string output;
    bool oracle = false;
    unsigned seed = 0;
};

int cmd_conv(const ConvArgs& a) {
    toml::table cfg;
    try {
        cfg = toml::parse_file(a.config);
    } catch (const toml::parse_error& e) {
        throw FormatError(std::string("run-config: ") + std::string(e.description()));
    }
    const fs::path base = fs::path(a.config).parent_path();
    auto resolve = [&](const char* key) {
        const auto v = cfg[key].value<std::string>();
        if (!v) throw UsageError(std::string("run-config needs '") + key + "'");
        const fs::path p(*v);
        return (p.is_absolute() ? p : base / p).string();
    };
    const std::string variant = cfg["variant"].value_or<std::string>("");
    const std::string kernel_path = resolve("kernel"), signal_path = resolve("signal");
    std::string output = a.output;
    if (output.empty() && cfg["output"].value<std::string>()) output = resolve("output");
    const bool s2 = variant.rfind("s2", 0) == 0 || variant == "irrep_s2";
    const std::string kernel_text = read_file(kernel_path), signal_text = read_file(signal_path);

    SpectralSO3Signal out;
    nlohmann::ordered_json summary{{"variant", variant}};
    std::vector<EulerZYZ> rots;
    std::vector<cd> oracle;
    if (variant == "s2_scalar") {
        const auto k = kernel_s2_from_json(kernel_text);
        const auto f = s2_coeffs_from_json(signal_text);
        out = s2_conv_scalar(k, f);
        if (a.oracle) {
            const S2Grid sg(f.bandlimit);
            rots = all_nodes(SO3Grid(out.bandlimit));
            oracle = s2_conv_scalar_spatial(k, s2_synthesis(f, sg), sg, rots);
        }
    } else if (variant == "so3_scalar") {
        const auto k = kernel_so3_from_json(kernel_text);
        const auto f = so3_coeffs_from_json(signal_text);
        out = so3_conv_scalar(k, f);
        if (a.oracle) {
            const SO3Grid g(f.bandlimit);
            rots = random_nodes(8, a.seed);
            oracle = so3_conv_scalar_spatial(k, so3_synthesis(f, g), g, rots);
        }
    } else if (variant == "s2_general" || variant == "so3_general") {
        const auto rho1 = representation_from(cfg, "rho_in"), rho2 = representation_from(cfg, "rho_out");
        const auto r1 = RepSpectral::from(rho1), r2 = RepSpectral::from(rho2);
        if (s2) {
            const auto k = kernel_s2_from_json(kernel_text);
            const auto f = s2_coeffs_from_json(signal_text);
            out = s2_conv_general(r1, r2, k, f);
            if (a.oracle) {
                const S2Grid sg(f.bandlimit);
                rots = random_nodes(8, a.seed);
                oracle = s2_conv_general_spatial(rho1, rho2, k, s2_synthesis(f, sg), sg, rots);
            }
        } else {
            const auto k = kernel_so3_from_json(kernel_text);
            const auto f = so3_coeffs_from_json(signal_text);
            out = so3_conv_general(r1, r2, k, f);
            if (a.oracle) {
                // The integrand carries rho1's degree on top of f's.
                const SO3Grid g(f.bandlimit + 2 * rho1.max_degree);
                rots = random_nodes(8, a.seed);
                oracle = so3_conv_general_spatial(rho1, rho2, k, so3_synthesis(padded(f, g.bandlimit()), g), g, rots);
            }
        }
    } else if (variant == "irrep_s2" || variant == "irrep_so3") {
        const auto in = irrep_type_from(cfg, "type_in"), outt = irrep_type_from(cfg, "type_out");
        const int need = in.max_degree() + outt.max_degree();
        if (s2) {
            const auto k = kernel_s2_from_json(kernel_text);
            const auto f = s2_coeffs_from_json(signal_text);
            out = irrep_s2_conv(outt, in, k, f, CGTable::load_or_build(std::max(k.bandlimit, f.bandlimit) + need));
            if (a.oracle) {
                const S2Grid sg(f.bandlimit);
                rots = random_nodes(8, a.seed);
                oracle = s2_conv_general_spatial(Representation::irreps(in, false), Representation::irreps(outt, false),
                                                 k, s2_synthesis(f, sg), sg, rots);
            }
        } else {
            const auto k = kernel_so3_from_json(kernel_text);
            const auto f = so3_coeffs_from_json(signal_text);
            out = irrep_so3_conv(outt, in, k, f, CGTable::load_or_build(std::max(k.bandlimit, f.bandlimit) + need));
            if (a.oracle) {
                const SO3Grid g(f.bandlimit + 2 * in.max_degree());
                rots = random_nodes(8, a.seed);
                oracle = so3_conv_general_spatial(Representation::irreps(in, false), Representation::irreps(outt, false),
                                                  k, so3_synthesis(padded(f, g.bandlimit()), g), g, rots);
            }
        }
    } else {
        throw UsageError("variant must be one of s2_scalar, so3_scalar, s2_general, so3_general, irrep_s2, irrep_so3");
    }
    emit(so3_coeffs_to_json(out), output);
    summary["output_bandlimit"] = out.bandlimit;
    summary["output_channels"] = out.channels;
    if (a.oracle) summary["oracle_residual"] = oracle_gap(out, rots, oracle);
    // With the coefficients on stdout the summary goes to stderr.
    (output.empty() || output == "-" ? std::cerr : std::cout) << summary.dump() << '\n';
    return kOk;
}

// ---------------------------------------------------------------------------
// check

struct CheckArgs {
    AuditConfig config;
    std::string out;
    std::string format = "json";
    std::string phase = "condon-shortley";
    bool list = false;
};

int cmd_check(const CheckArgs& a) {
    if (a.phase == "no-condon-shortley") set_phase_convention(PhaseConvention::NoCondonShortley);
    if (a.list) {
        for (const auto& n : audit_check_names(a.config)) std::cout << n << '\n';
        return kOk;
    }
    const auto report = run_audit(a.config);
    emit(a.format == "csv" ? report.to_csv() : report.to_json() + "\n", a.out);
    for (const auto& c : report.checks)
        if (!c.pass)
            std::cerr << "FAIL " << c.name << " residual=" << c.residual << " tolerance=" << c.tolerance
                      << (c.error.empty() ? "" : " error=" + c.error) << '\n';
    std::cerr << report.passed() << "/" << report.checks.size() << " checks passed\n";
    return report.failed() == 0 ? kOk : kFailed;
}

// ---------------------------------------------------------------------------
// kernels

struct KernelsArgs {
    int lambda = 1, theta = 1, shells = 2, side = 9;
    double spacing = 1.0;
    unsigned seed = 0;
    std::string out;
};

int cmd_kernels(const KernelsArgs& a) {
    if (a.side < 1 || a.side % 2 == 0) throw UsageError("--side must be a positive odd number");
    if (a.spacing <= 0.0) throw UsageError("--spacing must be positive");
    const auto basis = solve_angular_basis(a.lambda, a.theta, RadialShells::for_lattice(a.spacing, a.shells));
    emit(basis_to_json(basis, a.side, a.spacing, a.seed) + "\n", a.out);
    return kOk;
}

// ---------------------------------------------------------------------------
// mesh

struct MeshArgs {
    std::string input;
    std::string builtin = "icosahedron";
    std::string feature, out_feature, out;
    int kernel_order = 1;
    unsigned seed = 0;
    double tolerance = 1e-10;
};

int cmd_mesh(const MeshArgs& a) {
    TriMesh mesh;
    std::string name;
    if (!a.input.empty()) {
        mesh = read_mesh(a.input);
        name = a.input;
    } else if (a.builtin == "icosahedron") {
        mesh = icosahedron();
        name = "icosahedron";
    } else if (a.builtin == "sphere200") {
        mesh = random_sphere_mesh(200, a.seed);
        name = "sphere200";
    } else {
        throw UsageError("--builtin must be icosahedron or sphere200");
    }
    mesh.validate();
    const int n = static_cast<int>(mesh.vertices.size());

    std::mt19937_64 rng(a.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    std::uniform_real_distribution<double> angle(0.0, 2 * kPi);
    MeshFeature f;
    if (!a.feature.empty()) {
        f = MeshFeature::from_json(read_file(a.feature));
        if (f.vertices != n) throw UsageError("feature vertex count differs from the mesh");
    } else {
        f = MeshFeature::zeros(n, {0, 1, -1, 2});
        for (auto& v : f.values) v = {nd(rng), nd(rng)};
    }
    std::vector<double> gauge(n);
    for (auto& g : gauge) g = angle(rng);

    const CircularHarmonic kernel{a.kernel_order, 0.0, [](double r) { return std::exp(-r * r) * (1.0 + r); }};
    const auto atlas = build_atlas(mesh);
    const auto conv = harmonic_conv(atlas, f, kernel);
    if (!a.out_feature.empty()) write_file(a.out_feature, conv.to_json());

    CMatrix c(f.channels(), f.channels()), s(f.channels(), f.channels());
    for (int i = 0; i < c.size(); ++i) c.data()[i] = {nd(rng), nd(rng)}, s.data()[i] = {nd(rng), nd(rng)};
    const auto gem = circular_harmonic_gem_kernel(f.orders, f.orders, c, [](double r) { return r * std::exp(-r); }, s);

    const double harmonic = harmonic_gauge_residual(mesh, f, kernel, gauge);
    const double gem_res = gem_gauge_residual(mesh, f, gem, gauge);
    const bool pass = harmonic <= a.tolerance && gem_res <= a.tolerance;
    nlohmann::ordered_json report{{"mesh", name},
                                  {"vertices", n},
                                  {"faces", mesh.faces.size()},
                                  {"seed", a.seed},
                                  {"kernel_order", a.kernel_order},
                                  {"harmonic_gauge_residual", harmonic},
                                  {"gem_gauge_residual", gem_res},
                                  {"tolerance", a.tolerance},
                                  {"pass", pass}};
    emit(report.dump(2) + "\n", a.out);
    return pass ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Equivariant convolutions on spheres, rotation groups, lattices and meshes"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    TransformArgs ta;
    auto* transform = app.add_subcommand("transform", "S2 / SO(3) analysis (CSV samples -> JSON coeffs) or synthesis");
    transform->add_option("--domain", ta.domain, "s2 or so3")->check(CLI::IsMember({"s2", "so3"}));
    transform->add_option("--direction", ta.direction, "analysis or synthesis")
        ->required()
        ->check(CLI::IsMember({"analysis", "synthesis"}));
    transform->add_option("--bandlimit,-L", ta.bandlimit, "bandlimit L (grid of side 2L)")->required();
    transform->add_option("--in", ta.input, "input file")->required();
    transform->add_option("--out", ta.output, "output file (default stdout)");
    transform->add_flag("--reference", ta.reference, "use the serial direct-sum transforms");

    ConvArgs ca;
    auto* conv = app.add_subcommand("conv", "run a spectral convolution from a TOML run-config");
    conv->add_option("config", ca.config, "run-config (.toml)")->required();
    conv->add_option("--out", ca.output, "output coefficients (overrides the config)");
    conv->add_flag("--oracle", ca.oracle, "also evaluate the quadrature oracle and report the residual");
    conv->add_option("--seed", ca.seed, "seed for oracle rotations");

    CheckArgs ka;
    auto* check = app.add_subcommand("check", "run the equivariance audit");
    check->add_option("--bandlimit,-L", ka.config.bandlimit, "bandlimit of the transform and scalar checks");
    check->add_option("--seed", ka.config.seed, "seed (recorded in the report)");
    check->add_option("--filter", ka.config.filter, "comma-separated modules or check-name prefixes");
    check->add_option("--out", ka.out, "report file (default stdout)");
    check->add_option("--format", ka.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    check->add_flag("--oracle", ka.config.oracle, "add cross-checks against the serial direct-sum transforms");
    check->add_option("--phase-convention", ka.phase,
                      "associated Legendre phase; no-condon-shortley injects a convention flip")
        ->check(CLI::IsMember({"condon-shortley", "no-condon-shortley"}));
    check->add_flag("--list", ka.list, "print the selected check names and exit");

    KernelsArgs kb;
    auto* kernels = app.add_subcommand("kernels", "export a steerable kernel basis as JSON");
    kernels->add_option("--lambda", kb.lambda, "output degree")->check(CLI::Range(0, 8));
    kernels->add_option("--theta", kb.theta, "input degree")->check(CLI::Range(0, 8));
    kernels->add_option("--shells", kb.shells, "radial shells")->check(CLI::Range(1, 32));
    kernels->add_option("--side", kb.side, "odd lattice side");
    kernels->add_option("--spacing", kb.spacing, "lattice spacing");
    kernels->add_option("--seed", kb.seed, "seed for the residual rotations");
    kernels->add_option("--out", kb.out, "output file (default stdout)");

    MeshArgs ma;
    auto* mesh = app.add_subcommand("mesh", "mesh convolution demo and gauge audit");
    mesh->add_option("--in", ma.input, "OFF or OBJ mesh (default: built-in)");
    mesh->add_option("--builtin", ma.builtin, "icosahedron or sphere200");
    mesh->add_option("--feature", ma.feature, "input feature JSON (default: random orders 0, 1, -1, 2)");
    mesh->add_option("--out-feature", ma.out_feature, "write the convolved feature JSON");
    mesh->add_option("--kernel-order", ma.kernel_order, "circular harmonic order of the demo kernel");
    mesh->add_option("--seed", ma.seed, "seed for features, gauges and kernels");
    mesh->add_option("--tolerance", ma.tolerance, "gauge audit tolerance");
    mesh->add_option("--out", ma.out, "report file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*transform) return cmd_transform(ta);
        if (*conv) return cmd_conv(ca);
        if (*check) return cmd_check(ka);
        if (*kernels) return cmd_kernels(kb);
        if (*mesh) return cmd_mesh(ma);
    } catch (const std::exception& e) {
        // Every error that reaches here is about the invocation or its files.
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
