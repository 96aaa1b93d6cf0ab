#include "equivar/io.hpp"
#include "equivar/mesh.hpp"
#include "equivar/spectral_conv.hpp"
#include "support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace equivar;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("equivar_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" +
                std::to_string(::getpid()));
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    // Runs the CLI with stdout and stderr captured; returns the exit code.
    int run(const std::string& args) {
        const std::string cmd = std::string(EQUIVAR_CLI) + " " + args + " > " + path("stdout") + " 2> " + path("stderr");
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }
    std::string out() const { return read_file(path("stdout")); }
    std::string err() const { return read_file(path("stderr")); }

    fs::path dir_;
};

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(run("--help"), 0);
    EXPECT_NE(out().find("check"), std::string::npos);
    EXPECT_EQ(run("check --help"), 0);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("check --no-such-flag"), 2);
    EXPECT_EQ(run("check --format xml"), 2);
    EXPECT_EQ(run("check --filter nothing_matches"), 2);
}

TEST_F(Cli, TransformRoundTripS2) {
    std::mt19937_64 rng(1);
    const auto f = random_s2(6, 2, rng, false);
    write_file(path("f.json"), s2_coeffs_to_json(f));
    ASSERT_EQ(run("transform --direction synthesis -L 6 --in " + path("f.json") + " --out " + path("f.csv")), 0) << err();
    ASSERT_EQ(run("transform --direction analysis -L 6 --in " + path("f.csv") + " --out " + path("g.json")), 0) << err();
    const auto g = s2_coeffs_from_json(read_file(path("g.json")));
    EXPECT_LT(max_abs_diff(g.coeffs, f.coeffs), 1e-9);
}

TEST_F(Cli, TransformRoundTripSO3Reference) {
    std::mt19937_64 rng(2);
    const auto f = random_so3(3, 1, rng);
    write_file(path("f.json"), so3_coeffs_to_json(f));
    ASSERT_EQ(run("transform --domain so3 --direction synthesis -L 3 --reference --in " + path("f.json") + " --out " +
                  path("f.csv")),
              0)
        << err();
    ASSERT_EQ(run("transform --domain so3 --direction analysis -L 3 --in " + path("f.csv") + " --out " + path("g.json")),
              0)
        << err();
    EXPECT_LT(max_abs_diff(so3_coeffs_from_json(read_file(path("g.json"))).coeffs, f.coeffs), 1e-9);
}

TEST_F(Cli, TransformBadBandlimit) {
    std::mt19937_64 rng(3);
    write_file(path("f.json"), s2_coeffs_to_json(random_s2(4, 1, rng, false)));
    EXPECT_EQ(run("transform --direction synthesis -L 0 --in " + path("f.json")), 2);
    EXPECT_NE(err().find("bandlimit"), std::string::npos);
    EXPECT_EQ(run("transform --direction synthesis -L 5 --in " + path("f.json")), 2);
    ASSERT_EQ(run("transform --direction synthesis -L 4 --in " + path("f.json") + " --out " + path("f.csv")), 0);
    // Samples of an L = 4 grid are not a complete L = 3 grid.
    EXPECT_EQ(run("transform --direction analysis -L 3 --in " + path("f.csv")), 2);
    EXPECT_EQ(run("transform --direction analysis -L 4 --in " + path("missing.csv")), 2);
}

TEST_F(Cli, ConvScalarS2ReproducesLibraryCall) {
    std::mt19937_64 rng(4);
    const auto f = random_s2(5, 2, rng, true);
    auto k = KernelS2::zeros(5, 3, 2);
    for (auto& v : k.coeffs) v = random_complex(rng);
    write_file(path("f.json"), s2_coeffs_to_json(f));
    write_file(path("k.json"), kernel_s2_to_json(k));
    write_file(path("run.toml"), "variant = \"s2_scalar\"\nkernel = \"k.json\"\nsignal = \"f.json\"\noutput = \"out.json\"\n");
    ASSERT_EQ(run("conv " + path("run.toml")), 0) << err();
    const auto got = so3_coeffs_from_json(read_file(path("out.json")));
    const auto want = s2_conv_scalar(k, f);
    EXPECT_EQ(got.bandlimit, want.bandlimit);
    EXPECT_EQ(got.coeffs, want.coeffs);
}

TEST_F(Cli, ConvOracleReportsResidual) {
    std::mt19937_64 rng(5);
    write_file(path("f.json"), s2_coeffs_to_json(random_s2(4, 1, rng, true)));
    auto k = KernelS2::zeros(4, 1, 1);
    for (auto& v : k.coeffs) v = random_complex(rng);
    write_file(path("k.json"), kernel_s2_to_json(k));
    write_file(path("run.toml"), "variant = \"s2_scalar\"\nkernel = \"k.json\"\nsignal = \"f.json\"\n");
    ASSERT_EQ(run("conv --oracle --out " + path("out.json") + " " + path("run.toml")), 0) << err();
    const auto summary = nlohmann::json::parse(out());
    EXPECT_LT(summary["oracle_residual"].get<double>(), 1e-9);
}

TEST_F(Cli, ConvGeneralAndIrrepWithOracle) {
    std::mt19937_64 rng(6);
    write_file(path("f.json"), s2_coeffs_to_json(random_s2(3, 3, rng, true)));
    auto k = KernelS2::zeros(3, 4, 3);
    for (auto& v : k.coeffs) v = random_complex(rng);
    write_file(path("k.json"), kernel_s2_to_json(k));
    write_file(path("general.toml"), R"(variant = "s2_general"
kernel = "k.json"
signal = "f.json"
[rho_in]
kind = "fundamental"
[rho_out]
kind = "irreps"
multiplicities = { 0 = 1, 1 = 1 }
real_basis = false
)");
    ASSERT_EQ(run("conv --oracle --out " + path("g.json") + " " + path("general.toml")), 0) << err();
    EXPECT_LT(nlohmann::json::parse(out())["oracle_residual"].get<double>(), 1e-7);

    write_file(path("irrep.toml"), R"(variant = "irrep_s2"
kernel = "k.json"
signal = "f.json"
[type_in]
multiplicities = { 0 = 3 }
[type_out]
multiplicities = { 0 = 1, 1 = 1 }
)");
    ASSERT_EQ(run("conv --oracle --out " + path("i.json") + " " + path("irrep.toml")), 0) << err();
    EXPECT_LT(nlohmann::json::parse(out())["oracle_residual"].get<double>(), 1e-7);
}

TEST_F(Cli, ConvErrors) {
    write_file(path("run.toml"), "variant = \"s2_scalar\"\nkernel = \"nope.json\"\nsignal = \"f.json\"\n");
    EXPECT_EQ(run("conv " + path("run.toml")), 2);
    EXPECT_NE(err().find("nope.json"), std::string::npos);
    EXPECT_EQ(run("conv " + path("absent.toml")), 2);
    write_file(path("bad.toml"), "variant = [\n");
    EXPECT_EQ(run("conv " + path("bad.toml")), 2);
    std::mt19937_64 rng(7);
    write_file(path("f.json"), s2_coeffs_to_json(random_s2(3, 1, rng, true)));
    write_file(path("k.json"), kernel_s2_to_json(KernelS2::zeros(3, 1, 2)));
    write_file(path("mismatch.toml"), "variant = \"s2_scalar\"\nkernel = \"k.json\"\nsignal = \"f.json\"\n");
    EXPECT_EQ(run("conv " + path("mismatch.toml")), 2);
    write_file(path("variant.toml"), "variant = \"s2_magic\"\nkernel = \"k.json\"\nsignal = \"f.json\"\n");
    EXPECT_EQ(run("conv " + path("variant.toml")), 2);
}

TEST_F(Cli, CheckFilterRunsOnlyThatModule) {
    ASSERT_EQ(run("check --filter harmonics --seed 3 --out " + path("r.json")), 0) << err();
    const auto j = nlohmann::json::parse(read_file(path("r.json")));
    EXPECT_EQ(j["seed"], 3);
    ASSERT_FALSE(j["checks"].empty());
    for (const auto& c : j["checks"]) EXPECT_EQ(c["module"], "harmonics");
    EXPECT_EQ(j["summary"]["failed"], 0);
}

TEST_F(Cli, CheckCsvAndList) {
    ASSERT_EQ(run("check --filter repr --format csv"), 0) << err();
    EXPECT_EQ(out().rfind("name,module,anchor,residual,tolerance,pass", 0), 0u);
    ASSERT_EQ(run("check --list --filter gcnn_discrete"), 0);
    EXPECT_NE(out().find("gcnn_discrete.kernel_recovery\n"), std::string::npos);
}

TEST_F(Cli, CheckPhaseMutationFails) {
    EXPECT_EQ(run("check --filter harmonics --phase-convention no-condon-shortley"), 1);
    EXPECT_NE(err().find("FAIL harmonics.rotation_rule"), std::string::npos);
}

TEST_F(Cli, KernelsExport) {
    ASSERT_EQ(run("kernels --lambda 1 --theta 1 --shells 2 --side 5 --out " + path("b.json")), 0) << err();
    const auto j = nlohmann::json::parse(read_file(path("b.json")));
    // Degrees J = 0, 1, 2 per shell.
    EXPECT_EQ(j["J_list"].size(), 3u);
    EXPECT_EQ(j["elements"].size(), 6u);
    for (const auto& e : j["elements"]) EXPECT_LT(e["lattice_residual"].get<double>(), 1e-6);
    EXPECT_EQ(run("kernels --side 4"), 2);
}

TEST_F(Cli, MeshGaugeAudit) {
    ASSERT_EQ(run("mesh --out " + path("m.json")), 0) << err();
    const auto j = nlohmann::json::parse(read_file(path("m.json")));
    EXPECT_EQ(j["vertices"], 12);
    EXPECT_LT(j["harmonic_gauge_residual"].get<double>(), 1e-10);
    EXPECT_LT(j["gem_gauge_residual"].get<double>(), 1e-10);
    EXPECT_EQ(run("mesh --builtin sphere200 --seed 4"), 0) << err();
}

TEST_F(Cli, MeshFromFiles) {
    {
        std::ofstream off(path("ico.off"));
        write_off(icosahedron(), off);
    }
    std::mt19937_64 rng(8);
    auto f = MeshFeature::zeros(12, {0, 2});
    for (auto& v : f.values) v = random_complex(rng);
    write_file(path("f.json"), f.to_json());
    ASSERT_EQ(run("mesh --in " + path("ico.off") + " --feature " + path("f.json") + " --out-feature " + path("o.json")),
              0)
        << err();
    const auto o = MeshFeature::from_json(read_file(path("o.json")));
    EXPECT_EQ(o.orders, (std::vector<int>{1, 3}));
    write_file(path("bad.off"), "OFF\n3 1 0\n0 0 0\n1 0\n");
    EXPECT_EQ(run("mesh --in " + path("bad.off")), 2);
    EXPECT_NE(err().find("error"), std::string::npos);
}
