// End-to-end checks of the CLI binary: exit codes, artifact determinism,
// golden files on a tiny config, sweep/run consistency.

#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(ION_CLI_PATH) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    CliResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buf.data(), buf.size(), pipe)) result.output += buf.data();
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("ionshuttle_test_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const fs::path& dir, const std::string& name, const std::string& body) {
    const fs::path p = dir / name;
    std::ofstream out(p);
    out << body;
    return p;
}

const std::string kTinyConfig = std::string(ION_TEST_DATA) + "/tiny.json";
const std::string kPaperConfig = std::string(ION_CONFIG_DIR) + "/paper_separation.json";

}  // namespace

TEST_CASE("validate: paper config prints the derived separation") {
    const CliResult r = run_cli("validate " + kPaperConfig);
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("3.45") != std::string::npos);      // d0 in metres
    CHECK(r.output.find("kappa") != std::string::npos);
}

TEST_CASE("validate: schema violations exit with code 2") {
    const fs::path dir = fresh_dir("validate");

    SUBCASE("omega_r below omega_t cites the violated invariant") {
        const auto cfg = write_config(dir, "bad.json", R"({
  "ion": {"mass": {"value": 171, "unit": "amu"}, "charge": {"value": 1, "unit": "e"}},
  "trap": {"omega_t": {"value": 1.0, "unit": "MHz"}, "omega_r": {"value": 0.5, "unit": "MHz"}},
  "protocol": {"final_separation": {"value": 200, "unit": "um"},
               "duration": {"value": 3, "unit": "1/omega_t"}}
})");
        const CliResult r = run_cli("validate " + cfg.string());
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("omega_r") != std::string::npos);
    }

    SUBCASE("missing mass field") {
        const auto cfg = write_config(dir, "nomass.json", R"({
  "ion": {"charge": {"value": 1, "unit": "e"}},
  "trap": {"omega_t": {"value": 1.0, "unit": "MHz"}, "omega_r": {"value": 10.0, "unit": "MHz"}},
  "protocol": {"final_separation": {"value": 200, "unit": "um"},
               "duration": {"value": 3, "unit": "1/omega_t"}}
})");
        const CliResult r = run_cli("validate " + cfg.string());
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("mass") != std::string::npos);
    }

    SUBCASE("unsupported spatial dimension") {
        const auto cfg = write_config(dir, "dim4.json", R"({
  "ion": {"mass": {"value": 171, "unit": "amu"}, "charge": {"value": 1, "unit": "e"}},
  "trap": {"omega_t": {"value": 1.0, "unit": "MHz"}, "omega_r": {"value": 10.0, "unit": "MHz"}},
  "protocol": {"final_separation": {"value": 200, "unit": "um"},
               "duration": {"value": 3, "unit": "1/omega_t"}, "dimensions": 4}
})");
        const CliResult r = run_cli("validate " + cfg.string());
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("dimension") != std::string::npos);
    }

    SUBCASE("malformed JSON is reported with a line anchor") {
        const auto cfg = write_config(dir, "broken.json", "{\n  \"ion\": [,]\n}");
        const CliResult r = run_cli("validate " + cfg.string());
        CHECK(r.exit_code == 2);
        CHECK(r.output.find("line") != std::string::npos);
    }

    SUBCASE("unreadable config") {
        const CliResult r = run_cli("validate /nonexistent/config.json");
        CHECK(r.exit_code == 2);
    }
}

TEST_CASE("run: artifacts, golden files, determinism") {
    const fs::path out1 = fresh_dir("run1");
    const CliResult r1 = run_cli("run " + kTinyConfig + " --out " + out1.string());
    REQUIRE(r1.exit_code == 0);

    const std::array<const char*, 5> csvs{"means.csv", "covariance.csv", "control.csv",
                                          "centers.csv", "diagnostics.csv"};
    for (const char* name : csvs) CHECK(fs::exists(out1 / name));
    CHECK(fs::exists(out1 / "covariance_snapshots.json"));
    CHECK(fs::exists(out1 / "manifest.json"));

    SUBCASE("golden bodies") {
        for (const char* name : csvs) {
            const fs::path golden = fs::path(ION_TEST_DATA) / "golden" / name;
            REQUIRE(fs::exists(golden));
            CHECK_MESSAGE(slurp(out1 / name) == slurp(golden), "golden mismatch for ", name);
        }
    }

    SUBCASE("re-running the identical config is byte-identical") {
        const fs::path out2 = fresh_dir("run2");
        const CliResult r2 = run_cli("run " + kTinyConfig + " --out " + out2.string());
        REQUIRE(r2.exit_code == 0);
        for (const char* name : csvs) CHECK(slurp(out1 / name) == slurp(out2 / name));
    }

    SUBCASE("manifest records hash, version, outputs, and summary") {
        const auto manifest = nlohmann::json::parse(slurp(out1 / "manifest.json"));
        CHECK(manifest["config_hash"].get<std::string>().substr(0, 6) == "fnv1a:");
        CHECK(manifest["schema_version"].get<int>() == 1);
        CHECK(manifest["outputs"].size() >= 6);
        CHECK(manifest["acceptance"]["fidelity"].get<double>() > 0.0);
        CHECK(manifest["acceptance"].contains("max_invariant_residual"));
    }
}

TEST_CASE("sweep: single point matches run; bad duration lists exit 2") {
    const fs::path out_run = fresh_dir("sweeprun");
    REQUIRE(run_cli("run " + kTinyConfig + " --out " + out_run.string()).exit_code == 0);
    const auto manifest = nlohmann::json::parse(slurp(out_run / "manifest.json"));
    const double fid_run = manifest["acceptance"]["fidelity"].get<double>();
    const double duration = manifest["config"]["duration_over_omega_t"].get<double>();

    const fs::path out_sweep = fresh_dir("sweep1");
    const CliResult rs = run_cli("sweep " + kTinyConfig + " --durations " +
                                 std::to_string(duration) + " --out " + out_sweep.string());
    REQUIRE(rs.exit_code == 0);
    const std::string csv = slurp(out_sweep / "fidelity_sweep.csv");
    CHECK(csv.substr(0, csv.find('\n')) == "T,fidelity,residual,status");
    const auto line = csv.substr(csv.find('\n') + 1);
    const auto first_comma = line.find(',');
    const auto second_comma = line.find(',', first_comma + 1);
    const double fid_sweep =
        std::stod(line.substr(first_comma + 1, second_comma - first_comma - 1));
    CHECK(fid_sweep == doctest::Approx(fid_run).epsilon(1e-12));

    CHECK(run_cli("sweep " + kTinyConfig + " --durations ,").exit_code == 2);
    CHECK(run_cli("sweep " + kTinyConfig + " --durations \"\"").exit_code == 2);
    CHECK(run_cli("sweep " + kTinyConfig + " --durations 3,abc").exit_code == 2);
}

TEST_CASE("CLI usage errors exit with code 2") {
    CHECK(run_cli("frobnicate").exit_code == 2);
    CHECK(run_cli("run").exit_code == 2);
}
