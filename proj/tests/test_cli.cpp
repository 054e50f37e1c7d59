#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <gtest/gtest.h>
#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const fs::path kWork = fs::path(FRONTSTAB_WORK_DIR) / "cli_work";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void put(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

/// Runs the CLI from the work directory; returns its exit status. stderr goes to `err`.
int run(const std::string& args, const std::string& err = "stderr.txt") {
    const std::string cmd = "cd '" + kWork.string() + "' && '" FRONTSTAB_CLI "' " + args + " > stdout.txt 2> " + err;
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

class Cli : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        fs::create_directories(kWork);
        put(kWork / "planar.json",
            R"({"delta": 3.0, "planar": {"x_min": -100, "x_max": 100, "n_x": 801}})");
        ASSERT_EQ(run("front1d --config planar.json --out planar"), 0);
    }
};

TEST_F(Cli, MalformedConfigIsASchemaError) {
    put(kWork / "broken.json", R"({"delta": 3.0, )");
    EXPECT_EQ(run("front1d --config broken.json --out broken"), 2);
    put(kWork / "typo.json", R"({"delta": 3.0, "planar": {"nx": 801}})");
    EXPECT_EQ(run("front1d --config typo.json --out typo", "typo.txt"), 2);
    EXPECT_NE(slurp(kWork / "typo.txt").find("planar.nx"), std::string::npos);
    put(kWork / "negative.json", R"({"delta": -1.0})");
    EXPECT_EQ(run("front1d --config negative.json --out negative"), 2);
    EXPECT_EQ(run("front1d --config missing.json"), 2);
    EXPECT_EQ(run("front1d"), 2);
    EXPECT_FALSE(fs::exists(kWork / "typo"));  // rejected before any output
}

TEST_F(Cli, FrontRunPrintsSpeedAndCarriesHash) {
    const auto report = json::parse(slurp(kWork / "planar" / "report.json"));
    EXPECT_NEAR(report["speed"].get<double>(), 0.548, 0.005);
    const auto hash = report["config_hash"].get<std::string>();
    EXPECT_EQ(hash.size(), 16u);
    EXPECT_EQ(slurp(kWork / "planar" / "front.csv").rfind("# config_hash=" + hash + "\n", 0), 0u);
    EXPECT_EQ(json::parse(slurp(kWork / "planar" / "config.json"))["delta"].get<double>(), 3.0);
    EXPECT_EQ(run("front1d --config planar.json --out planar_again"), 0);
    EXPECT_NE(slurp(kWork / "stdout.txt").find("c = 0.54"), std::string::npos);
}

TEST_F(Cli, RerunIsByteIdentical) {
    ASSERT_EQ(run("front1d --config planar.json --out rerun"), 0);
    EXPECT_EQ(slurp(kWork / "planar" / "front.csv"), slurp(kWork / "rerun" / "front.csv"));
    EXPECT_EQ(slurp(kWork / "planar" / "report.json"), slurp(kWork / "rerun" / "report.json"));
}

TEST_F(Cli, CorruptArchiveNamesTheCheck) {
    const auto bytes = slurp(kWork / "planar" / "front.bin");
    put(kWork / "short.bin", bytes.substr(0, bytes.size() / 2));
    put(kWork / "corrupt.json", R"({"input": "short.bin", "K": 1, "period": 200})");
    EXPECT_EQ(run("project --config corrupt.json --out corrupt", "corrupt.txt"), 2);
    EXPECT_NE(slurp(kWork / "corrupt.txt").find("truncated"), std::string::npos);
    put(kWork / "absent.json", R"({"input": "absent.bin", "K": 1, "period": 200})");
    EXPECT_EQ(run("project --config absent.json --out absent"), 2);
    put(kWork / "nodelta.json", R"({"input": "planar/front.bin", "K": 1, "period": 200, "delta": 2.5})");
    EXPECT_EQ(run("project --config nodelta.json --out nodelta"), 2);
}

TEST_F(Cli, ScanWithBothBackendsReportsDifferences) {
    put(kWork / "scan.json", R"({"input": "planar/front.bin", "K": 1, "period": 200,
        "evans": {"x_left": -25, "x_right": 25}, "scan": {"a": -0.0002, "b": 0.0008, "samples": 21}})");
    ASSERT_EQ(run("evans-scan --config scan.json --out scan --backend both --workers 2"), 0);
    const auto report = json::parse(slurp(kWork / "scan" / "report.json"));
    EXPECT_FALSE(report["backend_count_mismatch"].get<bool>());
    EXPECT_LT(report["max_backend_difference"].get<double>(), 1e-6);
    ASSERT_EQ(report["runs"].size(), 2u);
    for (const auto& r : report["runs"]) {
        ASSERT_EQ(r["zeros"].size(), 2u);
        EXPECT_NEAR(r["zeros"][1]["lambda"].get<double>(), 0.000493, 5e-6);
        EXPECT_EQ(r["zeros"][1]["multiplicity"].get<int>(), 2);
    }
    const auto csv = slurp(kWork / "scan" / "samples.csv");
    EXPECT_NE(csv.find("re,im,log_abs,arg,backend,K,x_star\n"), std::string::npos);
    ASSERT_EQ(run("evans-scan --config scan.json --out scan_serial --backend both --workers 1"), 0);
    EXPECT_EQ(csv, slurp(kWork / "scan_serial" / "samples.csv"));
}

TEST_F(Cli, GateExitCodeCountsUnstableEigenvalues) {
    // Modes k = +-1 of the L = 200 planar front both grow; the origin holds translation.
    put(kWork / "gate.json", R"({"input": "planar/front.bin", "K": 1, "period": 200,
        "evans": {"x_left": -25, "x_right": 25}})");
    EXPECT_EQ(run("evans-contour --config gate.json --out gate --gate"), 12);
    const auto report = json::parse(slurp(kWork / "gate" / "report.json"));
    EXPECT_EQ(report["contours"][1]["count"].get<int>(), 1);
    EXPECT_EQ(run("evans-contour --config gate.json --out gate"), 0);
}

TEST_F(Cli, DispersionStableBelowThreshold) {
    put(kWork / "dispersion.json", R"({"delta": 2.0, "wavenumbers": {"period": 200, "modes": 4}})");
    ASSERT_EQ(run("dispersion --config dispersion.json --out dispersion"), 0);
    const auto report = json::parse(slurp(kWork / "dispersion" / "report.json"));
    EXPECT_TRUE(report["curves"][0]["nonpositive"].get<bool>());
    EXPECT_TRUE(report["curves"][0]["all_found"].get<bool>());
}

TEST_F(Cli, FactorizationCheckPasses) {
    put(kWork / "factor.json", R"({"input": "planar/front.bin", "K": 2, "period": 200,
        "evans": {"x_left": -25, "x_right": 25}, "lambdas": [0.01, [0.002, 0.01]]})");
    EXPECT_EQ(run("factorization-check --config factor.json --out factor"), 0);
    EXPECT_TRUE(json::parse(slurp(kWork / "factor" / "report.json"))["pass"].get<bool>());
}

}  // namespace
