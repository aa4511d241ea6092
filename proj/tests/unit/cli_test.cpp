#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "ldp/error.hpp"

using namespace ldp;
using nlohmann::json;

namespace {

struct Result {
    int status;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int status = cli::run(args, out, err);
    return {status, out.str(), err.str()};
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("ldp-cli-" + std::to_string(::getpid()) + "-" + name);
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Cli, ParsesMixingConfig) {
    const auto cfg = cli::parse_config(
        {"mixing", "--gamma", "0.5", "--eta", "0.0078125", "--replicas", "200", "--tmax", "100", "--seed", "42"});
    EXPECT_EQ(cfg.command, "mixing");
    EXPECT_DOUBLE_EQ(cfg.params["gamma"].get<double>(), 0.5);
    EXPECT_DOUBLE_EQ(cfg.params["eta"].get<double>(), 0.0078125);
    EXPECT_EQ(cfg.params["replicas"].get<int>(), 200);
    EXPECT_EQ(cfg.params["seed"].get<int>(), 42);
    EXPECT_EQ(cfg.params["mode"], "annealed");
    EXPECT_TRUE(cfg.params["C"].is_null());
}

TEST(Cli, GammaOutOfRange) {
    const auto r = run({"mixing", "--gamma", "2.5"});
    EXPECT_EQ(r.status, cli::kExitError);
    const auto first = r.err.substr(0, r.err.find('\n'));
    const auto j = json::parse(first);
    EXPECT_EQ(j["message"], "gamma out of [0,2)");
    EXPECT_EQ(j["error"], "invalid_argument");
    EXPECT_NE(r.err.find("hint:"), std::string::npos);
}

TEST(Cli, RejectsUnknownFlagsKeysAndTypes) {
    EXPECT_EQ(run({"mixing", "--colour", "red"}).status, cli::kExitError);
    EXPECT_EQ(run({"nosuchcommand"}).status, cli::kExitError);
    const auto bad = run({"mixing", "--gamma", "half"});
    EXPECT_EQ(bad.status, cli::kExitError);
    EXPECT_EQ(json::parse(bad.err.substr(0, bad.err.find('\n')))["error"], "type");
    EXPECT_THROW(cli::parse_config({"mixing", "--replicas", "-3"}), Error);
    EXPECT_THROW(cli::parse_config({"mixing", "--replicas", "1"}), InvalidArgument);
    EXPECT_THROW(cli::parse_config({"frozen", "--gamma", "1.0"}), InvalidArgument);
    EXPECT_THROW(cli::parse_config({"mixing", "--quad", "0,2,0,1"}), InvalidArgument);

    const auto path = temp_path("unknown.json");
    std::ofstream(path) << R"({"gamma": 0.3, "colour": "red"})";
    try {
        cli::parse_config({"mixing", "--config", path.string()});
        FAIL() << "unknown key accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "unknown_key");
    }
    std::ofstream(path) << R"({"gamma": "big"})";
    EXPECT_THROW(cli::parse_config({"mixing", "--config", path.string()}), Error);
    std::filesystem::remove(path);
}

TEST(Cli, FlagsOverrideConfigFile) {
    const auto path = temp_path("cfg.json");
    std::ofstream(path) << R"({"gamma": 0.3, "replicas": 50, "C": "inf", "etas": [0.1]})";
    EXPECT_THROW(cli::parse_config({"mixing", "--config", path.string()}), Error);  // etas is not a mixing key
    std::ofstream(path) << R"({"gamma": 0.3, "replicas": 50, "C": 4})";
    const auto cfg = cli::parse_config({"mixing", "--config", path.string(), "--gamma", "0.6"});
    EXPECT_DOUBLE_EQ(cfg.params["gamma"].get<double>(), 0.6);
    EXPECT_EQ(cfg.params["replicas"].get<int>(), 50);
    EXPECT_DOUBLE_EQ(cfg.params["C"].get<double>(), 4.0);
    std::filesystem::remove(path);
}

TEST(Cli, RegimeAtCentralChargeZero) {
    const auto r = run({"regime", "--gamma", "0.40824829"});
    EXPECT_EQ(r.status, cli::kExitOk);
    std::istringstream is(r.out);
    std::string header, row;
    std::getline(is, header);
    std::getline(is, row);
    EXPECT_EQ(header, "gamma,d,regime,Q,c,stable_threshold,frozen_threshold");
    std::vector<std::string> cells;
    std::stringstream ss(row);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    ASSERT_EQ(cells.size(), 7u);
    EXPECT_EQ(cells[2], "STABLE");
    EXPECT_NEAR(std::stod(cells[4]), 0.0, 1e-6);
    EXPECT_EQ(run({"regime"}).status, cli::kExitError);
}

TEST(Cli, SpectrumMaj3) {
    const auto r = run({"spectrum", "--function", "maj3"});
    EXPECT_EQ(r.status, cli::kExitOk);
    EXPECT_EQ(r.out, "mask,weight\n1,0.25\n2,0.25\n4,0.25\n7,0.25\n");
}

TEST(Cli, OutputFileAndManifestAreReproducible) {
    const auto a = temp_path("a.csv"), b = temp_path("b.csv");
    const std::vector<std::string> base{"gmc", "--eta", "0.0625", "--gamma", "0.7", "--seed", "9"};
    auto args_a = base, args_b = base;
    args_a.insert(args_a.end(), {"--out", a.string()});
    args_b.insert(args_b.end(), {"--out", b.string()});
    ASSERT_EQ(run(args_a).status, cli::kExitOk);
    ASSERT_EQ(run(args_b).status, cli::kExitOk);
    EXPECT_EQ(slurp(a), slurp(b));
    EXPECT_EQ(slurp(a).rfind("site_index,x,y,mass\n", 0), 0u);
    const auto manifest = json::parse(slurp(a.string() + ".manifest.json"));
    EXPECT_EQ(manifest["command"], "gmc");
    EXPECT_EQ(manifest["params"]["seed"], 9);
    EXPECT_DOUBLE_EQ(manifest["params"]["gamma"].get<double>(), 0.7);
    EXPECT_TRUE(manifest.contains("git_describe"));
    EXPECT_TRUE(manifest.contains("wall_seconds"));
    EXPECT_EQ(manifest["regime"], "INTERMEDIATE");
    // Same CSV on standard output when --out is missing.
    EXPECT_EQ(run(base).out, slurp(a));
    for (const auto& p : {a, b}) {
        std::filesystem::remove(p);
        std::filesystem::remove(p.string() + ".manifest.json");
    }
}

TEST(Cli, SwitchCheckAndSimulate) {
    const auto sc = run({"switchcheck", "--replicas", "2000", "--seed", "3"});
    EXPECT_EQ(sc.status, cli::kExitOk) << sc.err;
    EXPECT_EQ(sc.out.rfind("observed_mean,observed_se,predicted,predicted_se,predicted_exact,z,n\n", 0), 0u);

    const auto sim = run({"simulate", "--eta", "0.0625", "--alpha4", "0.1", "--tmax", "2", "--times", "0,1,2"});
    EXPECT_EQ(sim.status, cli::kExitOk) << sim.err;
    EXPECT_EQ(sim.out.rfind("sample_time,quad_id,crossed\n0,0,", 0), 0u);
    EXPECT_EQ(run({"simulate", "--eta", "0.0625", "--alpha4", "0.1", "--tmax", "2", "--times", "0,3"}).status,
              cli::kExitError);
}

TEST(Cli, HelpExitsCleanly) {
    const auto r = run({"mixing", "--help"});
    EXPECT_EQ(r.status, cli::kExitOk);
    EXPECT_NE(r.out.find("--gamma"), std::string::npos);
}
