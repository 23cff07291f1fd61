#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "shelab/harness.hpp"

using namespace shelab;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"(# smallest configuration that runs every stage
potential = "zero"
modes = 4
grid_intervals = 8
dt = 1.25
replicas = 100
trajectory_replicas = 3
bootstrap = 20
theta_points = 64
seed = 9
)";

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("shelab_test_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string config_error(const std::string& text) {
    try {
        ExperimentConfig::parse(text, "cfg.toml");
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("config parsing") {
    const auto cfg = ExperimentConfig::parse(kMinimal);
    CHECK(cfg.potential == "zero");
    CHECK(cfg.modes == 4);
    CHECK(cfg.dt == 1.25);
    CHECK(cfg.seed == 9);
    CHECK(cfg.amplitude == 0.5);  // default kept

    const auto arrays = ExperimentConfig::parse("epsilons = [0.5, 0.25]  # comment\nrecord_interval = 0.25\nphase = \"linear\"\nstop_after = \"estimate\"\n");
    CHECK(arrays.epsilons == std::vector<double>{0.5, 0.25});
    CHECK(arrays.phase == "linear");
    CHECK(arrays.stop_after == Stage::estimate);

    CHECK(config_error("modes = 4\nfoo = 1\n") == "cfg.toml:2: unknown key 'foo'");
    CHECK(config_error("seed = 1\nseed = 2\n") == "cfg.toml:2: duplicate key 'seed'");
    CHECK(config_error("[table]\n").rfind("cfg.toml:1:", 0) == 0);
    CHECK(config_error("modes = 4.5\n").rfind("cfg.toml:1:", 0) == 0);
    CHECK(config_error("modes\n").rfind("cfg.toml:1:", 0) == 0);
    CHECK(config_error("potential = zero\n").rfind("cfg.toml:1:", 0) == 0);
    CHECK(config_error("modes = 64\ngrid_intervals = 100\n").find("below 2 * modes") != std::string::npos);
    CHECK_FALSE(config_error("dt = 0.3\n").empty());  // record interval off the step grid
    CHECK_FALSE(config_error("stop_after = \"never\"\n").empty());
}

TEST_CASE("config hash") {
    const auto a = ExperimentConfig::parse(kMinimal);
    auto b = ExperimentConfig::parse(std::string(kMinimal) + "workers = 3\noutput_dir = \"elsewhere\"\n");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash().size() == 64);
    b.seed = 10;
    CHECK(a.hash() != b.hash());
    // key order in the file does not matter
    const auto c = ExperimentConfig::parse("seed = 9\ntheta_points = 64\nbootstrap = 20\ntrajectory_replicas = 3\n"
                                           "replicas = 100\ndt = 1.25\ngrid_intervals = 8\nmodes = 4\npotential = \"zero\"\n");
    CHECK(c.hash() == a.hash());
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("shipped configs") {
    const fs::path dir = fs::path(SHELAB_SOURCE_DIR) / "tools" / "configs";
    CHECK(ExperimentConfig::load(dir / "default.toml").hash() == ExperimentConfig{}.hash());
    CHECK(ExperimentConfig::load(dir / "minimal.toml").hash() == ExperimentConfig::parse(kMinimal).hash());
    CHECK_THROWS_AS(ExperimentConfig::load(dir / "missing.toml"), ConfigError);
}

TEST_CASE("seed override") {
    auto cfg = ExperimentConfig::parse(kMinimal);
    ::setenv("SHELAB_SEED", "1234", 1);
    apply_seed_override(cfg);
    CHECK(cfg.seed == 1234);
    ::setenv("SHELAB_SEED", "12x", 1);
    CHECK_THROWS_AS(apply_seed_override(cfg), ConfigError);
    ::unsetenv("SHELAB_SEED");
    apply_seed_override(cfg);
    CHECK(cfg.seed == 1234);
}

TEST_CASE("sample CSV round trip is exact") {
    auto cfg = ExperimentConfig::parse(kMinimal);
    cfg.potential = "sine_gordon";
    cfg.stop_after = Stage::sample;
    const auto res = run_suite(cfg);
    const auto dir = fresh_dir("csv");
    fs::create_directories(dir);
    write_samples_csv(dir / "s.csv", res.samples);
    const auto back = read_samples_csv(dir / "s.csv");
    REQUIRE(back.size() == res.samples.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].field.coeffs == res.samples[i].field.coeffs);
        CHECK(back[i].log_weight == res.samples[i].log_weight);
        CHECK(back[i].proposal_count == res.samples[i].proposal_count);
    }
    CHECK_FALSE(res.ensemble.has_value());
    CHECK(res.report["tests"].size() == 1);
    fs::remove_all(dir);
}

TEST_CASE("minimal experiment: artifacts, manifest, resume") {
    auto cfg = ExperimentConfig::parse(kMinimal);
    cfg.output_dir = fresh_dir("run").string();
    const auto first = run_experiment(cfg);
    CHECK(first.pass);
    CHECK(first.reused.empty());
    const auto& m = first.manifest;
    CHECK(m["complete"] == true);
    CHECK(m["config_hash"] == cfg.hash());
    REQUIRE(m["artifacts"].size() == 3);
    for (const auto& art : m["artifacts"])
        CHECK(art["sha256"] == sha256_file(fs::path(cfg.output_dir) / art["name"].get<std::string>()));
    const auto report = nlohmann::json::parse(slurp(fs::path(cfg.output_dir) / "report.json"));
    CHECK(report["schema_version"] == kReportSchemaVersion);
    CHECK(report["config_hash"] == cfg.hash());
    for (const auto& t : report["tests"]) {
        CHECK(t.contains("statistic"));
        CHECK(t.contains("threshold"));
        CHECK(t.contains("n"));
        CHECK(t["seed"] == 9);
    }

    const auto again = run_experiment(cfg);
    CHECK(again.reused.size() == 4);

    // interrupted run: samples survive, later artifacts are regenerated identically
    const std::string before = slurp(fs::path(cfg.output_dir) / "report.json");
    fs::remove(fs::path(cfg.output_dir) / "report.json");
    fs::remove(fs::path(cfg.output_dir) / "trajectories.csv");
    cfg.workers = 2;
    const auto resumed = run_experiment(cfg);
    CHECK(resumed.reused == std::vector<std::string>{"sample"});
    CHECK(slurp(fs::path(cfg.output_dir) / "report.json") == before);

    // a corrupted artifact forces recomputation
    std::ofstream(fs::path(cfg.output_dir) / "samples.csv", std::ios::app) << "garbage\n";
    const auto redone = run_experiment(cfg);
    CHECK(redone.reused.empty());
    CHECK(slurp(fs::path(cfg.output_dir) / "report.json") == before);
    fs::remove_all(cfg.output_dir);
}

TEST_CASE("report comparison") {
    nlohmann::json a = {{"schema_version", 1},
                        {"estimates", {{"sigma2_direct", {{"value", 1.0}, {"std_error", 0.01}, {"n", 100}}}}},
                        {"tests", nlohmann::json::array()}};
    auto b = a;
    CHECK(compare_reports(a, b)["identical"] == true);

    b["estimates"]["sigma2_direct"]["value"] = 1.02;
    auto d = compare_reports(a, b);
    CHECK(d["identical"] == false);
    REQUIRE(d["differences"].size() == 1);
    CHECK(d["differences"][0]["flag"] == "consistent");
    CHECK(d["differences"][0]["z"].get<double>() == doctest::Approx(0.02 / std::hypot(0.01, 0.01)));

    b["estimates"]["sigma2_direct"]["value"] = 1.1;
    d = compare_reports(a, b);
    CHECK(d["differences"][0]["flag"] == "significant");
    CHECK(d["significant"] == 1);

    b["tests"].push_back({{"test", "clt"}, {"estimates", {{"scaled_variance", {{"value", 1.0}, {"std_error", 0.1}}}}}});
    d = compare_reports(a, b);
    CHECK(d["only_in_b"] == nlohmann::json::array({"clt/scaled_variance"}));

    b["schema_version"] = 2;
    CHECK_THROWS_AS(compare_reports(a, b), std::invalid_argument);
}

TEST_CASE("deterministic JSON text") {
    nlohmann::json j = {{"b", 1}, {"a", {1.5, 2}}};
    CHECK(dump_json(j) == "{\n  \"a\": [\n    1.5,\n    2\n  ],\n  \"b\": 1\n}\n");
}
