#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shelab/gibbs.hpp"
#include "shelab/integrator.hpp"
#include "shelab/verification.hpp"

namespace shelab {

inline constexpr int kReportSchemaVersion = 1;
std::string code_version();

/// Raised for malformed or invalid configuration; what() carries "source:line: message"
/// when the problem is tied to a line.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

enum class Stage { sample = 0, simulate = 1, estimate = 2, test = 3 };
std::string to_string(Stage s);

/// Flat key = value experiment description (a TOML subset: strings, numbers,
/// booleans and one-line arrays; '#' comments).
struct ExperimentConfig {
    std::string potential = "sine_gordon";
    double amplitude = 0.5;
    std::string phase = "flat";
    int modes = 32;
    int grid_intervals = 128;
    double dt = 1e-3;
    double record_interval = 1.25;
    int replicas = 1000;
    int trajectory_replicas = 100;
    std::vector<double> sigma2_window{20.0, 100.0};
    double clt_time = 100.0;
    std::vector<double> epsilons{0.2, 0.1};
    double macro_horizon = 1.0;
    std::vector<double> ip_times{0.25, 0.5, 0.75, 1.0};
    std::vector<int> decay_modes{1, 2, 3, 4};
    std::vector<double> lambda_grid{1e-1, 1e-2, 1e-3};
    int corrector_truncation = 0;
    int theta_points = 512;
    int gaussian_points = 48;
    double level = 0.01;
    int bootstrap = 200;
    std::uint64_t seed = 1;
    /// Not part of the hash: results do not depend on it.
    int workers = 0;
    /// Not part of the hash.
    std::string output_dir = "shelab_out";
    Stage stop_after = Stage::test;

    /// Parses config text; unknown keys, duplicates and bad values raise ConfigError
    /// with the offending line. The result is validated.
    static ExperimentConfig parse(const std::string& text, const std::string& source = "<config>");
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Throws ConfigError on inconsistent settings (N_x < 2J, times off the record grid, ...).
    void validate() const;
    /// Canonical serialization of every hashed key, sorted by name.
    std::string canonical() const;
    /// SHA-256 of canonical(), hex encoded.
    std::string hash() const;
    nlohmann::json to_json() const;

    PotentialSpec potential_spec() const;
    SimConfig sim_config() const;
    /// Microscopic horizon covering the sigma^2 window, the CLT time and T / eps_min^2.
    double horizon() const;
};

/// Replaces cfg.seed with $SHELAB_SEED when it is set; a malformed value raises ConfigError.
void apply_seed_override(ExperimentConfig& cfg);

/// Everything the pipeline produced, kept in memory for callers that want more
/// than the report.
struct SuiteResult {
    std::vector<GibbsSample> samples;
    std::optional<EnsembleRecord> ensemble;
    nlohmann::json report;
    bool pass = true;
};

/// Runs sample -> simulate -> estimate -> test up to cfg.stop_after. When
/// `samples` is given the sample stage is skipped and those initial states used.
SuiteResult run_suite(const ExperimentConfig& cfg, const std::vector<GibbsSample>* samples = nullptr);

/// CSV with one row per replica: replica, a_0..a_J, log_weight, proposals (%.17g).
void write_samples_csv(const std::filesystem::path& path, const std::vector<GibbsSample>& samples);
std::vector<GibbsSample> read_samples_csv(const std::filesystem::path& path);
/// CSV rows: replica, time, a_0..a_J, drift_integral, noise_0 for the first `replicas` replicas.
void write_trajectories_csv(const std::filesystem::path& path, const EnsembleRecord& ens, int replicas);
/// Deterministic JSON text (sorted keys, two-space indent, trailing newline).
std::string dump_json(const nlohmann::json& j);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct ExperimentOutcome {
    nlohmann::json manifest;
    bool pass = true;
    /// Stages taken from a previous run rather than recomputed.
    std::vector<std::string> reused;
};

/// Runs the pipeline into cfg.output_dir, writing samples.csv, trajectories.csv,
/// report.json (as far as the pipeline goes) and manifest.json listing every
/// artifact with its SHA-256. A directory whose manifest matches the config hash
/// and whose artifacts are intact is returned as is; an intact samples.csv from
/// an interrupted run is reused.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg);

/// Structured diff of the estimates in two reports: each estimate present in both
/// with different values gets a z-score against the combined standard error and
/// a flag, "significant" when |z| > 3 and "consistent" otherwise. Throws
/// std::invalid_argument on a schema-version mismatch.
nlohmann::json compare_reports(const nlohmann::json& a, const nlohmann::json& b);

}  // namespace shelab
