#include "shelab/harness.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <openssl/evp.h>

#include "shelab/corrector.hpp"

#ifndef SHELAB_VERSION
#define SHELAB_VERSION "0.0.0"
#endif

namespace shelab {

std::string code_version() { return SHELAB_VERSION; }

std::string to_string(Stage s) {
    switch (s) {
        case Stage::sample: return "sample";
        case Stage::simulate: return "simulate";
        case Stage::estimate: return "estimate";
        case Stage::test: return "test";
    }
    return "?";
}

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string label(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

Stage parse_stage(const std::string& s) {
    for (Stage st : {Stage::sample, Stage::simulate, Stage::estimate, Stage::test})
        if (to_string(st) == s) return st;
    throw ConfigError("unknown stage '" + s + "' (expected sample, simulate, estimate or test)");
}

// ---- TOML-subset values ----------------------------------------------------

struct Value {
    enum Type { number, string, boolean, array } type = number;
    std::string text;  ///< raw token for numbers, contents for strings
    bool flag = false;
    std::vector<Value> items;
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

Value parse_scalar(const std::string& tok) {
    Value v;
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"') {
        v.type = Value::string;
        for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
            if (tok[i] == '\\' && i + 2 < tok.size()) ++i;
            v.text += tok[i];
        }
        return v;
    }
    if (tok == "true" || tok == "false") {
        v.type = Value::boolean;
        v.flag = tok == "true";
        return v;
    }
    char* end = nullptr;
    std::strtod(tok.c_str(), &end);
    if (tok.empty() || end != tok.c_str() + tok.size()) throw ConfigError("cannot parse value '" + tok + "'");
    v.text = tok;
    return v;
}

Value parse_value(const std::string& raw) {
    if (raw.empty()) throw ConfigError("missing value");
    if (raw.front() != '[') return parse_scalar(raw);
    if (raw.back() != ']') throw ConfigError("unterminated array");
    Value v;
    v.type = Value::array;
    const std::string body = trim(raw.substr(1, raw.size() - 2));
    if (body.empty()) return v;
    std::string cur;
    bool quoted = false;
    for (char c : body + ",") {
        if (c == '"') quoted = !quoted;
        if (c == ',' && !quoted) {
            const std::string t = trim(cur);
            if (t.empty()) throw ConfigError("empty array element");
            v.items.push_back(parse_scalar(t));
            cur.clear();
        } else {
            cur += c;
        }
    }
    return v;
}

double as_double(const Value& v) {
    if (v.type != Value::number) throw ConfigError("expected a number");
    const double x = std::strtod(v.text.c_str(), nullptr);
    if (!std::isfinite(x)) throw ConfigError("value must be finite");
    return x;
}

long as_long(const Value& v) {
    const double x = as_double(v);
    if (x != std::floor(x) || std::abs(x) > 2e9) throw ConfigError("expected an integer, got '" + v.text + "'");
    return static_cast<long>(x);
}

std::string as_string(const Value& v) {
    if (v.type != Value::string) throw ConfigError("expected a quoted string");
    return v.text;
}

const std::vector<Value>& as_array(const Value& v) {
    if (v.type != Value::array) throw ConfigError("expected an array");
    return v.items;
}

std::vector<double> as_doubles(const Value& v) {
    std::vector<double> out;
    for (const auto& x : as_array(v)) out.push_back(as_double(x));
    return out;
}

std::vector<int> as_ints(const Value& v) {
    std::vector<int> out;
    for (const auto& x : as_array(v)) out.push_back(static_cast<int>(as_long(x)));
    return out;
}

std::uint64_t parse_u64(const std::string& text) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("seed must be a non-negative integer, got '" + text + "'");
    errno = 0;
    const unsigned long long s = std::strtoull(text.c_str(), nullptr, 10);
    if (errno == ERANGE) throw ConfigError("seed out of range: '" + text + "'");
    return s;
}

using Setter = std::function<void(ExperimentConfig&, const Value&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"potential", [](auto& c, const Value& v) { c.potential = as_string(v); }},
        {"amplitude", [](auto& c, const Value& v) { c.amplitude = as_double(v); }},
        {"phase", [](auto& c, const Value& v) { c.phase = as_string(v); }},
        {"modes", [](auto& c, const Value& v) { c.modes = static_cast<int>(as_long(v)); }},
        {"grid_intervals", [](auto& c, const Value& v) { c.grid_intervals = static_cast<int>(as_long(v)); }},
        {"dt", [](auto& c, const Value& v) { c.dt = as_double(v); }},
        {"record_interval", [](auto& c, const Value& v) { c.record_interval = as_double(v); }},
        {"replicas", [](auto& c, const Value& v) { c.replicas = static_cast<int>(as_long(v)); }},
        {"trajectory_replicas",
         [](auto& c, const Value& v) { c.trajectory_replicas = static_cast<int>(as_long(v)); }},
        {"sigma2_window", [](auto& c, const Value& v) { c.sigma2_window = as_doubles(v); }},
        {"clt_time", [](auto& c, const Value& v) { c.clt_time = as_double(v); }},
        {"epsilons", [](auto& c, const Value& v) { c.epsilons = as_doubles(v); }},
        {"macro_horizon", [](auto& c, const Value& v) { c.macro_horizon = as_double(v); }},
        {"ip_times", [](auto& c, const Value& v) { c.ip_times = as_doubles(v); }},
        {"decay_modes", [](auto& c, const Value& v) { c.decay_modes = as_ints(v); }},
        {"lambda_grid", [](auto& c, const Value& v) { c.lambda_grid = as_doubles(v); }},
        {"corrector_truncation",
         [](auto& c, const Value& v) { c.corrector_truncation = static_cast<int>(as_long(v)); }},
        {"theta_points", [](auto& c, const Value& v) { c.theta_points = static_cast<int>(as_long(v)); }},
        {"gaussian_points", [](auto& c, const Value& v) { c.gaussian_points = static_cast<int>(as_long(v)); }},
        {"level", [](auto& c, const Value& v) { c.level = as_double(v); }},
        {"bootstrap", [](auto& c, const Value& v) { c.bootstrap = static_cast<int>(as_long(v)); }},
        {"seed",
         [](auto& c, const Value& v) {
             if (v.type != Value::number) throw ConfigError("expected an integer seed");
             c.seed = parse_u64(v.text);
         }},
        {"workers", [](auto& c, const Value& v) { c.workers = static_cast<int>(as_long(v)); }},
        {"output_dir", [](auto& c, const Value& v) { c.output_dir = as_string(v); }},
        {"stop_after", [](auto& c, const Value& v) { c.stop_after = parse_stage(as_string(v)); }},
    };
    return table;
}

bool on_grid(double t, double interval) {
    const double r = t / interval;
    return std::abs(r - std::round(r)) <= 1e-9 * std::max(1.0, r);
}

std::string list(const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
    return s + "]";
}

std::string list(const std::vector<int>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + std::to_string(v[i]);
    return s + "]";
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

std::vector<GibbsSample> draw_samples(const ExperimentConfig& cfg) {
    const SpectralBasis basis(cfg.modes, cfg.grid_intervals);
    return sample_pi_ensemble(cfg.potential_spec(), basis, cfg.replicas, cfg.seed, cfg.workers);
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

// ---- configuration ---------------------------------------------------------

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& source) {
    ExperimentConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno) + ": ";
        if (body.front() == '[') throw ConfigError(where + "tables are not supported; use flat key = value lines");
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
        const std::string key = trim(body.substr(0, eq));
        const auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
        try {
            it->second(cfg, parse_value(trim(body.substr(eq + 1))));
        } catch (const ConfigError& e) {
            throw ConfigError(where + key + ": " + e.what());
        }
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void ExperimentConfig::validate() const {
    try {
        parse_potential_kind(potential);
        parse_phase_profile(phase);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (!std::isfinite(amplitude)) throw ConfigError("amplitude must be finite");
    if (modes < 0) throw ConfigError("modes must be non-negative");
    if (grid_intervals < std::max(1, 2 * modes))
        throw ConfigError("grid_intervals = " + std::to_string(grid_intervals) + " is below 2 * modes = " +
                          std::to_string(2 * modes) + " (aliasing)");
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(record_interval > 0.0) || !on_grid(record_interval, dt))
        throw ConfigError("record_interval must be a positive multiple of dt");
    if (replicas < 2) throw ConfigError("replicas must be at least 2");
    if (trajectory_replicas < 0 || trajectory_replicas > replicas)
        throw ConfigError("trajectory_replicas must lie in [0, replicas]");
    if (sigma2_window.size() != 2 || !(sigma2_window[0] >= 0.0) || !(sigma2_window[1] > sigma2_window[0]))
        throw ConfigError("sigma2_window must be [t_a, t_b] with 0 <= t_a < t_b");
    if (epsilons.empty()) throw ConfigError("epsilons must not be empty");
    for (double e : epsilons)
        if (!(e > 0.0)) throw ConfigError("epsilons must be positive");
    if (!(macro_horizon > 0.0)) throw ConfigError("macro_horizon must be positive");
    if (ip_times.size() < 3) throw ConfigError("ip_times needs at least three times");
    for (std::size_t k = 0; k < ip_times.size(); ++k)
        if (!(ip_times[k] > (k ? ip_times[k - 1] : 0.0)) || ip_times[k] > macro_horizon)
            throw ConfigError("ip_times must increase within (0, macro_horizon]");
    for (int j : decay_modes)
        if (j < 1 || j > modes) throw ConfigError("decay_modes must lie in 1..modes");
    if (!(clt_time > 0.0)) throw ConfigError("clt_time must be positive");
    if (lambda_grid.size() < 2) throw ConfigError("lambda_grid needs at least two values");
    for (double l : lambda_grid)
        if (!(l > 0.0)) throw ConfigError("lambda_grid values must be positive");
    if (corrector_truncation < 0 || corrector_truncation > 2) throw ConfigError("corrector_truncation must be 0, 1 or 2");
    if (theta_points < 4) throw ConfigError("theta_points must be at least 4");
    if (gaussian_points < 4 || gaussian_points % 2 != 0)
        throw ConfigError("gaussian_points must be even and at least 4");
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("level must lie in (0, 1)");
    if (bootstrap < 2) throw ConfigError("bootstrap must be at least 2");
    if (workers < 0) throw ConfigError("workers must be non-negative");

    std::vector<std::pair<std::string, double>> needed = {{"sigma2_window start", sigma2_window[0]},
                                                          {"sigma2_window end", sigma2_window[1]},
                                                          {"clt_time", clt_time}};
    for (double e : epsilons) {
        needed.emplace_back("macro_horizon / eps^2", macro_horizon / (e * e));
        for (double t : ip_times) needed.emplace_back("ip time / eps^2", t / (e * e));
    }
    for (const auto& [what, t] : needed)
        if (!on_grid(t, record_interval))
            throw ConfigError(what + " = " + num(t) + " is not a multiple of record_interval = " + num(record_interval));
    const double first = std::ceil(sigma2_window[0] / record_interval - 1e-9);
    const double last = std::floor(sigma2_window[1] / record_interval + 1e-9);
    if (last - first + 1.0 < 10.0) throw ConfigError("sigma2_window holds fewer than 10 records");
    try {
        sim_config().validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

nlohmann::json ExperimentConfig::to_json() const {
    return {{"potential", potential},
            {"amplitude", amplitude},
            {"phase", phase},
            {"modes", modes},
            {"grid_intervals", grid_intervals},
            {"dt", dt},
            {"record_interval", record_interval},
            {"replicas", replicas},
            {"trajectory_replicas", trajectory_replicas},
            {"sigma2_window", sigma2_window},
            {"clt_time", clt_time},
            {"epsilons", epsilons},
            {"macro_horizon", macro_horizon},
            {"ip_times", ip_times},
            {"decay_modes", decay_modes},
            {"lambda_grid", lambda_grid},
            {"corrector_truncation", corrector_truncation},
            {"theta_points", theta_points},
            {"gaussian_points", gaussian_points},
            {"level", level},
            {"bootstrap", bootstrap},
            {"seed", seed},
            {"stop_after", to_string(stop_after)}};
}

std::string ExperimentConfig::canonical() const {
    std::map<std::string, std::string> kv = {
        {"potential", quote(potential)},
        {"amplitude", num(amplitude)},
        {"phase", quote(phase)},
        {"modes", std::to_string(modes)},
        {"grid_intervals", std::to_string(grid_intervals)},
        {"dt", num(dt)},
        {"record_interval", num(record_interval)},
        {"replicas", std::to_string(replicas)},
        {"trajectory_replicas", std::to_string(trajectory_replicas)},
        {"sigma2_window", list(sigma2_window)},
        {"clt_time", num(clt_time)},
        {"epsilons", list(epsilons)},
        {"macro_horizon", num(macro_horizon)},
        {"ip_times", list(ip_times)},
        {"decay_modes", list(decay_modes)},
        {"lambda_grid", list(lambda_grid)},
        {"corrector_truncation", std::to_string(corrector_truncation)},
        {"theta_points", std::to_string(theta_points)},
        {"gaussian_points", std::to_string(gaussian_points)},
        {"level", num(level)},
        {"bootstrap", std::to_string(bootstrap)},
        {"seed", std::to_string(seed)},
        {"stop_after", quote(to_string(stop_after))},
    };
    std::string out;
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    return out;
}

std::string ExperimentConfig::hash() const { return sha256_hex(canonical()); }

PotentialSpec ExperimentConfig::potential_spec() const {
    if (parse_potential_kind(potential) == PotentialKind::zero) return make_zero_potential();
    return make_sine_gordon(amplitude, parse_phase_profile(phase));
}

double ExperimentConfig::horizon() const {
    const double eps_min = *std::min_element(epsilons.begin(), epsilons.end());
    return std::max({sigma2_window[1], clt_time, macro_horizon / (eps_min * eps_min)});
}

SimConfig ExperimentConfig::sim_config() const {
    SimConfig s;
    s.modes = modes;
    s.grid_intervals = grid_intervals;
    s.dt = dt;
    s.horizon = horizon();
    s.record_stride = static_cast<int>(std::lround(record_interval / dt));
    s.seed = seed;
    s.workers = workers;
    return s;
}

void apply_seed_override(ExperimentConfig& cfg) {
    const char* env = std::getenv("SHELAB_SEED");
    if (env == nullptr) return;
    try {
        cfg.seed = parse_u64(trim(env));
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("SHELAB_SEED: ") + e.what());
    }
}

// ---- pipeline ----------------------------------------------------------------

SuiteResult run_suite(const ExperimentConfig& cfg, const std::vector<GibbsSample>* samples) {
    cfg.validate();
    SuiteResult out;
    const std::string hash = cfg.hash();
    const PotentialSpec spec = cfg.potential_spec();
    out.samples = samples ? *samples : draw_samples(cfg);
    if (static_cast<int>(out.samples.size()) != cfg.replicas)
        throw std::invalid_argument("initial sample count does not match replicas");

    auto& rep = out.report;
    rep["schema_version"] = kReportSchemaVersion;
    rep["code_version"] = code_version();
    rep["config_hash"] = hash;
    rep["seed"] = cfg.seed;
    rep["config"] = cfg.to_json();
    rep["stop_after"] = to_string(cfg.stop_after);
    rep["estimates"] = nlohmann::json::object();
    rep["values"] = nlohmann::json::object();
    std::vector<TestReport> tests;
    auto put_estimate = [&](const std::string& key, const Estimate& e) {
        rep["estimates"][key] = {{"value", e.value}, {"std_error", e.std_error}, {"n", e.n}};
    };

    long proposals = 0;
    for (const auto& s : out.samples) proposals += s.proposal_count;
    const double acceptance = static_cast<double>(out.samples.size()) / static_cast<double>(proposals);
    rep["values"]["gibbs_acceptance"] = acceptance;
    {
        TestReport t;
        t.test = "gibbs_acceptance";
        t.checks.push_back(make_check("acceptance_rate", acceptance, ">=", std::exp(-4.0 * spec.sup_abs_V()),
                                      static_cast<long>(out.samples.size())));
        tests.push_back(t);
    }

    auto finish = [&]() {
        out.pass = true;
        rep["tests"] = nlohmann::json::array();
        for (auto& t : tests) {
            t.seed = cfg.seed;
            t.config_hash = hash;
            out.pass = out.pass && t.pass();
            rep["tests"].push_back(t.to_json());
        }
        rep["pass"] = out.pass;
        return out;
    };
    if (cfg.stop_after == Stage::sample) return finish();

    std::vector<SpectralField> initial;
    initial.reserve(out.samples.size());
    for (const auto& s : out.samples) initial.push_back(s.field);
    out.ensemble = simulate_ensemble(cfg.sim_config(), initial, spec);
    const EnsembleRecord& ens = *out.ensemble;
    if (cfg.stop_after == Stage::simulate) return finish();

    const Estimate sigma2 = estimate_sigma2_direct(ens, cfg.sigma2_window[0], cfg.sigma2_window[1], cfg.bootstrap,
                                                   cfg.seed);
    put_estimate("sigma2_direct", sigma2);

    GeneratorGrid grid;
    grid.truncation = cfg.corrector_truncation;
    grid.theta_points = cfg.theta_points;
    grid.gaussian_points = cfg.gaussian_points;
    grid.grid_intervals = cfg.grid_intervals;
    const TruncatedGenerator gen(spec, grid);
    std::vector<CorrectorSolution> sols;
    TestReport corr;
    corr.test = "corrector";
    for (double lambda : cfg.lambda_grid) {
        sols.push_back(solve_resolvent(gen, lambda));
        const auto& s = sols.back();
        const std::string tag = "lambda=" + label(lambda);
        rep["values"]["sigma2_lambda_" + tag] = s.sigma2_lambda;
        corr.checks.push_back(make_check("energy_bound_slack_" + tag, s.dirichlet_energy - s.drift_inner, "<=",
                                         1e-10 * std::max(1.0, std::abs(s.drift_inner)), gen.nodes()));
        corr.checks.push_back(make_check("dirichlet_identity_gap_" + tag, s.dirichlet_identity_gap, "<=",
                                         1e-10 * std::max(1.0, s.dirichlet_energy), gen.nodes()));
    }
    const Extrapolation ex = sigma2_extrapolate(sols);
    rep["values"]["sigma2_corrector"] = ex.extrapolant;
    rep["values"]["sigma2_corrector_error"] = ex.error_estimate;
    const OracleResult oracle = oracle_1d(spec);
    rep["values"]["sigma2_oracle_1d"] = oracle.sigma2;
    std::vector<SpectralField> fields(initial);
    for (auto& f : fields) f = f.quotient_representative();
    const Estimate bound = variational_bound(one_dimensional_ansatz(oracle), fields);
    put_estimate("variational_bound", bound);
    tests.push_back(corr);
    if (cfg.stop_after == Stage::estimate) return finish();

    {
        TestReport t = clt_test(ens, cfg.clt_time, sigma2.value, cfg.level);
        tests.push_back(t);
    }
    {
        TestReport t;
        t.test = "sigma2_consistency";
        const double joint = std::hypot(sigma2.std_error, bound.std_error);
        t.checks.push_back(make_check("sigma2_positive", sigma2.value, ">", 0.0, sigma2.n));
        t.checks.push_back(make_check("sigma2_at_most_one", sigma2.value, "<=", 1.0 + 3.0 * sigma2.std_error, sigma2.n));
        t.checks.push_back(
            make_check("sigma2_below_variational_bound", sigma2.value, "<=", bound.value + 3.0 * joint, sigma2.n));
        tests.push_back(t);
    }
    if (cfg.epsilons.size() >= 2 && !cfg.decay_modes.empty()) {
        ModeDecayOptions opt;
        opt.epsilons = cfg.epsilons;
        opt.horizon = cfg.macro_horizon;
        opt.modes = cfg.decay_modes;
        tests.push_back(mode_decay_test(ens, opt));
    }
    for (double eps : cfg.epsilons) {
        ScalingParams sp{eps, cfg.macro_horizon, cfg.ip_times};
        IpOptions opt;
        opt.level = cfg.level;
        TestReport t = ip_test(ens, sp, sigma2.value, opt);
        t.test += "_eps=" + label(eps);
        tests.push_back(t);
    }
    return finish();
}

// ---- artifacts ---------------------------------------------------------------

void write_samples_csv(const std::filesystem::path& path, const std::vector<GibbsSample>& samples) {
    std::string s = "replica";
    const int modes = samples.empty() ? 0 : samples.front().field.modes();
    for (int j = 0; j <= modes; ++j) s += ",a_" + std::to_string(j);
    s += ",log_weight,proposals\n";
    for (std::size_t r = 0; r < samples.size(); ++r) {
        s += std::to_string(r);
        for (int j = 0; j <= modes; ++j) s += "," + num(samples[r].field[j]);
        s += "," + num(samples[r].log_weight) + "," + std::to_string(samples[r].proposal_count) + "\n";
    }
    write_file(path, s);
}

std::vector<GibbsSample> read_samples_csv(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty sample file");
    const long columns = std::count(line.begin(), line.end(), ',') + 1;
    const int modes = static_cast<int>(columns) - 4;
    if (modes < 0) throw std::runtime_error(path.string() + ": malformed header");
    std::vector<GibbsSample> out;
    long lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (static_cast<long>(cells.size()) != columns)
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": wrong column count");
        GibbsSample s;
        s.field = SpectralField(modes);
        for (int j = 0; j <= modes; ++j) s.field[j] = std::strtod(cells[1 + j].c_str(), nullptr);
        s.log_weight = std::strtod(cells[2 + modes].c_str(), nullptr);
        s.proposal_count = std::strtol(cells[3 + modes].c_str(), nullptr, 10);
        s.accepted = true;
        out.push_back(std::move(s));
    }
    return out;
}

void write_trajectories_csv(const std::filesystem::path& path, const EnsembleRecord& ens, int replicas) {
    std::string s = "replica,time";
    for (int j = 0; j <= ens.modes(); ++j) s += ",a_" + std::to_string(j);
    s += ",drift_integral,noise_0\n";
    const int n = std::min(replicas, ens.replicas());
    for (int r = 0; r < n; ++r)
        for (long rec = 0; rec < ens.records(); ++rec) {
            s += std::to_string(r) + "," + num(ens.times()[rec]);
            for (int j = 0; j <= ens.modes(); ++j) s += "," + num(ens.coeff(rec, r, j));
            s += "," + num(ens.drift(rec, r)) + "," + num(ens.noise(rec, r)) + "\n";
        }
    write_file(path, s);
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("SHA-256 digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

std::string sha256_file(const std::filesystem::path& path) { return sha256_hex(read_file(path)); }

ExperimentOutcome run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    namespace fs = std::filesystem;
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    const fs::path manifest_path = dir / "manifest.json";
    const std::string hash = cfg.hash();
    ExperimentOutcome outcome;

    nlohmann::json previous;
    if (fs::exists(manifest_path)) {
        try {
            previous = nlohmann::json::parse(read_file(manifest_path));
        } catch (const nlohmann::json::exception&) {
            previous = nullptr;  // unreadable manifest: start over
        }
    }
    auto intact = [&](const nlohmann::json& art) {
        const fs::path p = dir / art.at("name").get<std::string>();
        return fs::exists(p) && sha256_file(p) == art.at("sha256").get<std::string>();
    };
    const bool same = previous.is_object() && previous.value("config_hash", "") == hash &&
                      previous.value("code_version", "") == code_version();
    if (same && previous.value("complete", false)) {
        bool all = true;
        for (const auto& art : previous["artifacts"]) all = all && intact(art);
        if (all) {
            outcome.manifest = previous;
            outcome.pass = previous.value("pass", false);
            outcome.reused = {"sample", "simulate", "estimate", "test"};
            return outcome;
        }
    }

    auto manifest = [&](const std::vector<std::string>& names, bool complete, bool pass) {
        nlohmann::json m;
        m["schema_version"] = kReportSchemaVersion;
        m["code_version"] = code_version();
        m["config_hash"] = hash;
        m["seed"] = cfg.seed;
        m["complete"] = complete;
        m["pass"] = pass;
        m["artifacts"] = nlohmann::json::array();
        for (const auto& n : names)
            m["artifacts"].push_back(
                {{"name", n}, {"sha256", sha256_file(dir / n)}, {"bytes", fs::file_size(dir / n)}});
        write_file(manifest_path, dump_json(m));
        return m;
    };

    std::vector<GibbsSample> samples;
    bool reused_samples = false;
    if (same)
        for (const auto& art : previous["artifacts"])
            if (art.value("name", "") == "samples.csv" && intact(art)) {
                samples = read_samples_csv(dir / "samples.csv");
                reused_samples = static_cast<int>(samples.size()) == cfg.replicas &&
                                 samples.front().field.modes() == cfg.modes;
            }
    if (reused_samples) {
        outcome.reused.push_back("sample");
    } else {
        samples = draw_samples(cfg);
        write_samples_csv(dir / "samples.csv", samples);
        manifest({"samples.csv"}, false, false);
    }

    SuiteResult res = run_suite(cfg, &samples);
    std::vector<std::string> names{"samples.csv"};
    if (res.ensemble) {
        write_trajectories_csv(dir / "trajectories.csv", *res.ensemble, cfg.trajectory_replicas);
        names.push_back("trajectories.csv");
    }
    write_file(dir / "report.json", dump_json(res.report));
    names.push_back("report.json");
    std::sort(names.begin(), names.end());
    outcome.manifest = manifest(names, true, res.pass);
    outcome.pass = res.pass;
    return outcome;
}

// ---- report comparison ----------------------------------------------------------

namespace {

void collect_estimates(const nlohmann::json& j, const std::string& prefix, std::map<std::string, nlohmann::json>& out) {
    if (j.contains("estimates") && j["estimates"].is_object())
        for (const auto& [k, v] : j["estimates"].items()) out[prefix + k] = v;
    if (j.contains("tests") && j["tests"].is_array())
        for (const auto& t : j["tests"]) collect_estimates(t, prefix + t.value("test", "?") + "/", out);
}

}  // namespace

nlohmann::json compare_reports(const nlohmann::json& a, const nlohmann::json& b) {
    if (!a.contains("schema_version") || !b.contains("schema_version"))
        throw std::invalid_argument("report without schema_version");
    if (a["schema_version"] != b["schema_version"])
        throw std::invalid_argument("schema mismatch: " + a["schema_version"].dump() + " vs " +
                                    b["schema_version"].dump());
    std::map<std::string, nlohmann::json> ea, eb;
    collect_estimates(a, "", ea);
    collect_estimates(b, "", eb);

    nlohmann::json out;
    out["schema_version"] = a["schema_version"];
    out["config_hash_a"] = a.value("config_hash", "");
    out["config_hash_b"] = b.value("config_hash", "");
    out["differences"] = nlohmann::json::array();
    out["only_in_a"] = nlohmann::json::array();
    out["only_in_b"] = nlohmann::json::array();
    int significant = 0;
    for (const auto& [k, va] : ea) {
        const auto it = eb.find(k);
        if (it == eb.end()) {
            out["only_in_a"].push_back(k);
            continue;
        }
        const auto& vb = it->second;
        if (va == vb) continue;
        const double xa = va.value("value", 0.0), xb = vb.value("value", 0.0);
        const double combined = std::hypot(va.value("std_error", 0.0), vb.value("std_error", 0.0));
        const double diff = xb - xa;
        const double z = combined > 0.0 ? std::abs(diff) / combined : (diff == 0.0 ? 0.0 : HUGE_VAL);
        const bool sig = z > 3.0;
        significant += sig;
        out["differences"].push_back({{"estimate", k},
                                      {"a", xa},
                                      {"b", xb},
                                      {"difference", diff},
                                      {"combined_std_error", combined},
                                      {"z", std::isfinite(z) ? nlohmann::json(z) : nlohmann::json("inf")},
                                      {"flag", sig ? "significant" : "consistent"}});
    }
    for (const auto& [k, v] : eb)
        if (!ea.count(k)) out["only_in_b"].push_back(k);
    out["significant"] = significant;
    out["identical"] = out["differences"].empty() && out["only_in_a"].empty() && out["only_in_b"].empty();
    return out;
}

}  // namespace shelab
