#include "shelab/verification.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace shelab {

namespace {

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return buf;
}

double mean_of_squares(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s / static_cast<double>(v.size());
}

/// Z(t, x) restricted to modes j >= 1.
double fluctuation_at(const EnsembleRecord& ens, long rec, int rep, double x) {
    double z = 0.0;
    for (int j = 1; j <= ens.modes(); ++j) z += ens.coeff(rec, rep, j) * eval_basis(j, x);
    return z;
}

std::vector<double> mean_mode_increments(const EnsembleRecord& ens, long rec, double scale) {
    std::vector<double> out(static_cast<std::size_t>(ens.replicas()));
    for (int r = 0; r < ens.replicas(); ++r) out[r] = scale * (ens.coeff(rec, r, 0) - ens.coeff(0, r, 0));
    return out;
}

double periodic_interp(const Eigen::VectorXd& f, double theta) {
    const int n = static_cast<int>(f.size());
    const double pos = (theta - std::floor(theta)) * n;
    const int k = std::min(n - 1, static_cast<int>(pos));
    const double w = pos - k;
    return (1.0 - w) * f[k] + w * f[(k + 1) % n];
}

}  // namespace

void ScalingParams::validate(double dt) const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    if (!(horizon > 0.0)) throw std::invalid_argument("macroscopic horizon must be positive");
    double prev = 0.0;
    for (double t : times) {
        if (!(t > prev) || t > horizon * (1.0 + 1e-12))
            throw std::invalid_argument("observation times must increase within (0, T]");
        prev = t;
    }
    const double steps = micro_time(horizon) / dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps))
        throw std::invalid_argument("microscopic horizon " + fmt(micro_time(horizon)) +
                                    " is not a whole number of steps of " + fmt(dt));
}

Check make_check(std::string name, double statistic, std::string relation, double threshold, long n,
                 bool mandatory) {
    Check c{std::move(name), statistic, threshold, std::move(relation), false, n, mandatory};
    if (c.relation == "<=") c.pass = statistic <= threshold;
    else if (c.relation == ">=") c.pass = statistic >= threshold;
    else if (c.relation == "<") c.pass = statistic < threshold;
    else if (c.relation == ">") c.pass = statistic > threshold;
    else throw std::invalid_argument("unknown check relation '" + c.relation + "'");
    return c;
}

bool TestReport::pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass || !c.mandatory; });
}

const Check& TestReport::check(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return c;
    throw std::out_of_range("report '" + test + "' has no check '" + name + "'");
}

nlohmann::json TestReport::to_json() const {
    nlohmann::json j;
    j["test"] = test;
    j["pass"] = pass();
    j["seed"] = seed;
    j["config_hash"] = config_hash;
    // Headline fields: the first failing mandatory check, else the first check.
    const Check* head = checks.empty() ? nullptr : &checks.front();
    for (const auto& c : checks)
        if (c.mandatory && !c.pass) {
            head = &c;
            break;
        }
    j["statistic"] = head ? nlohmann::json(head->statistic) : nlohmann::json();
    j["threshold"] = head ? nlohmann::json(head->threshold) : nlohmann::json();
    j["n"] = head ? head->n : 0;
    j["checks"] = nlohmann::json::array();
    for (const auto& c : checks)
        j["checks"].push_back({{"name", c.name},
                               {"statistic", c.statistic},
                               {"threshold", c.threshold},
                               {"relation", c.relation},
                               {"pass", c.pass},
                               {"n", c.n},
                               {"mandatory", c.mandatory}});
    j["estimates"] = nlohmann::json::object();
    for (const auto& [k, e] : estimates) j["estimates"][k] = {{"value", e.value}, {"std_error", e.std_error}, {"n", e.n}};
    j["values"] = nlohmann::json::object();
    for (const auto& [k, v] : values) j["values"][k] = v;
    return j;
}

Estimate estimate_sigma2_direct(const EnsembleRecord& ens, double t_a, double t_b, int bootstrap,
                                std::uint64_t seed) {
    std::vector<long> recs;
    std::vector<double> times;
    for (long rec = 0; rec < ens.records(); ++rec) {
        const double t = ens.times()[rec];
        const double tol = 1e-9 * std::max(1.0, std::abs(t));
        if (t >= t_a - tol && t <= t_b + tol) {
            recs.push_back(rec);
            times.push_back(t);
        }
    }
    if (recs.size() < 10)
        throw std::invalid_argument("sigma^2 window [" + fmt(t_a) + ", " + fmt(t_b) + "] holds " +
                                    std::to_string(recs.size()) + " records; at least 10 are needed");
    const long n = ens.replicas();
    if (n < 2) throw std::invalid_argument("sigma^2 estimate needs at least two replicas");
    std::vector<std::vector<double>> inc;
    for (long rec : recs) inc.push_back(mean_mode_increments(ens, rec, 1.0));

    auto slope = [&](std::span<const long> idx) {
        std::vector<double> var(recs.size());
        for (std::size_t k = 0; k < recs.size(); ++k) {
            double s = 0.0, s2 = 0.0;
            for (long i : idx) {
                const double d = inc[k][static_cast<std::size_t>(i)];
                s += d;
                s2 += d * d;
            }
            const double m = s / static_cast<double>(idx.size());
            var[k] = (s2 - s * m) / static_cast<double>(idx.size() - 1);
        }
        return least_squares(times, var).slope;
    };
    std::vector<long> all(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    Estimate e;
    e.value = slope(all);
    e.std_error = bootstrap_std_error(n, slope, bootstrap, seed);
    e.n = n;
    return e;
}

TestReport clt_test(const EnsembleRecord& ens, double t, double sigma2_ref, double level) {
    if (!(t > 0.0)) throw std::invalid_argument("CLT time must be positive");
    TestReport rep;
    rep.test = "clt";
    const auto x = mean_mode_increments(ens, ens.record_at(t), 1.0 / std::sqrt(t));
    const auto ks = ks_test_normal(x, sigma2_ref);
    rep.checks.push_back(make_check("ks_p_value", ks.p_value, ">=", level, ks.n));
    rep.values["ks_statistic"] = ks.statistic;
    rep.values["sigma2_ref"] = sigma2_ref;
    rep.values["time"] = t;
    rep.estimates["scaled_variance"] = {variance(x), variance(x) * std::sqrt(2.0 / (x.size() - 1.0)),
                                        static_cast<long>(x.size())};
    return rep;
}

TestReport mode_decay_test(const EnsembleRecord& ens, const ModeDecayOptions& opt) {
    if (opt.epsilons.size() < 2) throw std::invalid_argument("mode decay needs at least two epsilon values");
    TestReport rep;
    rep.test = "mode_decay";
    const long n = ens.replicas();
    std::vector<int> modes;
    for (int j : opt.modes)
        if (j >= 1 && j <= ens.modes()) modes.push_back(j);
    if (modes.empty()) throw std::invalid_argument("mode decay needs at least one mode in 1..J");

    // scaled[e][m]: eps^2 E[a_j^2] at micro time T / eps^2; index m == modes.size() is the sum.
    std::vector<std::vector<Estimate>> scaled;
    std::vector<Estimate> control;
    std::vector<double> sup_norm;
    for (double eps : opt.epsilons) {
        const long rec = ens.record_at(opt.horizon / (eps * eps));
        const std::string tag = "eps=" + fmt(eps);
        std::vector<Estimate> row;
        std::vector<double> total(static_cast<std::size_t>(n), 0.0), total0(static_cast<std::size_t>(n), 0.0);
        for (int j : modes) {
            std::vector<double> now(static_cast<std::size_t>(n)), start(static_cast<std::size_t>(n));
            for (int r = 0; r < n; ++r) {
                now[r] = eps * eps * ens.coeff(rec, r, j) * ens.coeff(rec, r, j);
                start[r] = ens.coeff(0, r, j) * ens.coeff(0, r, j);
                total[r] += now[r];
                total0[r] += start[r];
            }
            const Estimate m = mean_estimate(now);
            const Estimate c = mean_estimate(start);
            row.push_back(m);
            rep.estimates["scaled_second_moment_j" + std::to_string(j) + "_" + tag] = m;
            if (eps == opt.epsilons.front()) rep.estimates["stationary_variance_j" + std::to_string(j)] = c;
            // eps^2 E[a_j(t)^2] <= eps^2 (C_j + slack), slack four combined standard errors.
            const double slack = 4.0 * std::hypot(m.std_error / (eps * eps), c.std_error);
            rep.checks.push_back(make_check("bounded_j" + std::to_string(j) + "_" + tag, m.value / (eps * eps),
                                            "<=", c.value + slack, n));
        }
        row.push_back(mean_estimate(total));
        rep.estimates["scaled_second_moment_sum_" + tag] = row.back();
        scaled.push_back(row);

        std::vector<double> c0(static_cast<std::size_t>(n)), sup(static_cast<std::size_t>(n));
        for (int r = 0; r < n; ++r) {
            const double a = ens.coeff(rec, r, 0), a0 = ens.coeff(0, r, 0);
            c0[r] = eps * eps * (a * a - a0 * a0);
            double s = 0.0;
            for (int j = 1; j <= ens.modes(); ++j) s += std::abs(ens.coeff(rec, r, j));
            sup[r] = eps * std::numbers::sqrt2 * s;
        }
        control.push_back(mean_estimate(c0));
        rep.estimates["mean_mode_control_" + tag] = control.back();
        sup_norm.push_back(mean(sup));
        rep.values["fluctuation_sup_norm_" + tag] = sup_norm.back();
    }

    for (std::size_t e = 1; e < opt.epsilons.size(); ++e) {
        const double expected = std::pow(opt.epsilons[e - 1] / opt.epsilons[e], 2);
        const std::string tag = "eps=" + fmt(opt.epsilons[e - 1]) + "/" + fmt(opt.epsilons[e]);
        for (std::size_t m = 0; m <= modes.size(); ++m) {
            const std::string name = m < modes.size() ? "j" + std::to_string(modes[m]) : "sum";
            const Estimate& hi = scaled[e - 1][m];
            const Estimate& lo = scaled[e][m];
            const double ratio = hi.value / lo.value;
            const double rel_se = std::hypot(hi.std_error / hi.value, lo.std_error / lo.value);
            rep.values["decay_ratio_" + name + "_" + tag] = ratio;
            rep.checks.push_back(make_check("decay_ratio_" + name + "_" + tag, std::abs(ratio / expected - 1.0), "<=",
                                            opt.tolerance, n, opt.tolerance >= 3.0 * rel_se));
        }
        const double control_ratio = control[e].value / control[e - 1].value;
        const double control_se = std::hypot(control[e].std_error / control[e].value,
                                             control[e - 1].std_error / control[e - 1].value);
        rep.checks.push_back(make_check("mean_mode_control_" + tag, control_ratio, ">=", 1.0 - opt.tolerance, n,
                                        opt.tolerance >= 3.0 * control_se));
        const double sup_ratio = sup_norm[e] / sup_norm[e - 1];
        rep.checks.push_back(make_check("sup_norm_ratio_" + tag, sup_ratio, "<=",
                                        opt.epsilons[e] / opt.epsilons[e - 1] * (1.0 + opt.tolerance), n));
    }
    return rep;
}

TestReport ip_test(const EnsembleRecord& ens, const ScalingParams& scaling, double sigma2_ref, const IpOptions& opt) {
    if (scaling.times.size() < 3) throw std::invalid_argument("invariance principle test needs m >= 3 times");
    if (!(sigma2_ref > 0.0)) throw std::invalid_argument("reference sigma^2 must be positive");
    TestReport rep;
    rep.test = "invariance_principle";
    const double eps = scaling.epsilon;
    const long n = ens.replicas();
    const auto& ts = scaling.times;
    std::vector<std::vector<double>> x;
    for (double t : ts) x.push_back(mean_mode_increments(ens, ens.record_at(scaling.micro_time(t)), eps));
    rep.values["epsilon"] = eps;
    rep.values["sigma2_ref"] = sigma2_ref;

    for (std::size_t k = 0; k < ts.size(); ++k)
        for (std::size_t l = k; l < ts.size(); ++l) {
            const double expected = sigma2_ref * std::min(ts[k], ts[l]);
            const double cov = covariance(x[k], x[l]);
            const std::string name = "cov_t" + fmt(ts[k]) + "_t" + fmt(ts[l]);
            rep.values[name] = cov;
            // Gaussian sampling error of the relative covariance; the fixed tolerance only
            // binds once it is resolvable at three standard errors.
            const double mn = std::min(ts[k], ts[l]);
            const double rel_se = std::sqrt((ts[k] * ts[l] + mn * mn) / static_cast<double>(n)) / mn;
            rep.checks.push_back(make_check(name + "_rel_error", std::abs(cov / expected - 1.0), "<=",
                                            opt.covariance_tolerance, n, opt.covariance_tolerance >= 3.0 * rel_se));
        }

    std::vector<std::vector<double>> inc(ts.size());
    for (std::size_t k = 0; k < ts.size(); ++k) {
        inc[k] = x[k];
        if (k > 0)
            for (long r = 0; r < n; ++r) inc[k][r] -= x[k - 1][r];
    }
    for (std::size_t k = 0; k < ts.size(); ++k)
        for (std::size_t l = k + 1; l < ts.size(); ++l) {
            const double rho = correlation(inc[k], inc[l]);
            rep.checks.push_back(make_check("increment_corr_" + std::to_string(k) + "_" + std::to_string(l),
                                            std::abs(rho), "<", opt.correlation_max, n,
                                            opt.correlation_max >= 3.0 / std::sqrt(static_cast<double>(n))));
        }

    for (std::size_t k = 0; k < ts.size(); ++k) {
        const auto ks = ks_test_normal(x[k], sigma2_ref * ts[k]);
        rep.values["ks_statistic_t" + fmt(ts[k])] = ks.statistic;
        rep.checks.push_back(make_check("ks_p_value_t" + fmt(ts[k]), ks.p_value, ">=", opt.level, ks.n));
    }
    rep.estimates["fluctuation_sup_norm"] = fluctuation_sup_norm(ens, scaling);
    return rep;
}

Estimate fluctuation_sup_norm(const EnsembleRecord& ens, const ScalingParams& scaling) {
    std::vector<long> recs;
    for (double t : scaling.times) recs.push_back(ens.record_at(scaling.micro_time(t)));
    std::vector<double> sup(static_cast<std::size_t>(ens.replicas()), 0.0);
    for (int r = 0; r < ens.replicas(); ++r)
        for (long rec : recs) {
            double s = 0.0;
            for (int j = 1; j <= ens.modes(); ++j) s += std::abs(ens.coeff(rec, r, j));
            sup[r] = std::max(sup[r], scaling.epsilon * std::numbers::sqrt2 * s);
        }
    return mean_estimate(sup);
}

double endpoint_increment_variance(int modes, double t) {
    double s = 0.0;
    for (int j = 1; j <= modes; ++j) {
        const double d = eval_basis(j, 0.0) - eval_basis(j, 1.0);
        s += convolution_variance(j, t) * d * d;
    }
    return s;
}

TestReport tightness_covariance_check(const EnsembleRecord& ens, const TightnessOptions& opt) {
    TestReport rep;
    rep.test = "tightness_covariance";
    const long n = ens.replicas();
    const long rec = ens.record_at(opt.time);

    std::vector<double> end(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
        const double d = fluctuation_at(ens, rec, r, 0.0) - fluctuation_at(ens, rec, r, 1.0);
        end[r] = d * d;
    }
    const Estimate emp = mean_estimate(end);
    const double series = endpoint_increment_variance(ens.modes(), opt.time);
    rep.estimates["endpoint_increment_variance"] = emp;
    rep.values["endpoint_series"] = series;
    rep.values["endpoint_series_limit"] = 1.0;  // sum over odd j of 8 / (pi^2 j^2)
    rep.checks.push_back(make_check("endpoint_z_score", std::abs(emp.value - series) / emp.std_error, "<=", 3.0, n));

    std::vector<double> lx, lv;
    for (double dx : opt.spatial_steps) {
        if (!(dx > 0.0) || opt.x0 + dx > 1.0) throw std::invalid_argument("spatial step leaves [0,1]");
        std::vector<double> v(static_cast<std::size_t>(n));
        for (int r = 0; r < n; ++r)
            v[r] = fluctuation_at(ens, rec, r, opt.x0 + dx) - fluctuation_at(ens, rec, r, opt.x0);
        const double m2 = mean_of_squares(v);
        rep.values["spatial_increment_variance_dx" + fmt(dx)] = m2;
        lx.push_back(std::log(dx));
        lv.push_back(std::log(m2));
    }
    const double spatial = least_squares(lx, lv).slope;
    rep.checks.push_back(make_check("spatial_exponent", spatial, ">=", opt.spatial_exponent_min, n));

    std::vector<double> lt, lw;
    for (double ds : opt.temporal_steps) {
        const long back = ens.record_at(opt.time - ds);
        std::vector<double> v(static_cast<std::size_t>(n));
        for (int r = 0; r < n; ++r)
            v[r] = fluctuation_at(ens, rec, r, opt.x0) - fluctuation_at(ens, back, r, opt.x0);
        const double m2 = mean_of_squares(v);
        rep.values["temporal_increment_variance_dt" + fmt(ds)] = m2;
        lt.push_back(std::log(ds));
        lw.push_back(std::log(m2));
    }
    const double temporal = least_squares(lt, lw).slope;
    rep.checks.push_back(make_check("temporal_exponent", temporal, ">=", opt.temporal_exponent_min, n));
    return rep;
}

TestReport ou_characteristic_check(const EnsembleRecord& ens, const std::vector<SpectralField>& directions,
                                   const std::vector<double>& times) {
    TestReport rep;
    rep.test = "ou_characteristic_functional";
    const long n = ens.replicas();
    for (double t : times) {
        const long rec = ens.record_at(t);
        for (std::size_t d = 0; d < directions.size(); ++d) {
            const auto& l = directions[d];
            if (l.modes() > ens.modes()) throw std::invalid_argument("direction has more modes than the ensemble");
            std::vector<double> c(static_cast<std::size_t>(n));
            for (int r = 0; r < n; ++r) {
                double s = 0.0;
                for (int j = 0; j <= l.modes(); ++j) s += l[j] * ens.coeff(rec, r, j);
                c[r] = std::cos(s);
            }
            const Estimate e = mean_estimate(c);
            const double exact = ou_char_functional(l, t);
            const std::string name = "l" + std::to_string(d) + "_t" + fmt(t);
            rep.estimates[name] = e;
            rep.values[name + "_exact"] = exact;
            rep.checks.push_back(make_check(name + "_z_score", std::abs(e.value - exact) / e.std_error, "<=", 3.0, n));
        }
    }
    return rep;
}

std::vector<PathIntegrand> corrector_integrands(const TruncatedGenerator& gen,
                                                const std::vector<CorrectorSolution>& solutions) {
    if (gen.truncation() != 0) throw std::invalid_argument("path integrands need a one-dimensional corrector");
    std::vector<PathIntegrand> out;
    for (const auto& s : solutions)
        out.emplace_back([f = s.f_values](std::span<const double> a) { return periodic_interp(f, a[0]); });
    return out;
}

TestReport dynkin_martingale_check(const EnsembleRecord& ens, const TruncatedGenerator& gen,
                                   const std::vector<CorrectorSolution>& solutions, double t) {
    if (gen.truncation() != 0) throw std::invalid_argument("Dynkin check runs on the one-mode chain");
    if (ens.integrands() != static_cast<int>(solutions.size()))
        throw std::invalid_argument("ensemble path integrals do not match the corrector list");
    TestReport rep;
    rep.test = "dynkin_martingale";
    const long n = ens.replicas();
    const long rec = ens.record_at(t);
    std::vector<std::pair<double, double>> residual;  // (lambda, Var R / t)
    for (std::size_t i = 0; i < solutions.size(); ++i) {
        const auto& s = solutions[i];
        std::vector<double> m2(static_cast<std::size_t>(n)), rr(static_cast<std::size_t>(n));
        for (int r = 0; r < n; ++r) {
            const double f0 = periodic_interp(s.f_values, ens.coeff(0, r, 0));
            const double ft = periodic_interp(s.f_values, ens.coeff(rec, r, 0));
            const double drift = ens.drift(rec, r);
            const double m = ft - f0 - s.lambda * ens.path_integral(rec, r, static_cast<int>(i)) + drift;
            m2[r] = m * m / t;
            rr[r] = drift - m;
        }
        const Estimate qv = mean_estimate(m2);
        const double target = 2.0 * s.dirichlet_energy;
        const std::string tag = "lambda=" + fmt(s.lambda);
        rep.estimates["martingale_qv_" + tag] = qv;
        rep.values["grad_energy_" + tag] = target;
        const double tol = 3.0 * qv.std_error + 0.02 * target;
        rep.checks.push_back(make_check("qv_error_" + tag, std::abs(qv.value - target), "<=", tol, n));
        const double vr = variance(rr) / t;
        rep.values["residual_variance_rate_" + tag] = vr;
        residual.emplace_back(s.lambda, vr);
    }
    std::sort(residual.begin(), residual.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    double worst = 0.0;
    for (std::size_t k = 1; k < residual.size(); ++k) {
        const double prev = residual[k - 1].second, next = residual[k].second;
        worst = std::max(worst, prev > 0.0 ? next / prev : (next > 0.0 ? 2.0 : 0.0));
    }
    if (residual.size() > 1) rep.checks.push_back(make_check("residual_decrease_ratio", worst, "<", 1.0, n));
    return rep;
}

}  // namespace shelab
