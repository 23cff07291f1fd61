#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "shelab/gibbs.hpp"
#include "shelab/verification.hpp"

using namespace shelab;

namespace {

constexpr double kPi = std::numbers::pi;

// Linear equation with dt = 1.25: every step is exact in law, so the zero-potential
// ensemble is an exact sample of the reference process at every record.
EnsembleRecord zero_potential_ensemble(int replicas, std::uint64_t seed, int modes = 8) {
    SimConfig cfg;
    cfg.modes = modes;
    cfg.grid_intervals = 2 * modes;
    cfg.dt = 1.25;
    cfg.horizon = 100.0;
    cfg.seed = seed;
    std::vector<SpectralField> init;
    RngStream rng(seed, 0, RngDomain::gibbs);
    for (int r = 0; r < replicas; ++r) init.push_back(sample_pi_w(modes, rng));
    return simulate_ensemble(cfg, init, make_zero_potential());
}

}  // namespace

TEST_CASE("checks and reports") {
    CHECK(make_check("a", 1.0, "<=", 1.0, 5).pass);
    CHECK_FALSE(make_check("a", 1.0, "<", 1.0, 5).pass);
    CHECK(make_check("a", 2.0, ">", 1.0, 5).pass);
    CHECK_FALSE(make_check("a", 0.5, ">=", 1.0, 5).pass);
    CHECK_FALSE(make_check("a", std::nan(""), "<=", 1.0, 5).pass);
    CHECK_THROWS_AS(make_check("a", 1.0, "==", 1.0, 5), std::invalid_argument);

    TestReport r;
    r.test = "demo";
    r.seed = 3;
    r.checks.push_back(make_check("first", 0.2, ">=", 0.01, 100));
    r.checks.push_back(make_check("advisory", 2.0, "<=", 1.0, 100, false));
    CHECK(r.pass());
    r.checks.push_back(make_check("second", 0.001, ">=", 0.01, 100));
    CHECK_FALSE(r.pass());
    CHECK(r.check("second").statistic == 0.001);
    CHECK_THROWS(r.check("missing"));
    const auto j = r.to_json();
    CHECK(j["test"] == "demo");
    CHECK(j["pass"] == false);
    CHECK(j["statistic"] == 0.001);  // headline = first failing mandatory check
    CHECK(j["threshold"] == 0.01);
    CHECK(j["n"] == 100);
    CHECK(j["checks"].size() == 3);
    CHECK(j["checks"][1]["mandatory"] == false);
}

TEST_CASE("scaling parameters") {
    ScalingParams s{0.1, 1.0, {0.25, 0.5, 1.0}};
    CHECK(s.micro_time(0.5) == doctest::Approx(50.0));
    CHECK_NOTHROW(s.validate(1.25));
    CHECK_THROWS_AS(s.validate(0.3), std::invalid_argument);
    CHECK_THROWS_AS((ScalingParams{0.1, 1.0, {0.5, 0.25}}.validate(1.25)), std::invalid_argument);
    CHECK_THROWS_AS((ScalingParams{0.1, 1.0, {1.5}}.validate(1.25)), std::invalid_argument);
    CHECK_THROWS_AS((ScalingParams{0.0, 1.0, {0.5}}.validate(1.25)), std::invalid_argument);
}

TEST_CASE("zero potential: exact Brownian mean mode") {
    const auto ens = zero_potential_ensemble(4000, 1);
    const auto s2 = estimate_sigma2_direct(ens, 20, 100, 200, 1);
    CHECK(std::abs(s2.value - 1.0) < 3 * s2.std_error);
    CHECK(s2.std_error > 0.0);
    CHECK(s2.n == 4000);
    CHECK_THROWS_AS(estimate_sigma2_direct(ens, 20, 25, 50, 1), std::invalid_argument);

    const auto clt = clt_test(ens, 100, 1.0);
    CHECK(clt.pass());
    const auto power = clt_test(ens, 100, 0.62);
    CHECK_FALSE(power.pass());

    for (double eps : {0.2, 0.1}) {
        const ScalingParams sc{eps, 1.0, {0.25, 0.5, 0.75, 1.0}};
        const auto ip = ip_test(ens, sc, 1.0);
        CHECK(ip.pass());
        for (const auto& c : ip.checks) CHECK_MESSAGE(c.pass, c.name);
    }
    const auto md = mode_decay_test(ens, ModeDecayOptions{});
    CHECK(md.pass());
}

TEST_CASE("property: standard error scales like n^-1/2") {
    // quadrupling the replica count halves the bootstrap standard error
    const auto small = estimate_sigma2_direct(zero_potential_ensemble(1000, 11, 2), 20, 100, 400, 1);
    const auto large = estimate_sigma2_direct(zero_potential_ensemble(4000, 12, 2), 20, 100, 400, 1);
    CHECK(small.std_error / large.std_error == doctest::Approx(2.0).epsilon(0.3));
}

TEST_CASE("property: null calibration of the CLT test") {
    // the KS level is honoured: across independent seeds at most one rejection at level 0.01
    int failures = 0;
    for (std::uint64_t seed = 100; seed < 120; ++seed) failures += !clt_test(zero_potential_ensemble(500, seed, 2), 100, 1.0).pass();
    CHECK(failures <= 1);
}

TEST_CASE("property: advisory gating on small ensembles") {
    const auto ens = zero_potential_ensemble(100, 7);
    const ScalingParams sc{0.1, 1.0, {0.25, 0.5, 0.75, 1.0}};
    const auto ip = ip_test(ens, sc, 1.0);
    for (const auto& c : ip.checks)
        if (c.name.rfind("ks_p_value", 0) == 0)
            CHECK(c.mandatory);
        else
            CHECK_FALSE(c.mandatory);
    const auto big = ip_test(zero_potential_ensemble(20000, 8, 2), sc, 1.0);
    for (const auto& c : big.checks) CHECK_MESSAGE(c.mandatory, c.name);
}

TEST_CASE("covariance oracle of the stochastic convolution") {
    CHECK(endpoint_increment_variance(2000, 50.0) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(endpoint_increment_variance(1, 50.0) == doctest::Approx(8 / (kPi * kPi)).epsilon(1e-12));
    CHECK(endpoint_increment_variance(64, 1.0) < endpoint_increment_variance(64, 2.0) + 1e-15);

    const int J = 64;
    SimConfig cfg;
    cfg.modes = J;
    cfg.grid_intervals = 2 * J;
    cfg.dt = 1.0 / 1024;
    cfg.seed = 5;
    std::vector<long> steps;
    for (int k = 6; k <= 10; ++k) steps.push_back(1024 - (1024 >> k));
    steps.push_back(1024);
    const auto ens = simulate_ensemble_at_steps(cfg, std::vector<SpectralField>(3000, SpectralField(J)),
                                                make_zero_potential(), steps);
    const auto rep = tightness_covariance_check(ens);
    CHECK(rep.check("endpoint_z_score").pass);
    CHECK(rep.check("spatial_exponent").pass);
    CHECK(rep.check("temporal_exponent").pass);
    CHECK(rep.values.at("endpoint_series_limit") == 1.0);
}

TEST_CASE("characteristic functional check") {
    SimConfig cfg;
    cfg.modes = 4;
    cfg.grid_intervals = 8;
    cfg.dt = 0.1;
    cfg.horizon = 1.0;
    cfg.seed = 6;
    const auto ens = simulate_ensemble(cfg, std::vector<SpectralField>(5000, SpectralField(4)), make_zero_potential());
    SpectralField e0(4), e1(4), e12(4);
    e0[0] = 1;
    e1[1] = 1;
    e12[1] = 1;
    e12[2] = 1;
    const auto rep = ou_characteristic_check(ens, {e0, e1, e12}, {0.1, 1.0});
    CHECK(rep.checks.size() == 6);
    CHECK(rep.pass());
    // a wrong law is detected: inflate the noise by 1.5
    auto bad = ens;
    for (long rec = 0; rec < bad.records(); ++rec)
        for (int r = 0; r < bad.replicas(); ++r)
            for (int j = 0; j <= 4; ++j) bad.coeff(rec, r, j) *= 1.5;
    CHECK_FALSE(ou_characteristic_check(bad, {e0, e1, e12}, {0.1, 1.0}).pass());
}

TEST_CASE("Dynkin martingale of the mean-mode corrector") {
    const auto spec = make_sine_gordon(0.5);
    GeneratorGrid g;
    g.truncation = 0;
    g.theta_points = 256;
    const TruncatedGenerator gen(spec, g);
    std::vector<CorrectorSolution> sols{solve_resolvent(gen, 1e-1), solve_resolvent(gen, 1e-2)};
    std::vector<SpectralField> init;
    for (auto& s : sample_pi_ensemble(spec, SpectralBasis(0, 4), 2000, 2)) init.push_back(s.field);
    // The residual is a boundary term of size O(1) plus lambda * int f; the latter
    // separates the two lambdas only once t is long compared with the mixing time.
    SimConfig cfg;
    cfg.modes = 0;
    cfg.grid_intervals = 4;
    cfg.dt = 2e-3;
    cfg.horizon = 50.0;
    cfg.record_stride = 5000;
    cfg.seed = 3;
    const auto ens = simulate_ensemble(cfg, init, spec, corrector_integrands(gen, sols));
    const auto rep = dynkin_martingale_check(ens, gen, sols, 50.0);
    for (const auto& c : rep.checks) CHECK_MESSAGE(c.pass, c.name, " ", c.statistic, " vs ", c.threshold);
    CHECK_THROWS_AS(dynkin_martingale_check(ens, gen, {sols[0]}, 50.0), std::invalid_argument);

    const TruncatedGenerator free_gen(make_zero_potential(), g);
    const std::vector<CorrectorSolution> zero{solve_resolvent(free_gen, 1e-1)};
    const auto free_ens = simulate_ensemble(cfg, std::vector<SpectralField>(100, SpectralField(0)), make_zero_potential(),
                                            corrector_integrands(free_gen, zero));
    const auto z = dynkin_martingale_check(free_ens, free_gen, zero, 50.0);
    CHECK(z.estimates.at("martingale_qv_lambda=0.1").value == 0.0);
}
