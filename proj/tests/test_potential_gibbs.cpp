#include <doctest.h>

#include <cmath>
#include <algorithm>
#include <numbers>
#include <vector>

#include "shelab/gibbs.hpp"
#include "shelab/potential.hpp"
#include "shelab/stats.hpp"

using namespace shelab;

namespace {

constexpr double kPi = std::numbers::pi;

SpectralField random_field(int modes, RngStream& rng) {
    SpectralField f(modes);
    f[0] = 4.0 * rng.uniform() - 2.0;
    for (int j = 1; j <= modes; ++j) f[j] = rng.normal() / (kPi * j);
    return f;
}

}  // namespace

TEST_CASE("sine-Gordon family and bounds") {
    const auto zero = make_sine_gordon(0.0);
    CHECK(zero.is_zero());
    CHECK(zero.sup_abs_V() == 0.0);
    CHECK(zero.sup_abs_dV() == 0.0);
    CHECK(zero.lipschitz_dV() == 0.0);

    const auto sg = make_sine_gordon(0.5);
    CHECK(std::abs(sg.value(0.0, 0.25)) < 1e-16);
    CHECK(sg.sup_abs_V() == 0.5);
    CHECK(sg.sup_abs_dV() == doctest::Approx(3.14159).epsilon(1e-5));
    CHECK(sg.lipschitz_dV() == doctest::Approx(2 * kPi * kPi));
    CHECK(sg.sup_abs_d2V() == sg.lipschitz_dV());
    CHECK(make_sine_gordon(-0.3).sup_abs_V() == doctest::Approx(0.3));
    CHECK(parse_potential_kind("sine_gordon") == PotentialKind::sine_gordon);
    CHECK(parse_phase_profile("linear") == PhaseProfile::linear);
    CHECK_THROWS_AS(parse_phase_profile("wiggly"), std::invalid_argument);
}

TEST_CASE("property: periodicity, bounds and Lipschitz constant on a dense sample") {
    for (auto phase : {PhaseProfile::flat, PhaseProfile::linear}) {
        const auto spec = make_sine_gordon(0.7, phase);
        for (int ix = 0; ix <= 20; ++ix) {
            const double x = ix / 20.0;
            for (int iu = 0; iu < 200; ++iu) {
                const double u = -3.0 + iu * 0.0311;
                CHECK(std::abs(spec.value(x, u + 1) - spec.value(x, u)) < 1e-12);
                CHECK(std::abs(spec.value(x, u)) <= spec.sup_abs_V() + 1e-15);
                CHECK(std::abs(spec.derivative(x, u)) <= spec.sup_abs_dV() + 1e-12);
                const double w = u + 0.013;
                CHECK(std::abs(spec.derivative(x, u) - spec.derivative(x, w)) <= spec.lipschitz_dV() * 0.013 + 1e-12);
                const double h = 1e-5;
                const double fd = (spec.value(x, u + h) - spec.value(x, u - h)) / (2 * h);
                CHECK(spec.derivative(x, u) == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("integrated potential, drift functional and Gibbs weight") {
    const SpectralBasis basis(8, 32);
    const auto sg = make_sine_gordon(0.5);
    const auto zero = make_zero_potential();
    SpectralField v(8);
    CHECK(integrated_potential(v, sg, basis) == doctest::Approx(0.5));
    CHECK(gibbs_log_weight(v, sg, basis) == doctest::Approx(-1.0));
    CHECK(gibbs_log_weight(v, zero, basis) == 0.0);

    v[0] = 0.25;
    CHECK(drift_functional(0, v, sg, basis) == doctest::Approx(kPi).epsilon(1e-12));
    SpectralField w(8);
    w[3] = 0.2;
    CHECK(drift_functional(3, w, zero, basis) == doctest::Approx(-kPi * kPi * 9 * 0.2 / 2));

    RngStream rng(8, 0);
    for (int i = 0; i < 200; ++i) {
        const auto f = random_field(8, rng);
        CHECK(std::abs(integrated_potential(f, sg, basis)) <= 0.5 + 1e-12);
        CHECK(std::abs(gibbs_log_weight(f, sg, basis)) <= 1.0 + 1e-12);
        CHECK(integrated_potential(f, zero, basis) == 0.0);
        for (int j = 0; j <= 8; ++j)
            CHECK(drift_functional(j, f.shifted(1.0), sg, basis) ==
                  doctest::Approx(drift_functional(j, f, sg, basis)).epsilon(1e-12));
    }
}

TEST_CASE("property: drift functional is linear in the direction") {
    const SpectralBasis basis(6, 24);
    const auto spec = make_sine_gordon(0.4, PhaseProfile::linear);
    RngStream rng(9, 0);
    for (int i = 0; i < 50; ++i) {
        const auto f = random_field(6, rng);
        SpectralField dir(6);
        double expected = 0.0;
        for (int j = 0; j <= 6; ++j) {
            dir[j] = rng.normal();
            expected += dir[j] * drift_functional(j, f, spec, basis);
        }
        const DriftFunctional V(dir, spec, basis);
        CHECK(V(f) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("free measure marginals") {
    RngStream rng(12, 0, RngDomain::gibbs);
    const int n = 100000;
    std::vector<double> a0(n), a1(n), a2(n);
    for (int i = 0; i < n; ++i) {
        const auto v = sample_pi_w(4, rng);
        a0[i] = v[0];
        a1[i] = v[1];
        a2[i] = v[2];
    }
    const double v1 = 1 / (kPi * kPi), v2 = 1 / (4 * kPi * kPi);
    CHECK(std::abs(variance(a1) - v1) < 3 * v1 * std::sqrt(2.0 / n));
    CHECK(std::abs(variance(a2) - v2) < 3 * v2 * std::sqrt(2.0 / n));
    CHECK(ks_test(a0, [](double x) { return x; }).p_value > 0.01);
}

TEST_CASE("Gibbs rejection sampler") {
    const SpectralBasis basis(8, 32);
    SUBCASE("zero potential accepts every proposal and matches the free law") {
        RngStream r1(3, 0, RngDomain::gibbs), r2(3, 0, RngDomain::gibbs);
        const auto s = sample_pi(make_zero_potential(), basis, r1);
        CHECK(s.proposal_count == 1);
        CHECK(s.field.coeffs == sample_pi_w(8, r2).coeffs);
    }
    SUBCASE("a = 0.5: acceptance, stationarity of the drift, quotient chart") {
        const auto spec = make_sine_gordon(0.5);
        const auto ens = sample_pi_ensemble(spec, basis, 20000, 4);
        long proposals = 0;
        std::vector<double> drift;
        for (const auto& s : ens) {
            proposals += s.proposal_count;
            CHECK((s.field[0] >= 0.0 && s.field[0] < 1.0));
            drift.push_back(drift_functional(0, s.field, spec, basis));
        }
        CHECK(static_cast<double>(ens.size()) / proposals >= std::exp(-2.0));
        const auto e = mean_estimate(drift);
        CHECK(std::abs(e.value) < 3 * e.std_error);
    }
    SUBCASE("proposal cap") {
        RngStream rng(1, 0, RngDomain::gibbs);
        long total = 0;
        for (int i = 0; i < 50; ++i) {
            try {
                total += sample_pi(make_sine_gordon(3.0), basis, rng, 1).proposal_count;
            } catch (const std::runtime_error&) {
                total = -1;
                break;
            }
        }
        CHECK(total == -1);
    }
}

TEST_CASE("property: rejection and importance weighting agree") {
    const SpectralBasis basis(4, 16);
    const auto spec = make_sine_gordon(0.5);
    auto g = [](const SpectralField& v) { return std::cos(2 * kPi * v[0]) + v[1]; };
    const auto ens = sample_pi_ensemble(spec, basis, 20000, 21);
    std::vector<double> direct;
    for (const auto& s : ens) direct.push_back(g(s.field));
    RngStream rng(22, 0);
    double num = 0, den = 0, num2 = 0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const auto v = sample_pi_w(4, rng);
        const double w = std::exp(gibbs_log_weight(v, spec, basis));
        num += w * g(v);
        num2 += w * w * g(v) * g(v);
        den += w;
    }
    const double is = num / den;
    const double is_se = std::sqrt(num2 / den / den);  // crude delta-method bound
    const auto d = mean_estimate(direct);
    CHECK(std::abs(d.value - is) < 3 * std::hypot(d.std_error, is_se));
    // the potential pushes the mean mode towards the wells of cos(2 pi u)
    CHECK(d.value < -3 * d.std_error);
}

TEST_CASE("property: integration by parts against pi") {
    // <V^phi, g>_pi = -1/2 E_pi[d_phi g]
    const SpectralBasis basis(6, 24);
    const auto spec = make_sine_gordon(0.5, PhaseProfile::linear);
    const auto ens = sample_pi_ensemble(spec, basis, 40000, 31);
    std::vector<double> lhs0, lhs1;
    for (const auto& s : ens) {
        const auto& v = s.field;
        lhs0.push_back(drift_functional(0, v, spec, basis) * std::sin(2 * kPi * v[0]) +
                       0.5 * 2 * kPi * std::cos(2 * kPi * v[0]));
        lhs1.push_back(drift_functional(1, v, spec, basis) * v[1] + 0.5);
    }
    const auto e0 = mean_estimate(lhs0), e1 = mean_estimate(lhs1);
    CHECK(std::abs(e0.value) < 3.5 * e0.std_error);
    CHECK(std::abs(e1.value) < 3.5 * e1.std_error);
}

TEST_CASE("non-stationary starts by rejection") {
    const SpectralBasis basis(4, 16);
    const auto zero = make_zero_potential();
    SUBCASE("h = 1 reproduces sample_pi") {
        RngStream r1(5, 2, RngDomain::gibbs), r2(5, 2, RngDomain::gibbs);
        const DensityRatio one([](const SpectralField&) { return 1.0; }, 1.0);
        const auto a = sample_nu(one, zero, basis, r1);
        const auto b = sample_pi(zero, basis, r2);
        CHECK(a.field.coeffs == b.field.coeffs);
    }
    SUBCASE("support restriction") {
        const DensityRatio half([](const SpectralField& v) { return v[0] < 0.5 ? 1.0 : 0.0; }, 1.0);
        for (const auto& s : sample_nu_ensemble(half, make_sine_gordon(0.5), basis, 2000, 6)) CHECK(s.field[0] < 0.5);
    }
    SUBCASE("Gaussian tilt shifts the mean of a_1 by its variance") {
        // exp(a_1) capped at six standard deviations so the supremum is finite
        const double cap = 6.0 / kPi;
        const DensityRatio tilt([cap](const SpectralField& v) { return std::exp(std::min(v[1], cap)); }, std::exp(cap));
        std::vector<double> a1;
        for (const auto& s : sample_nu_ensemble(tilt, zero, basis, 20000, 7)) a1.push_back(s.field[1]);
        const auto e = mean_estimate(a1);
        CHECK(std::abs(e.value - 1 / (kPi * kPi)) < 3 * e.std_error);
    }
    CHECK_THROWS_AS(DensityRatio([](const SpectralField&) { return 1.0; }, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(DensityRatio([](const SpectralField&) { return 1.0; }, HUGE_VAL), std::invalid_argument);
}

TEST_CASE("ensembles do not depend on the worker count") {
    const SpectralBasis basis(6, 24);
    const auto spec = make_sine_gordon(0.5);
    const auto a = sample_pi_ensemble(spec, basis, 300, 77, 1);
    const auto b = sample_pi_ensemble(spec, basis, 300, 77, 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].field.coeffs == b[i].field.coeffs);
        CHECK(a[i].proposal_count == b[i].proposal_count);
    }
}
