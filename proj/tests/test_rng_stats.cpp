#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "shelab/rng.hpp"
#include "shelab/stats.hpp"

using namespace shelab;

// Known-answer vectors published with the Random123 reference implementation.
TEST_CASE("philox4x32-10 known answers") {
    using A4 = std::array<std::uint32_t, 4>;
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("streams are pure functions of (seed, stream, counter)") {
    RngStream a(42, 7, RngDomain::gibbs), b(42, 7, RngDomain::gibbs);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
    RngStream c(42, 8, RngDomain::gibbs), d(42, 7, RngDomain::dynamics), e(43, 7, RngDomain::gibbs);
    RngStream ref(42, 7, RngDomain::gibbs);
    const double x = ref.uniform();
    CHECK(c.uniform() != x);
    CHECK(d.uniform() != x);
    CHECK(e.uniform() != x);

    RngStream s1(1, 0, RngDomain::generic, 5);
    RngStream s2(1, 0);
    s2.skip(5);
    CHECK(s1.next_block() == s2.next_block());
    CHECK(s1.counter() == 6);
}

TEST_CASE("uniform and normal moments") {
    RngStream rng(2024, 0);
    std::vector<double> u, z;
    for (int i = 0; i < 200000; ++i) {
        u.push_back(rng.uniform());
        z.push_back(rng.normal());
    }
    for (double v : u) REQUIRE((v > 0.0 && v < 1.0));
    CHECK(std::abs(mean(u) - 0.5) < 4 * std::sqrt(1.0 / 12 / u.size()));
    CHECK(std::abs(mean(z)) < 4 / std::sqrt(z.size()));
    CHECK(std::abs(variance(z) - 1.0) < 4 * std::sqrt(2.0 / z.size()));
    CHECK(ks_test(u, [](double x) { return x; }).p_value > 1e-3);
    CHECK(ks_test_normal(z, 1.0).p_value > 1e-3);
}

TEST_CASE("descriptive statistics") {
    const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8.5};
    CHECK(mean(x) == 2.5);
    CHECK(variance(x) == doctest::Approx(5.0 / 3));
    CHECK(covariance(x, x) == doctest::Approx(variance(x)));
    CHECK(correlation(x, y) > 0.99);
    const auto fit = least_squares(x, std::vector<double>{3, 5, 7, 9});
    CHECK(fit.slope == doctest::Approx(2.0));
    CHECK(fit.intercept == doctest::Approx(1.0));
    const auto e = mean_estimate(x);
    CHECK(e.std_error == doctest::Approx(std::sqrt(5.0 / 3 / 4)));
    CHECK_THROWS(mean(std::vector<double>{}));
    CHECK_THROWS(variance(std::vector<double>{1.0}));
}

TEST_CASE("normal cdf and Kolmogorov tail") {
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-12));
    // Asymptotic Kolmogorov quantiles: P(K > 1.358099) = 0.05, P(K > 1.627624) = 0.01.
    CHECK(kolmogorov_pvalue(1.358099 / std::sqrt(1e8), 1e8) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(kolmogorov_pvalue(1.627624 / std::sqrt(1e8), 1e8) == doctest::Approx(0.01).epsilon(1e-3));
    CHECK(kolmogorov_pvalue(0.0, 100) == 1.0);
}

TEST_CASE("KS test power and two-sample variant") {
    RngStream rng(3, 1);
    std::vector<double> z, w;
    for (int i = 0; i < 10000; ++i) z.push_back(rng.normal());
    for (int i = 0; i < 10000; ++i) w.push_back(rng.normal() * std::sqrt(0.62));
    CHECK(ks_test_normal(w, 0.62).p_value > 1e-3);
    CHECK(ks_test_normal(w, 1.0).p_value < 1e-10);
    CHECK(ks_two_sample(z, w).p_value < 1e-10);
    std::vector<double> z2;
    for (int i = 0; i < 8000; ++i) z2.push_back(rng.normal());
    CHECK(ks_two_sample(z, z2).p_value > 1e-3);
}

TEST_CASE("bootstrap standard error of the mean") {
    RngStream rng(11, 0);
    std::vector<double> x;
    for (int i = 0; i < 4000; ++i) x.push_back(rng.normal());
    auto stat = [&](std::span<const long> idx) {
        double s = 0;
        for (long i : idx) s += x[static_cast<std::size_t>(i)];
        return s / static_cast<double>(idx.size());
    };
    const double se = bootstrap_std_error(static_cast<long>(x.size()), stat, 400, 5);
    CHECK(se == doctest::Approx(1 / std::sqrt(4000.0)).epsilon(0.15));
    CHECK(bootstrap_std_error(static_cast<long>(x.size()), stat, 400, 5) == se);
}
