#include <doctest.h>

#include <cmath>
#include <numbers>

#include "shelab/rng.hpp"
#include "shelab/spectral.hpp"

using namespace shelab;

namespace {

constexpr double kPi = std::numbers::pi;

SpectralField random_field(int modes, std::uint32_t stream) {
    RngStream rng(99, stream);
    SpectralField f(modes);
    for (int j = 0; j <= modes; ++j) f[j] = rng.normal();
    return f;
}

}  // namespace

TEST_CASE("basis values") {
    CHECK(eval_basis(0, 0.37) == 1.0);
    CHECK(eval_basis(1, 0.0) == doctest::Approx(1.414214).epsilon(1e-6));
    CHECK(std::abs(eval_basis(2, 0.25)) < 1e-15);
    CHECK(eval_basis(3, 1.0) == doctest::Approx(-std::numbers::sqrt2));
    CHECK_THROWS_AS(eval_basis(1, -0.01), std::invalid_argument);
    CHECK_THROWS_AS(eval_basis(1, 1.01), std::invalid_argument);
    CHECK_THROWS_AS(eval_basis(-1, 0.5), std::invalid_argument);
}

TEST_CASE("eigenvalues follow half the Neumann Laplacian") {
    CHECK(eigenvalue(0) == 0.0);
    CHECK(eigenvalue(1) == doctest::Approx(kPi * kPi / 2));
    for (int j = 1; j < 64; ++j) CHECK(eigenvalue(j) > eigenvalue(j - 1));
    CHECK(eigenpair(3).lambda == eigenvalue(3));
}

TEST_CASE("grid transforms") {
    const int J = 16, N = 32;
    const SpectralBasis basis(J, N);

    SUBCASE("constant grid") {
        const auto f = basis.to_spectral(Eigen::VectorXd::Constant(N + 1, 2.5));
        CHECK(f[0] == doctest::Approx(2.5));
        for (int j = 1; j <= J; ++j) CHECK(std::abs(f[j]) < 1e-13);
    }
    SUBCASE("samples of e_1") {
        Eigen::VectorXd g(N + 1);
        for (int k = 0; k <= N; ++k) g[k] = eval_basis(1, basis.x(k));
        const auto f = basis.to_spectral(g);
        for (int j = 0; j <= J; ++j) CHECK(std::abs(f[j] - (j == 1 ? 1.0 : 0.0)) < 1e-12);
    }
    SUBCASE("aliasing rejected") {
        CHECK_THROWS_AS(SpectralBasis(17, 32), std::invalid_argument);
        CHECK_THROWS_AS(to_grid(SpectralField(10), 19), std::invalid_argument);
    }
}

TEST_CASE("property: round trip and Parseval on band-limited fields") {
    for (std::uint32_t s = 0; s < 50; ++s) {
        const int J = 1 + static_cast<int>(s % 40);
        const int N = 2 * J + static_cast<int>(s % 7);
        const SpectralBasis basis(J, N);
        const auto f = random_field(J, s);
        const Eigen::VectorXd g = basis.to_grid(f);
        const auto back = basis.to_spectral(g);
        CHECK((back.coeffs - f.coeffs).cwiseAbs().maxCoeff() < 1e-12);
        const Eigen::VectorXd g2 = basis.to_grid(back);
        CHECK((g2 - g).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, g.cwiseAbs().maxCoeff()));
        const double l2 = basis.integrate(g.cwiseProduct(g));
        CHECK(std::abs(l2 - f.coeffs.squaredNorm()) < 1e-10 * std::max(1.0, l2));
    }
}

TEST_CASE("property: discrete orthonormality") {
    const int J = 24;
    const SpectralBasis basis(J, 2 * J);
    const Eigen::MatrixXd gram = basis.analysis() * basis.synthesis();
    CHECK((gram - Eigen::MatrixXd::Identity(J + 1, J + 1)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("heat semigroup") {
    SpectralField f(3);
    f[0] = 0.7;
    f[1] = 1.0;
    const auto g = semigroup_apply(0.2, f);
    CHECK(g[0] == 0.7);
    CHECK(g[1] == doctest::Approx(0.37270783885343794).epsilon(1e-12));
    CHECK(semigroup_apply(0.0, f).coeffs == f.coeffs);
    CHECK_THROWS_AS(semigroup_apply(-1e-9, f), std::invalid_argument);
}

TEST_CASE("property: semigroup algebra and contraction") {
    for (std::uint32_t s = 0; s < 30; ++s) {
        RngStream rng(5, s);
        const double t = rng.uniform(), u = rng.uniform();
        const auto f = random_field(12, s);
        const auto a = semigroup_apply(u, semigroup_apply(t, f));
        const auto b = semigroup_apply(t + u, f);
        CHECK((a.coeffs - b.coeffs).cwiseAbs().maxCoeff() < 1e-14);
        const auto c = semigroup_apply(t, f);
        for (int j = 0; j <= 12; ++j) CHECK(std::abs(c[j]) <= std::abs(f[j]));
    }
}

TEST_CASE("stochastic convolution variances") {
    CHECK(convolution_variance(0, 0.37) == 0.37);
    CHECK(convolution_variance(1, 1e3) == doctest::Approx(1.0 / (kPi * kPi)).epsilon(1e-14));
    CHECK(convolution_variance(1, 0.1) == doctest::Approx(0.06355798425692975).epsilon(1e-12));
    CHECK(convolution_variance(5, 0.0) == 0.0);
    CHECK_THROWS_AS(convolution_variance(1, -1.0), std::invalid_argument);
    CHECK(phi1(0.0, 0.25) == 0.25);
    CHECK(phi1(2.0, 0.25) == doctest::Approx((1 - std::exp(-0.5)) / 2));
}

TEST_CASE("property: per-mode additivity of Q_t") {
    for (int j = 0; j < 20; ++j)
        for (double t : {0.01, 0.3, 2.0})
            for (double s : {0.005, 0.7}) {
                const double lhs = convolution_variance(j, t + s);
                const double rhs = convolution_variance(j, s) + std::exp(-2 * eigenvalue(j) * s) * convolution_variance(j, t);
                CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
            }
}

TEST_CASE("quotient representative") {
    SpectralField f(2);
    f[0] = -2.25;
    f[1] = 0.5;
    const auto q = f.quotient_representative();
    CHECK(q[0] == doctest::Approx(0.75));
    CHECK(q[1] == 0.5);
    CHECK(f.shifted(1.0)[0] == -1.25);
    f[0] = -1e-18;
    CHECK(f.quotient_representative()[0] < 1.0);
}
