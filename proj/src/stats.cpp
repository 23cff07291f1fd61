#include "shelab/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "shelab/rng.hpp"

namespace shelab {

double mean(std::span<const double> x) {
    if (x.empty()) throw std::invalid_argument("mean of an empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
    if (x.size() < 2) throw std::invalid_argument("variance needs at least two observations");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double covariance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("covariance needs paired samples");
    const double mx = mean(x), my = mean(y);
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - mx) * (y[i] - my);
    return s / static_cast<double>(x.size() - 1);
}

double correlation(std::span<const double> x, std::span<const double> y) {
    const double sx = variance(x), sy = variance(y);
    if (!(sx > 0.0) || !(sy > 0.0)) return 0.0;
    return covariance(x, y) / std::sqrt(sx * sy);
}

Estimate mean_estimate(std::span<const double> x) {
    Estimate e;
    e.n = static_cast<long>(x.size());
    e.value = mean(x);
    e.std_error = x.size() > 1 ? std::sqrt(variance(x) / static_cast<double>(x.size())) : 0.0;
    return e;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("least squares needs two or more points");
    const double mx = mean(x), my = mean(y);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    if (!(sxx > 0.0)) throw std::invalid_argument("least squares with constant abscissae");
    LinearFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    return fit;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double kolmogorov_pvalue(double d, double n) {
    const double sn = std::sqrt(n);
    const double t = (sn + 0.12 + 0.11 / sn) * d;
    if (t < 0.2) return 1.0;
    // Alternating series converges fast for t >= 0.2 (terms fall like exp(-2 k^2 t^2)).
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * t * t);
        sum += (k % 2 == 1 ? term : -term);
        if (term < 1e-18) break;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf) {
    if (sample.empty()) throw std::invalid_argument("KS test of an empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return {d, kolmogorov_pvalue(d, n), static_cast<long>(sample.size())};
}

KsResult ks_test_normal(std::vector<double> sample, double variance) {
    if (!(variance > 0.0)) throw std::invalid_argument("reference variance must be positive");
    const double sd = std::sqrt(variance);
    return ks_test(std::move(sample), [sd](double x) { return normal_cdf(x / sd); });
}

KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("KS test of an empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return {d, kolmogorov_pvalue(d, na * nb / (na + nb)), static_cast<long>(a.size() + b.size())};
}

double bootstrap_std_error(long n, const std::function<double(std::span<const long>)>& statistic, int resamples,
                           std::uint64_t seed) {
    if (n < 2 || resamples < 2) throw std::invalid_argument("bootstrap needs n >= 2 and two or more resamples");
    std::vector<double> values(static_cast<std::size_t>(resamples));
    std::vector<long> idx(static_cast<std::size_t>(n));
    for (int b = 0; b < resamples; ++b) {
        RngStream rng(seed, static_cast<std::uint32_t>(b), RngDomain::bootstrap);
        for (auto& i : idx) i = std::min(n - 1, static_cast<long>(rng.uniform() * static_cast<double>(n)));
        values[static_cast<std::size_t>(b)] = statistic(idx);
    }
    return std::sqrt(variance(values));
}

}  // namespace shelab
