#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace shelab {

/// Point estimate with its standard error and sample size.
struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    long n = 0;
};

double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);
double covariance(std::span<const double> x, std::span<const double> y);
double correlation(std::span<const double> x, std::span<const double> y);
/// Sample mean with standard error sd / sqrt(n).
Estimate mean_estimate(std::span<const double> x);

struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
};
/// Ordinary least squares y = intercept + slope x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

double normal_cdf(double z);

/// Asymptotic Kolmogorov tail probability P(sqrt(n) D > t) with Stephens'
/// finite-n correction t = (sqrt(n) + 0.12 + 0.11 / sqrt(n)) d.
double kolmogorov_pvalue(double d, double n);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    long n = 0;
};

/// One-sample Kolmogorov-Smirnov test of `sample` against a continuous cdf.
KsResult ks_test(std::vector<double> sample, const std::function<double(double)>& cdf);
KsResult ks_test_normal(std::vector<double> sample, double variance);
/// Two-sample test; the p-value uses the effective size n1 n2 / (n1 + n2).
KsResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Standard error of a statistic by resampling replica indices with
/// replacement. Resample b draws its indices from stream b of the bootstrap
/// domain, so the result is a pure function of (seed, n, statistic).
double bootstrap_std_error(long n, const std::function<double(std::span<const long>)>& statistic, int resamples,
                           std::uint64_t seed);

}  // namespace shelab
