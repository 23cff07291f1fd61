#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "shelab/corrector.hpp"
#include "shelab/integrator.hpp"
#include "shelab/stats.hpp"

namespace shelab {

/// Diffusive rescaling: macroscopic time t corresponds to microscopic time t / eps^2.
struct ScalingParams {
    double epsilon = 0.1;
    double horizon = 1.0;       ///< macroscopic T
    std::vector<double> times;  ///< observation times 0 < t_1 < ... < t_m <= T

    double micro_time(double t) const { return t / (epsilon * epsilon); }
    /// Throws std::invalid_argument unless eps > 0, the times are increasing in
    /// (0, T], and the microscopic horizon is a whole number of steps of dt.
    void validate(double dt) const;
};

/// One pass/fail decision; it always carries its statistic, threshold and sample size.
struct Check {
    std::string name;
    double statistic = 0.0;
    double threshold = 0.0;
    std::string relation;  ///< how statistic is compared with threshold: "<=", ">=", "<", ">"
    bool pass = false;
    long n = 0;
    bool mandatory = true;
};

/// Evaluates `statistic relation threshold`.
Check make_check(std::string name, double statistic, std::string relation, double threshold, long n,
                 bool mandatory = true);

struct TestReport {
    std::string test;
    std::vector<Check> checks;
    std::map<std::string, Estimate> estimates;
    std::map<std::string, double> values;
    std::uint64_t seed = 0;
    std::string config_hash;

    /// True when every mandatory check passes.
    bool pass() const;
    const Check& check(const std::string& name) const;
    nlohmann::json to_json() const;
};

/// Least-squares slope of Var[a_0(t) - a_0(0)] against t over records with
/// t in [t_a, t_b]; standard error from `bootstrap` replica resamples.
/// Throws std::invalid_argument when fewer than 10 records fall in the window.
Estimate estimate_sigma2_direct(const EnsembleRecord& ens, double t_a, double t_b, int bootstrap = 200,
                                std::uint64_t seed = 1);

/// KS test of (a_0(t) - a_0(0)) / sqrt(t) against N(0, sigma2_ref).
TestReport clt_test(const EnsembleRecord& ens, double t, double sigma2_ref, double level = 0.01);

struct ModeDecayOptions {
    std::vector<double> epsilons{0.2, 0.1};
    double horizon = 1.0;
    std::vector<int> modes{1, 2, 3, 4};
    double tolerance = 0.25;  ///< relative tolerance on the eps^2 ratio
};

/// Scaled second moments eps^2 E[a_j(eps^-2 T)^2] for j >= 1 must shrink like
/// eps^2 between successive eps, while the mean-mode control
/// eps^2 E[a_0(eps^-2 T)^2 - a_0(0)^2] stays of order sigma^2 T.
/// Ratio checks are advisory (not mandatory) while the tolerance is below three
/// standard errors of the ratio, i.e. for small ensembles.
TestReport mode_decay_test(const EnsembleRecord& ens, const ModeDecayOptions& opt);

struct IpOptions {
    double level = 0.01;
    double covariance_tolerance = 0.10;
    double correlation_max = 0.05;
};

/// Finite-dimensional checks of eps (a_0(eps^-2 t) - a_0(0)) => sigma B_t:
/// covariance sigma^2 min(s, t), uncorrelated disjoint increments, Gaussian marginals.
/// The covariance and correlation checks are advisory while their fixed tolerance is
/// below three sampling standard errors; the KS checks are always mandatory.
TestReport ip_test(const EnsembleRecord& ens, const ScalingParams& scaling, double sigma2_ref,
                   const IpOptions& opt = {});

/// Mean over replicas of eps * max over the observation times of sqrt(2) sum_{j>=1} |a_j|,
/// an upper bound for the sup-norm of the rescaled fluctuation field.
Estimate fluctuation_sup_norm(const EnsembleRecord& ens, const ScalingParams& scaling);

struct TightnessOptions {
    double time = 1.0;  ///< t at which spatial increments are taken (a record time)
    double x0 = 0.3;
    std::vector<double> spatial_steps{0.25, 0.125, 0.0625, 0.03125, 0.015625};
    std::vector<double> temporal_steps{1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512, 1.0 / 1024};
    double spatial_exponent_min = 0.9;
    double temporal_exponent_min = 0.45;
};

/// Increment variance of E|Z(t, 0) - Z(t, 1)|^2 for the non-zero modes of the
/// linear field, sum_{j >= 1} convolution_variance(j, t) (e_j(0) - e_j(1))^2.
double endpoint_increment_variance(int modes, double t);

/// On a zero-potential ensemble started at 0: endpoint increment variance vs the
/// series, and log-log exponents of the spatial and temporal increment variances.
TestReport tightness_covariance_check(const EnsembleRecord& ens, const TightnessOptions& opt = {});

/// Empirical E cos <l, Z(t)> against exp(-<Q_t l, l>/2) for a zero-start linear ensemble.
TestReport ou_characteristic_check(const EnsembleRecord& ens, const std::vector<SpectralField>& directions,
                                   const std::vector<double>& times);

/// Path integrands g(theta) = f_lambda(theta) for each tabulated J_c = 0 corrector,
/// to be accumulated by simulate_ensemble.
std::vector<PathIntegrand> corrector_integrands(const TruncatedGenerator& gen,
                                                const std::vector<CorrectorSolution>& solutions);

/// Dynkin martingale M = f(u_t) - f(u_0) - int K f dr on a stationary one-mode chain,
/// using K f = lambda f - V^{e_0}. Checks E[M(t)^2] / t = E_pi (f')^2 for each lambda
/// and that Var[R(t)] / t, R = int V^{e_0} - M, decreases as lambda decreases.
/// The ensemble must carry corrector_integrands(gen, solutions) in that order.
TestReport dynkin_martingale_check(const EnsembleRecord& ens, const TruncatedGenerator& gen,
                                   const std::vector<CorrectorSolution>& solutions, double t);

}  // namespace shelab
