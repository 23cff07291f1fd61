#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "shelab/potential.hpp"
#include "shelab/rng.hpp"
#include "shelab/spectral.hpp"

namespace shelab {

struct SimConfig {
    int modes = 32;
    int grid_intervals = 128;
    double dt = 1e-3;
    double horizon = 1.0;
    int record_stride = 1;
    std::uint64_t seed = 1;
    /// Global index of the first replica; replica r draws from stream first_replica + r.
    std::uint32_t first_replica = 0;
    /// Absolute index of the first step. Continuing a run from its final state with
    /// start_step = previous steps reproduces the uninterrupted run.
    std::uint32_t start_step = 0;
    int workers = 0;

    /// Throws std::invalid_argument on dt <= 0, N_x < 2J, a horizon that is not a
    /// whole number of steps, or a step count that is not a multiple of the stride.
    void validate() const;
    long steps() const;
    long records() const { return steps() / record_stride + 1; }
    double time_of_step(long step) const { return static_cast<double>(step) * dt; }
};

/// Additive path functional int_0^t g(u(r)) dr accumulated by the left-point rule.
/// The callback receives the quotient representative a_0..a_J of the state.
using PathIntegrand = std::function<double(std::span<const double>)>;

/// One trajectory: coefficient snapshots and the terms of the mean-mode
/// decomposition a_0(t) = a_0(0) + int_0^t V^{e_0}(u(r)) dr + <W_t, e_0>.
struct TrajectoryRecord {
    std::vector<double> times;
    std::vector<SpectralField> snapshots;
    std::vector<double> drift_integral;
    std::vector<double> noise0;
    /// path_integrals[i][rec] for the i-th requested integrand.
    std::vector<std::vector<double>> path_integrals;
};

/// Ensemble of replicas sharing a configuration, stored record-major.
class EnsembleRecord {
public:
    EnsembleRecord() = default;
    EnsembleRecord(std::vector<double> times, int replicas, int modes, int integrands);

    int replicas() const { return replicas_; }
    int modes() const { return modes_; }
    long records() const { return static_cast<long>(times_.size()); }
    int integrands() const { return integrands_; }
    const std::vector<double>& times() const { return times_; }

    double coeff(long rec, int rep, int j) const { return coeffs_[index(rec, rep) * stride() + j]; }
    double& coeff(long rec, int rep, int j) { return coeffs_[index(rec, rep) * stride() + j]; }
    double drift(long rec, int rep) const { return drift_[index(rec, rep)]; }
    double& drift(long rec, int rep) { return drift_[index(rec, rep)]; }
    double noise(long rec, int rep) const { return noise_[index(rec, rep)]; }
    double& noise(long rec, int rep) { return noise_[index(rec, rep)]; }
    double path_integral(long rec, int rep, int i) const { return paths_[index(rec, rep) * integrands_ + i]; }
    double& path_integral(long rec, int rep, int i) { return paths_[index(rec, rep) * integrands_ + i]; }

    SpectralField state(long rec, int rep) const;
    TrajectoryRecord trajectory(int rep) const;
    /// Record index whose time equals t to within 1e-9 relative; throws if absent.
    long record_at(double t) const;

private:
    std::size_t index(long rec, int rep) const {
        return static_cast<std::size_t>(rec) * static_cast<std::size_t>(replicas_) + static_cast<std::size_t>(rep);
    }
    std::size_t stride() const { return static_cast<std::size_t>(modes_ + 1); }

    std::vector<double> times_;
    int replicas_ = 0;
    int modes_ = 0;
    int integrands_ = 0;
    std::vector<double> coeffs_;
    std::vector<double> drift_;
    std::vector<double> noise_;
    std::vector<double> paths_;
};

/// Exact-in-law step of the linear equation: a_j <- exp(-lambda_j dt) a_j + xi_j,
/// xi_j ~ N(0, convolution_variance(j, dt)). Draws are keyed by
/// (rng.seed(), rng.stream(), rng.counter()); the counter advances by one.
SpectralField linear_exact_step(const SpectralField& f, double dt, RngStream& rng, double noise_scale = 1.0);

/// Exponential Euler step of the nonlinear equation with the drift -V'_x(u)
/// projected on the modes through a grid of grid_intervals intervals. The drift
/// is evaluated on the quotient representative; a_0 is returned unwrapped.
SpectralField nonlinear_step(const SpectralField& f, const PotentialSpec& spec, int grid_intervals, double dt,
                             RngStream& rng, double noise_scale = 1.0);

/// Iterates nonlinear_step for every replica. Throws std::runtime_error if any
/// state becomes non-finite.
EnsembleRecord simulate_ensemble(const SimConfig& cfg, const std::vector<SpectralField>& initial,
                                 const PotentialSpec& spec, const std::vector<PathIntegrand>& integrands = {});

/// As simulate_ensemble, but records only after the listed step counts (relative to
/// start_step, strictly increasing; step 0 is always recorded). cfg.horizon and
/// cfg.record_stride are ignored; the run lasts record_steps.back() steps.
EnsembleRecord simulate_ensemble_at_steps(const SimConfig& cfg, const std::vector<SpectralField>& initial,
                                          const PotentialSpec& spec, std::vector<long> record_steps,
                                          const std::vector<PathIntegrand>& integrands = {});

/// Single trajectory; identical to replica 0 of simulate_ensemble with the same config.
TrajectoryRecord simulate(const SimConfig& cfg, const SpectralField& initial, const PotentialSpec& spec);

/// exp(-1/2 sum_j l_j^2 convolution_variance(j, t)) = E cos <l, Z(t)> for the
/// stochastic convolution Z started at zero.
double ou_char_functional(const SpectralField& l, double t);

}  // namespace shelab
