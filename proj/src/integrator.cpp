#include "shelab/integrator.hpp"

#include <omp.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "kernels.hpp"
#include "shelab/gibbs.hpp"

namespace shelab {

namespace {

constexpr int kBatch = 64;

/// Advances kBatch replicas by one exponential Euler step. The batch width and
/// padded grid are fixed, so a replica's path depends only on its own initial
/// state and stream index.
///
/// The grid is folded about x = 1/2: e_j(1 - x) = (-1)^j e_j(x), so even and odd
/// modes are synthesized on the half grid and combined as u(x_k) = E_k + O_k,
/// u(x_{N-k}) = E_k - O_k. Analysis folds back the same way.
class BatchStepper {
public:
    BatchStepper(int modes, int grid_intervals, double dt, const PotentialSpec& spec, double noise_scale)
        : modes_(modes), nonlinear_(!spec.is_zero()) {
        const int slots = modes + 1;
        decay_.resize(slots);
        drift_weight_.resize(slots);
        noise_sd_.resize(slots);
        for (int j = 0; j < slots; ++j) {
            const double lambda = eigenvalue(j);
            decay_[j] = std::exp(-lambda * dt);
            drift_weight_[j] = phi1(lambda, dt);
            noise_sd_[j] = noise_scale * std::sqrt(convolution_variance(j, dt));
        }
        if (nonlinear_) {
            const SpectralBasis basis(modes, grid_intervals);
            const int n = grid_intervals;
            const int half = n / 2 + 1;  // k = 0..floor(N/2)
            const int rows = kernels::padded(half);
            even_ = modes / 2 + 1;
            odd_ = (modes + 1) / 2;
            syn_even_ = Eigen::MatrixXd::Zero(rows, even_);
            syn_odd_ = Eigen::MatrixXd::Zero(rows, std::max(odd_, 1));
            ana_even_ = Eigen::MatrixXd::Zero(even_, rows);
            ana_odd_ = Eigen::MatrixXd::Zero(std::max(odd_, 1), rows);
            phase_ = Eigen::VectorXd::Zero(2 * rows);
            for (int k = 0; k < half; ++k) {
                // Mirror rows of the middle node (N even) or of k = N - k duplicates carry half weight.
                const bool self_mirror = 2 * k == n;
                const double w = basis.weights()[k] * (self_mirror ? 0.5 : 1.0);
                for (int j = 0; j <= modes; ++j) {
                    const double e = basis.synthesis()(k, j);
                    if (j % 2 == 0) {
                        syn_even_(k, j / 2) = e;
                        ana_even_(j / 2, k) = w * e;
                    } else {
                        syn_odd_(k, j / 2) = e;
                        ana_odd_(j / 2, k) = w * e;
                    }
                }
                phase_[k] = phase_value(spec.phase(), basis.x(k));
                phase_[rows + k] = phase_value(spec.phase(), basis.x(n - k));
            }
            force_scale_ = 2.0 * std::numbers::pi * spec.amplitude();
            coeff_even_.resize(even_, kBatch);
            coeff_odd_ = Eigen::MatrixXd::Zero(std::max(odd_, 1), kBatch);
            grid_even_.resize(rows, kBatch);
            grid_odd_.resize(rows, kBatch);
            grid_.resize(2 * rows, kBatch);
            force_.resize(2 * rows, kBatch);
            fold_.resize(rows, kBatch);
            proj_even_.resize(even_, kBatch);
            proj_odd_.resize(std::max(odd_, 1), kBatch);
            rows_ = rows;
        }
        normals_.resize(kBatch, slots);
        scratch_.resize(4 * kBatch);
    }

    /// state is (J+1) x kBatch; drift_inc/noise_inc receive the mode-0 increments.
    void step(Eigen::MatrixXd& state, std::uint64_t seed, std::uint32_t step, std::uint32_t first_replica,
              double* drift_inc, double* noise_inc) {
        const int slots = modes_ + 1;
        kernels::dynamics_normals(seed, step, first_replica, slots, kBatch, normals_.data(), scratch_.data());
        if (nonlinear_) project_force(state);
        for (int r = 0; r < kBatch; ++r) {
            double* a = state.col(r).data();
            const double d0 = nonlinear_ ? drift_weight_[0] * proj_even_(0, r) : 0.0;
            const double n0 = noise_sd_[0] * normals_(r, 0);
            a[0] = a[0] + d0 + n0;
            drift_inc[r] = d0;
            noise_inc[r] = n0;
            for (int j = 1; j < slots; ++j) {
                const double drift =
                    nonlinear_ ? drift_weight_[j] * ((j % 2 == 0) ? proj_even_(j / 2, r) : proj_odd_(j / 2, r)) : 0.0;
                a[j] = decay_[j] * a[j] + drift + noise_sd_[j] * normals_(r, j);
            }
        }
    }

private:
    void project_force(const Eigen::MatrixXd& state) {
        for (int r = 0; r < kBatch; ++r) {
            for (int i = 0; i < even_; ++i) coeff_even_(i, r) = state(2 * i, r);
            for (int i = 0; i < odd_; ++i) coeff_odd_(i, r) = state(2 * i + 1, r);
            coeff_even_(0, r) -= std::floor(coeff_even_(0, r));
        }
        grid_even_.noalias() = syn_even_ * coeff_even_;
        grid_odd_.noalias() = syn_odd_ * coeff_odd_;
        grid_.topRows(rows_) = grid_even_ + grid_odd_;
        grid_.bottomRows(rows_) = grid_even_ - grid_odd_;
        kernels::sine_force(grid_.data(), phase_.data(), static_cast<int>(grid_.rows()), kBatch, force_scale_,
                            force_.data());
        fold_ = force_.topRows(rows_) + force_.bottomRows(rows_);
        proj_even_.noalias() = ana_even_ * fold_;
        fold_ = force_.topRows(rows_) - force_.bottomRows(rows_);
        proj_odd_.noalias() = ana_odd_ * fold_;
    }

    int modes_;
    bool nonlinear_;
    int even_ = 0, odd_ = 0, rows_ = 0;
    double force_scale_ = 0.0;
    Eigen::VectorXd decay_, drift_weight_, noise_sd_, phase_, scratch_;
    Eigen::MatrixXd syn_even_, syn_odd_, ana_even_, ana_odd_;
    Eigen::MatrixXd coeff_even_, coeff_odd_, grid_even_, grid_odd_, grid_, force_, fold_, proj_even_, proj_odd_;
    Eigen::MatrixXd normals_;
};

SpectralField single_step(const SpectralField& f, const PotentialSpec& spec, int grid_intervals, double dt,
                          RngStream& rng, double noise_scale) {
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    BatchStepper stepper(f.modes(), grid_intervals, dt, spec, noise_scale);
    Eigen::MatrixXd state = Eigen::MatrixXd::Zero(f.modes() + 1, kBatch);
    state.col(0) = f.coeffs;
    double drift[kBatch], noise[kBatch];
    stepper.step(state, rng.seed(), rng.counter(), rng.stream(), drift, noise);
    rng.skip(1);
    SpectralField out(Eigen::VectorXd(state.col(0)));
    if (!out.coeffs.allFinite()) throw std::runtime_error("non-finite state after step");
    return out;
}

}  // namespace

void SimConfig::validate() const {
    if (modes < 0) throw std::invalid_argument("mode truncation must be non-negative");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("time step must be positive");
    if (grid_intervals < 2 * modes || grid_intervals < 1)
        throw std::invalid_argument("grid too coarse: need N_x >= 2J (N_x = " + std::to_string(grid_intervals) +
                                    ", J = " + std::to_string(modes) + ")");
    if (!(horizon >= 0.0)) throw std::invalid_argument("horizon must be non-negative");
    const double ratio = horizon / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
        throw std::invalid_argument("horizon is not a whole number of time steps");
    if (record_stride < 1) throw std::invalid_argument("record stride must be positive");
    if (steps() % record_stride != 0) throw std::invalid_argument("step count is not a multiple of the record stride");
    if (static_cast<double>(start_step) + static_cast<double>(steps()) > 4294967295.0)
        throw std::invalid_argument("step counter exceeds 32 bits");
}

long SimConfig::steps() const { return std::lround(horizon / dt); }

EnsembleRecord::EnsembleRecord(std::vector<double> times, int replicas, int modes, int integrands)
    : times_(std::move(times)), replicas_(replicas), modes_(modes), integrands_(integrands) {
    const std::size_t cells = times_.size() * static_cast<std::size_t>(replicas);
    coeffs_.assign(cells * static_cast<std::size_t>(modes + 1), 0.0);
    drift_.assign(cells, 0.0);
    noise_.assign(cells, 0.0);
    paths_.assign(cells * static_cast<std::size_t>(integrands), 0.0);
}

SpectralField EnsembleRecord::state(long rec, int rep) const {
    SpectralField f(modes_);
    for (int j = 0; j <= modes_; ++j) f[j] = coeff(rec, rep, j);
    return f;
}

TrajectoryRecord EnsembleRecord::trajectory(int rep) const {
    TrajectoryRecord out;
    out.times = times_;
    out.path_integrals.assign(static_cast<std::size_t>(integrands_), {});
    for (long rec = 0; rec < records(); ++rec) {
        out.snapshots.push_back(state(rec, rep));
        out.drift_integral.push_back(drift(rec, rep));
        out.noise0.push_back(noise(rec, rep));
        for (int i = 0; i < integrands_; ++i) out.path_integrals[i].push_back(path_integral(rec, rep, i));
    }
    return out;
}

long EnsembleRecord::record_at(double t) const {
    for (long rec = 0; rec < records(); ++rec)
        if (std::abs(times_[rec] - t) <= 1e-9 * std::max(1.0, std::abs(t))) return rec;
    throw std::invalid_argument("no record at time " + std::to_string(t));
}

SpectralField linear_exact_step(const SpectralField& f, double dt, RngStream& rng, double noise_scale) {
    return single_step(f, make_zero_potential(), std::max(1, 2 * f.modes()), dt, rng, noise_scale);
}

SpectralField nonlinear_step(const SpectralField& f, const PotentialSpec& spec, int grid_intervals, double dt,
                             RngStream& rng, double noise_scale) {
    if (grid_intervals < 2 * f.modes()) throw std::invalid_argument("grid too coarse: need N_x >= 2J");
    return single_step(f, spec, grid_intervals, dt, rng, noise_scale);
}

namespace {

// record_steps: strictly increasing step counts relative to cfg.start_step, first entry 0.
EnsembleRecord run_ensemble(const SimConfig& cfg, const std::vector<SpectralField>& initial,
                            const PotentialSpec& spec, const std::vector<PathIntegrand>& integrands,
                            const std::vector<long>& record_steps) {
    const int replicas = static_cast<int>(initial.size());
    for (const auto& f : initial)
        if (f.modes() != cfg.modes) throw std::invalid_argument("initial state truncation does not match config");
    const long steps = record_steps.back();
    std::vector<double> times;
    for (long s : record_steps) times.push_back(cfg.time_of_step(static_cast<long>(cfg.start_step) + s));
    const int n_integrands = static_cast<int>(integrands.size());
    EnsembleRecord out(std::move(times), replicas, cfg.modes, n_integrands);

    const int slots = cfg.modes + 1;
    const int batches = (replicas + kBatch - 1) / kBatch;
    const int threads = resolve_workers(cfg.workers);
    std::string failure;

#pragma omp parallel num_threads(threads)
    {
        BatchStepper stepper(cfg.modes, cfg.grid_intervals, cfg.dt, spec, 1.0);
        Eigen::MatrixXd state(slots, kBatch);
        Eigen::VectorXd drift(kBatch), noise(kBatch), drift_inc(kBatch), noise_inc(kBatch);
        Eigen::MatrixXd paths(std::max(1, n_integrands), kBatch);
        std::vector<double> rep(static_cast<std::size_t>(slots));

#pragma omp for schedule(static)
        for (int b = 0; b < batches; ++b) {
            const int first = b * kBatch;
            const int width = std::min(kBatch, replicas - first);
            state.setZero();
            for (int c = 0; c < width; ++c) state.col(c) = initial[static_cast<std::size_t>(first + c)].coeffs;
            drift.setZero();
            noise.setZero();
            paths.setZero();

            auto record = [&](long rec) {
                for (int c = 0; c < width; ++c) {
                    for (int j = 0; j < slots; ++j) out.coeff(rec, first + c, j) = state(j, c);
                    out.drift(rec, first + c) = drift[c];
                    out.noise(rec, first + c) = noise[c];
                    for (int i = 0; i < n_integrands; ++i) out.path_integral(rec, first + c, i) = paths(i, c);
                }
            };
            record(0);
            long next = 1;
            bool ok = true;
            for (long n = 0; n < steps && ok; ++n) {
                if (n_integrands > 0) {
                    for (int c = 0; c < width; ++c) {
                        for (int j = 0; j < slots; ++j) rep[j] = state(j, c);
                        rep[0] -= std::floor(rep[0]);
                        for (int i = 0; i < n_integrands; ++i) paths(i, c) += cfg.dt * integrands[i](rep);
                    }
                }
                const auto step = static_cast<std::uint32_t>(cfg.start_step + n);
                stepper.step(state, cfg.seed, step, cfg.first_replica + static_cast<std::uint32_t>(first),
                             drift_inc.data(), noise_inc.data());
                drift += drift_inc;
                noise += noise_inc;
                if (!state.leftCols(width).allFinite()) {
                    ok = false;
#pragma omp critical(shelab_sim_failure)
                    if (failure.empty())
                        failure = "non-finite state in replica batch starting at " + std::to_string(first) +
                                  " after step " + std::to_string(step);
                }
                if (ok && next < static_cast<long>(record_steps.size()) && record_steps[next] == n + 1)
                    record(next++);
            }
        }
    }
    if (!failure.empty()) throw std::runtime_error(failure);
    return out;
}

}  // namespace

EnsembleRecord simulate_ensemble(const SimConfig& cfg, const std::vector<SpectralField>& initial,
                                 const PotentialSpec& spec, const std::vector<PathIntegrand>& integrands) {
    cfg.validate();
    std::vector<long> record_steps;
    for (long rec = 0; rec < cfg.records(); ++rec) record_steps.push_back(rec * cfg.record_stride);
    return run_ensemble(cfg, initial, spec, integrands, record_steps);
}

EnsembleRecord simulate_ensemble_at_steps(const SimConfig& cfg, const std::vector<SpectralField>& initial,
                                          const PotentialSpec& spec, std::vector<long> record_steps,
                                          const std::vector<PathIntegrand>& integrands) {
    if (record_steps.empty() || record_steps.front() != 0) record_steps.insert(record_steps.begin(), 0);
    for (std::size_t k = 1; k < record_steps.size(); ++k)
        if (record_steps[k] <= record_steps[k - 1])
            throw std::invalid_argument("record steps must be strictly increasing and positive");
    SimConfig full = cfg;
    full.horizon = static_cast<double>(record_steps.back()) * cfg.dt;
    full.record_stride = 1;
    full.validate();
    return run_ensemble(full, initial, spec, integrands, record_steps);
}

TrajectoryRecord simulate(const SimConfig& cfg, const SpectralField& initial, const PotentialSpec& spec) {
    return simulate_ensemble(cfg, {initial}, spec).trajectory(0);
}

double ou_char_functional(const SpectralField& l, double t) {
    double quad = 0.0;
    for (int j = 0; j <= l.modes(); ++j) quad += l[j] * l[j] * convolution_variance(j, t);
    return std::exp(-0.5 * quad);
}

}  // namespace shelab
