#include "shelab/gibbs.hpp"

#include <omp.h>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace shelab {

int resolve_workers(int workers) {
    if (workers < 0) throw std::invalid_argument("worker count must be non-negative");
    return workers == 0 ? omp_get_max_threads() : workers;
}

SpectralField sample_pi_w(int modes, RngStream& rng) {
    if (modes < 0) throw std::invalid_argument("mode truncation must be non-negative");
    SpectralField v(modes);
    v[0] = rng.uniform();
    for (int j = 1; j <= modes; ++j) v[j] = rng.normal() / (std::numbers::pi * j);
    return v;
}

GibbsSample sample_pi(const PotentialSpec& spec, const SpectralBasis& basis, RngStream& rng, long proposal_cap) {
    const double ceiling = 2.0 * spec.sup_abs_V();
    GibbsSample sample;
    while (sample.proposal_count < proposal_cap) {
        ++sample.proposal_count;
        SpectralField proposal = sample_pi_w(basis.modes(), rng);
        const double log_weight = gibbs_log_weight(proposal, spec, basis);
        if (log_weight > ceiling) throw std::logic_error("Gibbs weight exceeds the certified bound exp(2 M-bar)");
        const double u = rng.uniform();
        if (spec.is_zero() || u < std::exp(log_weight - ceiling)) {
            sample.field = std::move(proposal);
            sample.log_weight = log_weight;
            sample.accepted = true;
            return sample;
        }
    }
    throw std::runtime_error("sample_pi: proposal cap " + std::to_string(proposal_cap) +
                             " exceeded; the bound M-bar is likely mis-specified");
}

DensityRatio::DensityRatio(Function h, double sup) : h_(std::move(h)), sup_(sup) {
    if (!h_) throw std::invalid_argument("density function is empty");
    if (!std::isfinite(sup) || sup <= 0.0) throw std::invalid_argument("density must have a finite positive supremum");
}

GibbsSample sample_nu(const DensityRatio& density, const PotentialSpec& spec, const SpectralBasis& basis,
                      RngStream& rng, long proposal_cap) {
    long proposals = 0;
    while (proposals < proposal_cap) {
        GibbsSample candidate = sample_pi(spec, basis, rng, proposal_cap - proposals);
        proposals += candidate.proposal_count;
        const double h = density(candidate.field);
        if (!(h >= 0.0) || h > density.sup() * (1.0 + 1e-12))
            throw std::logic_error("density ratio outside [0, sup]");
        if (rng.uniform() * density.sup() < h) {
            candidate.proposal_count = proposals;
            return candidate;
        }
    }
    throw std::runtime_error("sample_nu: proposal cap " + std::to_string(proposal_cap) + " exceeded");
}

namespace {

template <class Draw>
std::vector<GibbsSample> sample_ensemble(int replicas, std::uint64_t seed, int workers, Draw draw) {
    if (replicas < 0) throw std::invalid_argument("replica count must be non-negative");
    std::vector<GibbsSample> out(static_cast<std::size_t>(replicas));
    const int threads = resolve_workers(workers);
    std::string failure;
#pragma omp parallel for schedule(static) num_threads(threads)
    for (int r = 0; r < replicas; ++r) {
        try {
            RngStream rng(seed, static_cast<std::uint32_t>(r), RngDomain::gibbs);
            out[static_cast<std::size_t>(r)] = draw(rng);
        } catch (const std::exception& e) {
#pragma omp critical(shelab_gibbs_failure)
            if (failure.empty()) failure = "replica " + std::to_string(r) + ": " + e.what();
        }
    }
    if (!failure.empty()) throw std::runtime_error(failure);
    return out;
}

}  // namespace

std::vector<GibbsSample> sample_pi_ensemble(const PotentialSpec& spec, const SpectralBasis& basis, int replicas,
                                            std::uint64_t seed, int workers) {
    return sample_ensemble(replicas, seed, workers, [&](RngStream& rng) { return sample_pi(spec, basis, rng); });
}

std::vector<GibbsSample> sample_nu_ensemble(const DensityRatio& density, const PotentialSpec& spec,
                                            const SpectralBasis& basis, int replicas, std::uint64_t seed,
                                            int workers) {
    return sample_ensemble(replicas, seed, workers,
                           [&](RngStream& rng) { return sample_nu(density, spec, basis, rng); });
}

}  // namespace shelab
