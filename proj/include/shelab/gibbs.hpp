#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "shelab/potential.hpp"
#include "shelab/rng.hpp"
#include "shelab/spectral.hpp"

namespace shelab {

struct GibbsSample {
    SpectralField field;  ///< a_0 in [0,1) is the quotient representative
    double log_weight = 0.0;
    bool accepted = false;
    long proposal_count = 0;
};

inline constexpr long kDefaultProposalCap = 1'000'000;

/// Free measure pi_w in cosine coordinates: a_0 ~ U[0,1), a_j ~ N(0, 1/(pi^2 j^2)).
SpectralField sample_pi_w(int modes, RngStream& rng);

/// Exact rejection sampler for the reduced Gibbs measure
/// pi(dv) proportional to exp(-2 int V_x(v(x)) dx) pi_w(dv).
/// Proposals from pi_w are accepted with probability exp(log_weight - 2 M-bar).
/// Throws std::runtime_error when the proposal cap is exceeded.
GibbsSample sample_pi(const PotentialSpec& spec, const SpectralBasis& basis, RngStream& rng,
                      long proposal_cap = kDefaultProposalCap);

/// Bounded density h with respect to pi, with a known supremum.
class DensityRatio {
public:
    using Function = std::function<double(const SpectralField&)>;

    /// Rejects a non-finite or non-positive supremum.
    DensityRatio(Function h, double sup);

    double operator()(const SpectralField& v) const { return h_(v); }
    double sup() const { return sup_; }

private:
    Function h_;
    double sup_;
};

/// Samples nu(dv) = h(v) pi(dv) / Z by rejection against pi.
GibbsSample sample_nu(const DensityRatio& density, const PotentialSpec& spec, const SpectralBasis& basis,
                      RngStream& rng, long proposal_cap = kDefaultProposalCap);

/// Replica-indexed ensemble; replica r uses stream r of the Gibbs domain, so
/// the result does not depend on the worker count.
std::vector<GibbsSample> sample_pi_ensemble(const PotentialSpec& spec, const SpectralBasis& basis, int replicas,
                                            std::uint64_t seed, int workers = 0);

std::vector<GibbsSample> sample_nu_ensemble(const DensityRatio& density, const PotentialSpec& spec,
                                            const SpectralBasis& basis, int replicas, std::uint64_t seed,
                                            int workers = 0);

/// Number of OpenMP workers to use; 0 selects the runtime default.
int resolve_workers(int workers);

}  // namespace shelab
