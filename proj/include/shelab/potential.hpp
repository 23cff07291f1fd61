#pragma once

#include <string>

#include "shelab/spectral.hpp"

namespace shelab {

enum class PotentialKind { zero, sine_gordon };

/// Phase profiles theta(x) available to the sine-Gordon family.
enum class PhaseProfile {
    flat,    ///< theta(x) = 0
    linear,  ///< theta(x) = pi x
};

std::string to_string(PotentialKind kind);
std::string to_string(PhaseProfile profile);
PotentialKind parse_potential_kind(const std::string& name);
PhaseProfile parse_phase_profile(const std::string& name);

double phase_value(PhaseProfile profile, double x);

/// Periodic potential family V_x(u) with certified bounds.
///
/// The sine-Gordon member is V_x(u) = a cos(2 pi u + theta(x)), whose drift
/// -V'_x(u) = 2 pi a sin(2 pi u + theta(x)) has period one in u.
class PotentialSpec {
public:
    PotentialSpec() = default;

    PotentialKind kind() const { return kind_; }
    double amplitude() const { return amplitude_; }
    PhaseProfile phase() const { return phase_; }
    bool is_zero() const { return kind_ == PotentialKind::zero || amplitude_ == 0.0; }
    bool x_independent() const { return is_zero() || phase_ == PhaseProfile::flat; }

    double value(double x, double u) const;
    double derivative(double x, double u) const;
    double second_derivative(double x, double u) const;

    /// sup |V_x(u)|, the constant written M-bar in the Gibbs weight bound.
    double sup_abs_V() const;
    double sup_abs_dV() const;
    /// Global Lipschitz constant of V'_x, uniform in x.
    double lipschitz_dV() const;
    /// sup |V''_x(u)|; bounds the operator norm of the Hessian of the integrated potential.
    double sup_abs_d2V() const;

    friend PotentialSpec make_zero_potential();
    friend PotentialSpec make_sine_gordon(double amplitude, PhaseProfile phase);

private:
    PotentialKind kind_ = PotentialKind::zero;
    double amplitude_ = 0.0;
    PhaseProfile phase_ = PhaseProfile::flat;
};

PotentialSpec make_zero_potential();
PotentialSpec make_sine_gordon(double amplitude, PhaseProfile phase = PhaseProfile::flat);

/// int_0^1 V_x(v(x)) dx by the basis quadrature, evaluated on the quotient representative.
double integrated_potential(const SpectralField& v, const PotentialSpec& spec, const SpectralBasis& basis);

/// <V'(v), e_j> by the basis quadrature.
double projected_force(int j, const SpectralField& v, const PotentialSpec& spec, const SpectralBasis& basis);

/// Drift of <u, e_j>: V^{e_j}(v) = -lambda_j a_j - <V'(v), e_j>.
double drift_functional(int j, const SpectralField& v, const PotentialSpec& spec, const SpectralBasis& basis);

/// V^phi for a direction phi = sum_j c_j e_j given by its coefficients.
class DriftFunctional {
public:
    DriftFunctional(SpectralField direction, PotentialSpec spec, SpectralBasis basis);

    double operator()(const SpectralField& v) const;
    const SpectralField& direction() const { return direction_; }

private:
    SpectralField direction_;
    PotentialSpec spec_;
    SpectralBasis basis_;
};

/// log of the unnormalized Gibbs density relative to the free measure: -2 int V_x(v(x)) dx.
double gibbs_log_weight(const SpectralField& v, const PotentialSpec& spec, const SpectralBasis& basis);

/// x-collapsed potential W(theta) = int_0^1 V_x(theta) dx on the quadrature grid.
double collapsed_potential(double theta, const PotentialSpec& spec, const SpectralBasis& basis);

}  // namespace shelab
