#include "shelab/potential.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace shelab {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

std::string to_string(PotentialKind kind) { return kind == PotentialKind::zero ? "zero" : "sine_gordon"; }

std::string to_string(PhaseProfile profile) { return profile == PhaseProfile::flat ? "flat" : "linear"; }

PotentialKind parse_potential_kind(const std::string& name) {
    if (name == "zero") return PotentialKind::zero;
    if (name == "sine_gordon") return PotentialKind::sine_gordon;
    throw std::invalid_argument("unknown potential kind '" + name + "' (expected zero or sine_gordon)");
}

PhaseProfile parse_phase_profile(const std::string& name) {
    if (name == "flat" || name == "0") return PhaseProfile::flat;
    if (name == "linear" || name == "pi_x") return PhaseProfile::linear;
    throw std::invalid_argument("unknown phase profile '" + name + "' (expected flat or linear)");
}

double phase_value(PhaseProfile profile, double x) {
    return profile == PhaseProfile::flat ? 0.0 : std::numbers::pi * x;
}

PotentialSpec make_zero_potential() { return PotentialSpec{}; }

PotentialSpec make_sine_gordon(double amplitude, PhaseProfile phase) {
    if (!std::isfinite(amplitude)) throw std::invalid_argument("potential amplitude must be finite");
    PotentialSpec spec;
    spec.kind_ = PotentialKind::sine_gordon;
    spec.amplitude_ = amplitude;
    spec.phase_ = phase;
    return spec;
}

double PotentialSpec::value(double x, double u) const {
    if (is_zero()) return 0.0;
    return amplitude_ * std::cos(kTwoPi * u + phase_value(phase_, x));
}

double PotentialSpec::derivative(double x, double u) const {
    if (is_zero()) return 0.0;
    return -kTwoPi * amplitude_ * std::sin(kTwoPi * u + phase_value(phase_, x));
}

double PotentialSpec::second_derivative(double x, double u) const {
    if (is_zero()) return 0.0;
    return -kTwoPi * kTwoPi * amplitude_ * std::cos(kTwoPi * u + phase_value(phase_, x));
}

double PotentialSpec::sup_abs_V() const { return is_zero() ? 0.0 : std::abs(amplitude_); }
double PotentialSpec::sup_abs_dV() const { return kTwoPi * sup_abs_V(); }
double PotentialSpec::lipschitz_dV() const { return kTwoPi * kTwoPi * sup_abs_V(); }
double PotentialSpec::sup_abs_d2V() const { return lipschitz_dV(); }

double integrated_potential(const SpectralField& v, const PotentialSpec& spec, const SpectralBasis& basis) {
    if (spec.is_zero()) return 0.0;
    const Eigen::VectorXd grid = basis.to_grid(v.quotient_representative());
    double sum = 0.0;
    for (int k = 0; k < basis.grid_points(); ++k) sum += basis.weights()[k] * spec.value(basis.x(k), grid[k]);
    return sum;
}

double projected_force(int j, const SpectralField& v, const PotentialSpec& spec, const SpectralBasis& basis) {
    if (j < 0 || j > basis.modes()) throw std::invalid_argument("drift direction outside the truncation");
    if (spec.is_zero()) return 0.0;
    const Eigen::VectorXd grid = basis.to_grid(v.quotient_representative());
    double sum = 0.0;
    for (int k = 0; k < basis.grid_points(); ++k)
        sum += basis.analysis()(j, k) * spec.derivative(basis.x(k), grid[k]);
    return sum;
}

double drift_functional(int j, const SpectralField& v, const PotentialSpec& spec, const SpectralBasis& basis) {
    const double linear = j == 0 ? 0.0 : -eigenvalue(j) * v[j];
    return linear - projected_force(j, v, spec, basis);
}

DriftFunctional::DriftFunctional(SpectralField direction, PotentialSpec spec, SpectralBasis basis)
    : direction_(std::move(direction)), spec_(spec), basis_(std::move(basis)) {
    if (direction_.modes() > basis_.modes()) throw std::invalid_argument("direction exceeds the basis truncation");
}

double DriftFunctional::operator()(const SpectralField& v) const {
    double total = 0.0;
    for (int j = 0; j <= direction_.modes(); ++j)
        if (direction_[j] != 0.0) total += direction_[j] * drift_functional(j, v, spec_, basis_);
    return total;
}

double gibbs_log_weight(const SpectralField& v, const PotentialSpec& spec, const SpectralBasis& basis) {
    return -2.0 * integrated_potential(v, spec, basis);
}

double collapsed_potential(double theta, const PotentialSpec& spec, const SpectralBasis& basis) {
    if (spec.is_zero()) return 0.0;
    double sum = 0.0;
    for (int k = 0; k < basis.grid_points(); ++k) sum += basis.weights()[k] * spec.value(basis.x(k), theta);
    return sum;
}

}  // namespace shelab
