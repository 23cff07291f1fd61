#include "shelab/spectral.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace shelab {

namespace {

constexpr double kPi = std::numbers::pi;

void require_mode(int j) {
    if (j < 0) throw std::invalid_argument("mode index must be non-negative, got " + std::to_string(j));
}

}  // namespace

double eigenvalue(int j) {
    require_mode(j);
    return 0.5 * kPi * kPi * static_cast<double>(j) * static_cast<double>(j);
}

Eigenpair eigenpair(int j) { return {j, eigenvalue(j)}; }

double eval_basis(int j, double x) {
    require_mode(j);
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("basis evaluation point outside [0,1]");
    if (j == 0) return 1.0;
    return std::numbers::sqrt2 * std::cos(kPi * j * x);
}

SpectralField SpectralField::quotient_representative() const {
    SpectralField rep = *this;
    rep.coeffs[0] -= std::floor(rep.coeffs[0]);
    // floor can leave exactly 1.0 when a_0 is a tiny negative number
    if (rep.coeffs[0] >= 1.0) rep.coeffs[0] = 0.0;
    return rep;
}

SpectralField SpectralField::shifted(double c) const {
    SpectralField out = *this;
    out.coeffs[0] += c;
    return out;
}

SpectralBasis::SpectralBasis(int modes, int grid_intervals) : modes_(modes), intervals_(grid_intervals) {
    if (modes < 0) throw std::invalid_argument("mode truncation must be non-negative");
    if (grid_intervals < 1) throw std::invalid_argument("grid needs at least one interval");
    if (grid_intervals < 2 * modes)
        throw std::invalid_argument("grid too coarse: N_x = " + std::to_string(grid_intervals) +
                                    " < 2J = " + std::to_string(2 * modes) + " aliases the basis");
    const int points = grid_intervals + 1;
    const double h = 1.0 / grid_intervals;
    weights_ = Eigen::VectorXd::Constant(points, h);
    weights_[0] = weights_[points - 1] = 0.5 * h;
    synthesis_.resize(points, modes + 1);
    for (int k = 0; k < points; ++k)
        for (int j = 0; j <= modes; ++j) synthesis_(k, j) = eval_basis(j, x(k));
    analysis_ = synthesis_.transpose() * weights_.asDiagonal();
}

Eigen::VectorXd SpectralBasis::to_grid(const SpectralField& f) const {
    if (f.modes() != modes_) throw std::invalid_argument("field truncation does not match basis");
    return synthesis_ * f.coeffs;
}

SpectralField SpectralBasis::to_spectral(const Eigen::VectorXd& grid) const {
    if (grid.size() != grid_points()) throw std::invalid_argument("grid size does not match basis");
    return SpectralField(Eigen::VectorXd(analysis_ * grid));
}

Eigen::VectorXd to_grid(const SpectralField& f, int grid_intervals) {
    return SpectralBasis(f.modes(), grid_intervals).to_grid(f);
}

SpectralField to_spectral(const Eigen::VectorXd& grid, int modes) {
    return SpectralBasis(modes, static_cast<int>(grid.size()) - 1).to_spectral(grid);
}

SpectralField semigroup_apply(double t, const SpectralField& f) {
    if (!(t >= 0.0)) throw std::invalid_argument("semigroup time must be non-negative");
    SpectralField out = f;
    for (int j = 1; j <= f.modes(); ++j) out.coeffs[j] *= std::exp(-eigenvalue(j) * t);
    return out;
}

double convolution_variance(int j, double t) {
    require_mode(j);
    if (!(t >= 0.0)) throw std::invalid_argument("horizon must be non-negative");
    if (j == 0) return t;
    const double rate = 2.0 * eigenvalue(j);
    return -std::expm1(-rate * t) / rate;
}

double phi1(double lambda, double dt) {
    if (lambda == 0.0) return dt;
    return -std::expm1(-lambda * dt) / lambda;
}

}  // namespace shelab
