#pragma once

#include <Eigen/Dense>

namespace shelab {

/// Decay rate of mode j under the Neumann heat semigroup generated by
/// (1/2) d^2/dx^2: lambda_j = pi^2 j^2 / 2.
double eigenvalue(int j);

struct Eigenpair {
    int j = 0;
    double lambda = 0.0;
};

Eigenpair eigenpair(int j);

/// Cosine eigenbasis of the Neumann Laplacian on [0,1]:
/// e_0 = 1, e_j(x) = sqrt(2) cos(pi j x).
double eval_basis(int j, double x);

/// Truncated cosine-coefficient representation a_0..a_J of a state on [0,1].
struct SpectralField {
    Eigen::VectorXd coeffs;

    SpectralField() = default;
    explicit SpectralField(int modes) : coeffs(Eigen::VectorXd::Zero(modes + 1)) {}
    explicit SpectralField(Eigen::VectorXd c) : coeffs(std::move(c)) {}

    int modes() const { return static_cast<int>(coeffs.size()) - 1; }
    double operator[](int j) const { return coeffs[j]; }
    double& operator[](int j) { return coeffs[j]; }

    /// Representative of the class of v modulo integer constants, a_0 in [0,1).
    SpectralField quotient_representative() const;
    /// v + c * 1 (constant shift acts on the mean mode only).
    SpectralField shifted(double c) const;
};

/// Trapezoid quadrature on N+1 uniform points, paired with the first J+1
/// basis functions. Products e_i e_j with i + j < 2N are integrated exactly.
class SpectralBasis {
public:
    SpectralBasis(int modes, int grid_intervals);

    int modes() const { return modes_; }
    int grid_intervals() const { return intervals_; }
    int grid_points() const { return intervals_ + 1; }
    double x(int k) const { return static_cast<double>(k) / intervals_; }

    const Eigen::VectorXd& weights() const { return weights_; }
    /// (N+1) x (J+1): entry (k, j) = e_j(x_k).
    const Eigen::MatrixXd& synthesis() const { return synthesis_; }
    /// (J+1) x (N+1): entry (j, k) = w_k e_j(x_k).
    const Eigen::MatrixXd& analysis() const { return analysis_; }

    Eigen::VectorXd to_grid(const SpectralField& f) const;
    SpectralField to_spectral(const Eigen::VectorXd& grid) const;
    double integrate(const Eigen::VectorXd& grid) const { return weights_.dot(grid); }

private:
    int modes_;
    int intervals_;
    Eigen::VectorXd weights_;
    Eigen::MatrixXd synthesis_;
    Eigen::MatrixXd analysis_;
};

Eigen::VectorXd to_grid(const SpectralField& f, int grid_intervals);
SpectralField to_spectral(const Eigen::VectorXd& grid, int modes);

/// Heat semigroup S(t): coefficient j is multiplied by exp(-lambda_j t).
SpectralField semigroup_apply(double t, const SpectralField& f);

/// Var <int_0^t S(t-r) dW_r, e_j>: t for j = 0, (1 - exp(-pi^2 j^2 t)) / (pi^2 j^2) otherwise.
double convolution_variance(int j, double t);

/// (1 - exp(-lambda dt)) / lambda, equal to dt at lambda = 0.
double phi1(double lambda, double dt);

}  // namespace shelab
