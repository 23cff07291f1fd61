#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "shelab/potential.hpp"
#include "shelab/spectral.hpp"
#include "shelab/stats.hpp"

namespace shelab {

struct GeneratorGrid {
    int truncation = 0;        ///< J_c: number of Gaussian coordinates a_1..a_Jc
    int theta_points = 512;    ///< periodic grid on [0,1) for the mean mode
    int gaussian_points = 48;  ///< cell-centred points per Gaussian coordinate (even)
    double k_sigma = 5.0;      ///< Gaussian coordinates cover +-k_sigma standard deviations
    int grid_intervals = 128;  ///< x-quadrature used to evaluate the integrated potential
};

/// Finite-volume discretization of the reduced generator restricted to the
/// coordinates (theta = a_0 mod 1, a_1, ..., a_Jc):
///
///     K f = (1/2) Laplacian f - sum_j lambda_j a_j d_j f - grad G . grad f
///         = (1 / (2 rho)) div(rho grad f),   rho = exp(-2G) prod_j exp(-lambda_j a_j^2).
///
/// Written in divergence form with node weights rho_i and edge weights rho_e,
///     (K f)_i = 1/(2 rho_i) sum_{e = (i,k)} rho_e (f_k - f_i) / h_e^2,
/// the operator is exactly self-adjoint in the discrete pi-inner product, so
/// E |grad f|^2 = 2 <f, -K f>_pi holds to rounding. Gaussian coordinates use
/// cell-centred nodes with the exact weight exp(-lambda a^2) at half nodes and
/// node weights chosen so the Ornstein-Uhlenbeck part is exact on linear
/// functions; the flux through both truncation boundaries is zero.
class TruncatedGenerator {
public:
    TruncatedGenerator(const PotentialSpec& spec, const GeneratorGrid& grid);

    const PotentialSpec& spec() const { return spec_; }
    const GeneratorGrid& grid() const { return grid_; }
    int truncation() const { return grid_.truncation; }
    int nodes() const { return static_cast<int>(weight_.size()); }
    /// Grid spacing per coordinate (index 0 is theta).
    double spacing(int dim) const { return spacing_[dim]; }
    int points(int dim) const { return extent_[dim]; }
    /// Coordinates (theta, a_1, ..., a_Jc) of node i.
    SpectralField node_state(int i) const;
    int node_index(const std::vector<int>& multi) const;
    std::vector<int> node_multi_index(int i) const;

    /// Normalized pi-weights of the nodes (sum to one).
    const Eigen::VectorXd& pi_weights() const { return pi_; }
    /// Drift functional V^{e_j} tabulated on the nodes, j <= J_c.
    Eigen::VectorXd drift_on_nodes(int j) const;

    /// K f on the nodes.
    Eigen::VectorXd apply(const Eigen::VectorXd& f) const;
    /// <f, g>_pi.
    double inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const;
    /// E_pi |grad f|^2 from edge differences.
    double gradient_energy(const Eigen::VectorXd& f) const;
    /// E_pi |grad f + e_dir|^2, the variance rate of the martingale part in direction e_dir.
    double shifted_gradient_energy(const Eigen::VectorXd& f, int direction) const;
    /// Node-wise Euclidean norm of the central-difference gradient, max over nodes.
    double sup_gradient(const Eigen::VectorXd& f) const;

    /// Sparse symmetric form: lambda D + L where D = diag(rho) and L the edge Laplacian.
    struct Edge {
        int from, to, dim;
        double weight;  ///< rho_e / (2 h_e^2), normalized like pi_weights
    };
    const std::vector<Edge>& edges() const { return edges_; }

private:
    PotentialSpec spec_;
    GeneratorGrid grid_;
    SpectralBasis basis_;
    std::vector<int> extent_;
    std::vector<double> spacing_;
    std::vector<double> lower_;
    Eigen::VectorXd weight_;  ///< unnormalized node weights rho_i
    Eigen::VectorXd pi_;
    double total_ = 0.0;
    std::vector<Edge> edges_;
};

struct CorrectorSolution {
    double lambda = 0.0;
    int direction = 0;
    Eigen::VectorXd f_values;
    /// ||f||_1^2 = <f, -K f>_pi = (1/2) E_pi |grad f|^2.
    double dirichlet_energy = 0.0;
    /// <V^{e_dir}, f>_pi, the upper bound for the Dirichlet energy.
    double drift_inner = 0.0;
    /// E_pi |grad f + e_dir|^2.
    double sigma2_lambda = 0.0;
    /// |E|grad f|^2 - 2 <f, -K f>_pi| with K f applied edge by edge.
    double dirichlet_identity_gap = 0.0;
    /// |lambda f - K f - V|_pi / |V|_pi.
    double residual = 0.0;

    bool energy_bound_holds(double tol = 1e-10) const {
        return dirichlet_energy <= drift_inner + tol * std::max(1.0, std::abs(drift_inner));
    }
};

/// Solves (lambda - K) f = V^{e_direction} with a sparse Cholesky factorization.
/// Throws std::invalid_argument for lambda <= 0 and std::runtime_error when the
/// relative residual |r|_pi / |V|_pi exceeds 1e-10.
CorrectorSolution solve_resolvent(const TruncatedGenerator& gen, double lambda, int direction = 0);

struct OracleResult {
    double sigma2 = 1.0;
    double z_plus = 1.0;   ///< int_0^1 exp(2W)
    double z_minus = 1.0;  ///< int_0^1 exp(-2W)
    PotentialSpec spec;

    /// Derivative of the limiting one-dimensional corrector, -1 + exp(2W(theta)) / z_plus.
    double corrector_derivative(double theta) const;
};

/// sigma^2 of the one-dimensional diffusion d theta = -W'(theta) dt + dB with
/// W(theta) = int_0^1 V_x(theta) dx, by adaptive quadrature:
/// sigma^2 = 1 / (int exp(2W) int exp(-2W)).
OracleResult oracle_1d(const PotentialSpec& spec);

/// W(theta) = int_0^1 V_x(theta) dx by adaptive quadrature in x.
double collapsed_potential_exact(double theta, const PotentialSpec& spec);

struct Extrapolation {
    std::vector<double> lambdas;
    std::vector<double> sigma2;
    double extrapolant = 1.0;
    /// |extrapolant - sigma2 at the smallest lambda|.
    double error_estimate = 0.0;
    /// False when the raw sequence is not monotone in lambda.
    bool monotone = true;
};

/// Linear-in-lambda extrapolation to lambda = 0 from the two smallest lambdas.
/// Solutions must have at least two distinct lambdas.
Extrapolation sigma2_extrapolate(const std::vector<CorrectorSolution>& solutions);

/// Gradient of a test functional with respect to (a_0, ..., a_J).
using AnsatzGradient = std::function<Eigen::VectorXd(const SpectralField&)>;

/// Monte Carlo estimate of E_pi |grad g + e_direction|^2 over the given pi samples;
/// every ansatz gives an upper bound for sigma^2_{e_direction}.
Estimate variational_bound(const AnsatzGradient& grad, const std::vector<SpectralField>& pi_samples,
                           int direction = 0);

/// The limiting 1-D corrector as an ansatz on the mean mode only.
AnsatzGradient one_dimensional_ansatz(const OracleResult& oracle);

/// sup over nodes not on the truncation boundary of a_1 of |K(-a_1) + V^{e_1}|.
/// Requires J_c >= 1.
double generator_consistency_check(const TruncatedGenerator& gen);

struct GradientBound {
    double lhs = 0.0;  ///< sup |grad f_lambda|
    double rhs = 0.0;  ///< sup|D V^{e_0}| / (lambda - |D^2 V|)
    double slack = 0.0;
    bool pass = false;
};

/// Periodic linear interpolation of a J_c = 0 grid function at theta (taken mod 1).
double interpolate_theta(const TruncatedGenerator& gen, const Eigen::VectorXd& f, double theta);

/// Checks sup |grad f_lambda| <= |D^2 V| / (lambda - |D^2 V|) + slack, using the
/// certified |D^2 V| as the bound for |D V^{e_0}| too. Requires lambda > |D^2 V|.
GradientBound gradient_bound_check(const TruncatedGenerator& gen, const CorrectorSolution& sol,
                                   double relative_slack = 1e-2);

}  // namespace shelab
