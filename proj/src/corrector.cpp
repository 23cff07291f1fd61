#include "shelab/corrector.hpp"

#include <Eigen/Sparse>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <numbers>
#include <stdexcept>
#include <string>

namespace shelab {

namespace {

using boost::math::quadrature::gauss_kronrod;

double pi_norm(const Eigen::VectorXd& pi, const Eigen::VectorXd& v) { return std::sqrt(pi.dot(v.cwiseAbs2())); }

}  // namespace

TruncatedGenerator::TruncatedGenerator(const PotentialSpec& spec, const GeneratorGrid& grid)
    : spec_(spec), grid_(grid), basis_(grid.truncation, std::max(grid.grid_intervals, 2 * grid.truncation)) {
    const int jc = grid.truncation;
    if (jc < 0 || jc > 2) throw std::invalid_argument("corrector truncation must be 0, 1 or 2");
    if (grid.theta_points < 4) throw std::invalid_argument("theta grid needs at least 4 points");
    if (jc > 0 && (grid.gaussian_points < 4 || grid.gaussian_points % 2 != 0))
        throw std::invalid_argument("Gaussian grid needs an even number (>= 4) of points");
    if (!(grid.k_sigma > 0.0)) throw std::invalid_argument("k_sigma must be positive");
    if (grid.grid_intervals < std::max(1, 2 * jc)) throw std::invalid_argument("grid too coarse: need N_x >= 2J");

    const int dims = jc + 1;
    extent_.assign(dims, grid.gaussian_points);
    spacing_.assign(dims, 0.0);
    lower_.assign(dims, 0.0);
    extent_[0] = grid.theta_points;
    spacing_[0] = 1.0 / grid.theta_points;
    // Half nodes carry the exact Gaussian weight gamma(a_{k+1/2}); node weights are
    // then fixed by (gamma_{k+1/2} - gamma_{k-1/2}) / (2 h gamma_k) = -lambda a_k, so the
    // discrete Ornstein-Uhlenbeck generator maps a_k to -lambda a_k at every node,
    // with gamma_{-1/2} = gamma_{n-1/2} = 0 closing both ends.
    std::vector<std::vector<double>> gamma(dims), edge(dims);
    gamma[0].assign(grid.theta_points, 1.0);
    edge[0].assign(grid.theta_points, 1.0);
    for (int d = 1; d < dims; ++d) {
        const int m = grid.gaussian_points;
        const double sigma = 1.0 / (std::numbers::pi * d);
        const double h = 2.0 * grid.k_sigma * sigma / m;
        const double lambda = eigenvalue(d);
        spacing_[d] = h;
        lower_[d] = -grid.k_sigma * sigma + 0.5 * h;
        edge[d].assign(m, 0.0);
        gamma[d].resize(m);
        for (int k = 0; k + 1 < m; ++k) {
            const double a = lower_[d] + (k + 0.5) * h;
            edge[d][k] = std::exp(-lambda * a * a);
        }
        for (int k = 0; k < m; ++k) {
            const double a = lower_[d] + k * h;
            const double below = k > 0 ? edge[d][k - 1] : 0.0;
            gamma[d][k] = (below - edge[d][k]) / (2.0 * h * lambda * a);
        }
    }

    int n = 1;
    for (int e : extent_) n *= e;
    weight_.resize(n);
    const bool flat = spec_.is_zero();
    auto potential_at = [&](const SpectralField& v) { return flat ? 0.0 : integrated_potential(v, spec_, basis_); };

    for (int i = 0; i < n; ++i) {
        const auto multi = node_multi_index(i);
        const SpectralField v = node_state(i);
        double g = 1.0;
        for (int d = 1; d < dims; ++d) g *= gamma[d][multi[d]];
        weight_[i] = g * std::exp(-2.0 * potential_at(v));
        for (int d = 0; d < dims; ++d) {
            const bool periodic = d == 0;
            if (!periodic && multi[d] + 1 >= extent_[d]) continue;
            auto next = multi;
            next[d] = periodic ? (multi[d] + 1) % extent_[d] : multi[d] + 1;
            SpectralField mid = v;
            mid[d] += 0.5 * spacing_[d];
            double w = std::exp(-2.0 * potential_at(mid));
            for (int o = 1; o < dims; ++o) w *= (o == d) ? edge[o][multi[o]] : gamma[o][multi[o]];
            edges_.push_back({i, node_index(next), d, w / (2.0 * spacing_[d] * spacing_[d])});
        }
    }
    total_ = weight_.sum();
    pi_ = weight_ / total_;
    for (auto& e : edges_) e.weight /= total_;
}

SpectralField TruncatedGenerator::node_state(int i) const {
    const auto multi = node_multi_index(i);
    SpectralField v(grid_.truncation);
    for (int d = 0; d <= grid_.truncation; ++d) v[d] = lower_[d] + multi[d] * spacing_[d];
    return v;
}

int TruncatedGenerator::node_index(const std::vector<int>& multi) const {
    int index = 0;
    for (int d = grid_.truncation; d >= 0; --d) index = index * extent_[d] + multi[d];
    return index;
}

std::vector<int> TruncatedGenerator::node_multi_index(int i) const {
    std::vector<int> multi(extent_.size());
    for (std::size_t d = 0; d < extent_.size(); ++d) {
        multi[d] = i % extent_[d];
        i /= extent_[d];
    }
    return multi;
}

Eigen::VectorXd TruncatedGenerator::drift_on_nodes(int j) const {
    if (j < 0 || j > grid_.truncation) throw std::invalid_argument("drift direction outside the corrector truncation");
    Eigen::VectorXd out(nodes());
    for (int i = 0; i < nodes(); ++i) out[i] = drift_functional(j, node_state(i), spec_, basis_);
    return out;
}

Eigen::VectorXd TruncatedGenerator::apply(const Eigen::VectorXd& f) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(nodes());
    for (const auto& e : edges_) {
        const double flux = e.weight * (f[e.to] - f[e.from]);
        out[e.from] += flux;
        out[e.to] -= flux;
    }
    return out.cwiseQuotient(pi_);
}

double TruncatedGenerator::inner(const Eigen::VectorXd& f, const Eigen::VectorXd& g) const {
    return pi_.dot(f.cwiseProduct(g));
}

double TruncatedGenerator::gradient_energy(const Eigen::VectorXd& f) const {
    double s = 0.0;
    for (const auto& e : edges_) {
        const double d = f[e.to] - f[e.from];
        s += 2.0 * e.weight * d * d;
    }
    return s;
}

double TruncatedGenerator::shifted_gradient_energy(const Eigen::VectorXd& f, int direction) const {
    // Directions beyond the truncation are orthogonal to every grid gradient.
    if (direction > grid_.truncation) return gradient_energy(f) + 1.0;
    double s = 0.0;
    for (const auto& e : edges_) {
        const double d = f[e.to] - f[e.from] + (e.dim == direction ? spacing_[e.dim] : 0.0);
        s += 2.0 * e.weight * d * d;
    }
    return s;
}

double TruncatedGenerator::sup_gradient(const Eigen::VectorXd& f) const {
    double sup = 0.0;
    for (int i = 0; i < nodes(); ++i) {
        const auto multi = node_multi_index(i);
        double norm2 = 0.0;
        for (int d = 0; d <= grid_.truncation; ++d) {
            auto lo = multi, hi = multi;
            double span = 2.0 * spacing_[d];
            if (d == 0) {
                lo[0] = (multi[0] + extent_[0] - 1) % extent_[0];
                hi[0] = (multi[0] + 1) % extent_[0];
            } else {
                lo[d] = std::max(0, multi[d] - 1);
                hi[d] = std::min(extent_[d] - 1, multi[d] + 1);
                span = (hi[d] - lo[d]) * spacing_[d];
            }
            const double g = (f[node_index(hi)] - f[node_index(lo)]) / span;
            norm2 += g * g;
        }
        sup = std::max(sup, std::sqrt(norm2));
    }
    return sup;
}

CorrectorSolution solve_resolvent(const TruncatedGenerator& gen, double lambda, int direction) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("resolvent parameter must be positive");
    const int n = gen.nodes();
    const Eigen::VectorXd& pi = gen.pi_weights();
    const Eigen::VectorXd rhs = gen.drift_on_nodes(direction);

    // Symmetric form: with y = D^{1/2} f, (lambda I + D^{-1/2} L D^{-1/2}) y = D^{1/2} V.
    const Eigen::VectorXd root = pi.cwiseSqrt();
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(static_cast<std::size_t>(n) + 4 * gen.edges().size());
    for (int i = 0; i < n; ++i) triplets.emplace_back(i, i, lambda);
    for (const auto& e : gen.edges()) {
        triplets.emplace_back(e.from, e.from, e.weight / pi[e.from]);
        triplets.emplace_back(e.to, e.to, e.weight / pi[e.to]);
        const double off = -e.weight / (root[e.from] * root[e.to]);
        triplets.emplace_back(e.from, e.to, off);
        triplets.emplace_back(e.to, e.from, off);
    }
    Eigen::SparseMatrix<double> system(n, n);
    system.setFromTriplets(triplets.begin(), triplets.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(system);
    if (solver.info() != Eigen::Success) throw std::runtime_error("sparse factorization of the resolvent failed");

    auto residual_of = [&](const Eigen::VectorXd& f) -> Eigen::VectorXd {
        return lambda * f - gen.apply(f) - rhs;
    };
    Eigen::VectorXd f = solver.solve(root.cwiseProduct(rhs)).cwiseQuotient(root);
    Eigen::VectorXd r = residual_of(f);
    const double scale = pi_norm(pi, rhs);
    auto relative = [&](const Eigen::VectorXd& res) { return pi_norm(pi, res) / (scale > 0.0 ? scale : 1.0); };
    for (int sweep = 0; sweep < 3 && relative(r) > 1e-13; ++sweep) {
        f -= solver.solve(root.cwiseProduct(r)).cwiseQuotient(root);
        r = residual_of(f);
    }

    CorrectorSolution sol;
    sol.lambda = lambda;
    sol.direction = direction;
    sol.residual = relative(r);
    if (!(sol.residual <= 1e-10))
        throw std::runtime_error("resolvent solve did not converge: relative residual " +
                                 std::to_string(sol.residual) + " at lambda " + std::to_string(lambda));
    const double grad2 = gen.gradient_energy(f);
    const double form = gen.inner(f, -gen.apply(f));
    sol.dirichlet_energy = 0.5 * grad2;
    sol.dirichlet_identity_gap = std::abs(grad2 - 2.0 * form);
    sol.drift_inner = gen.inner(rhs, f);
    sol.sigma2_lambda = gen.shifted_gradient_energy(f, direction);
    sol.f_values = std::move(f);
    return sol;
}

double collapsed_potential_exact(double theta, const PotentialSpec& spec) {
    if (spec.is_zero()) return 0.0;
    if (spec.x_independent()) return spec.value(0.0, theta);
    return gauss_kronrod<double, 31>::integrate([&](double x) { return spec.value(x, theta); }, 0.0, 1.0, 15,
                                                 1e-14);
}

double OracleResult::corrector_derivative(double theta) const {
    return -1.0 + std::exp(2.0 * collapsed_potential_exact(theta, spec)) / z_plus;
}

OracleResult oracle_1d(const PotentialSpec& spec) {
    OracleResult out;
    out.spec = spec;
    if (spec.is_zero()) return out;
    auto z = [&](double sign) {
        return gauss_kronrod<double, 61>::integrate(
            [&](double t) { return std::exp(sign * 2.0 * collapsed_potential_exact(t, spec)); }, 0.0, 1.0, 15,
            1e-14);
    };
    out.z_plus = z(1.0);
    out.z_minus = z(-1.0);
    out.sigma2 = 1.0 / (out.z_plus * out.z_minus);
    return out;
}

Extrapolation sigma2_extrapolate(const std::vector<CorrectorSolution>& solutions) {
    std::vector<std::pair<double, double>> points;
    for (const auto& s : solutions) points.emplace_back(s.lambda, s.sigma2_lambda);
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    if (points.size() < 2 || points[points.size() - 2].first == points.back().first)
        throw std::invalid_argument("extrapolation needs at least two distinct lambdas");
    Extrapolation out;
    for (const auto& [l, s] : points) {
        out.lambdas.push_back(l);
        out.sigma2.push_back(s);
    }
    const std::size_t m = points.size();
    const auto [l1, s1] = points[m - 2];
    const auto [l2, s2] = points[m - 1];
    const double slope = (s1 - s2) / (l1 - l2);
    out.extrapolant = s2 - slope * l2;
    out.error_estimate = std::abs(out.extrapolant - s2);
    int sign = 0;
    for (std::size_t i = 1; i < m; ++i) {
        const double diff = out.sigma2[i] - out.sigma2[i - 1];
        const int s = (diff > 0.0) - (diff < 0.0);
        if (s == 0) continue;
        if (sign != 0 && s != sign) out.monotone = false;
        sign = s;
    }
    return out;
}

Estimate variational_bound(const AnsatzGradient& grad, const std::vector<SpectralField>& pi_samples,
                           int direction) {
    if (pi_samples.size() < 2) throw std::invalid_argument("variational bound needs at least two samples");
    std::vector<double> values;
    values.reserve(pi_samples.size());
    for (const auto& v : pi_samples) {
        Eigen::VectorXd g = grad(v);
        if (direction >= g.size()) {
            const auto old = g.size();
            g.conservativeResize(direction + 1);
            g.tail(direction + 1 - old).setZero();
        }
        g[direction] += 1.0;
        values.push_back(g.squaredNorm());
    }
    return mean_estimate(values);
}

AnsatzGradient one_dimensional_ansatz(const OracleResult& oracle) {
    return [oracle](const SpectralField& v) {
        Eigen::VectorXd g = Eigen::VectorXd::Zero(v.modes() + 1);
        g[0] = oracle.corrector_derivative(v[0] - std::floor(v[0]));
        return g;
    };
}

double interpolate_theta(const TruncatedGenerator& gen, const Eigen::VectorXd& f, double theta) {
    if (gen.truncation() != 0) throw std::invalid_argument("theta interpolation needs a one-dimensional generator");
    const int n = gen.points(0);
    const double pos = (theta - std::floor(theta)) * n;
    const int k = std::min(n - 1, static_cast<int>(pos));
    const double w = pos - k;
    return (1.0 - w) * f[k] + w * f[(k + 1) % n];
}

double generator_consistency_check(const TruncatedGenerator& gen) {
    if (gen.truncation() < 1) throw std::invalid_argument("consistency check needs a Gaussian coordinate");
    Eigen::VectorXd f(gen.nodes());
    for (int i = 0; i < gen.nodes(); ++i) f[i] = -gen.node_state(i)[1];
    const Eigen::VectorXd kf = gen.apply(f);
    const Eigen::VectorXd target = -gen.drift_on_nodes(1);
    double sup = 0.0;
    for (int i = 0; i < gen.nodes(); ++i) {
        const int k = gen.node_multi_index(i)[1];
        if (k == 0 || k == gen.points(1) - 1) continue;
        sup = std::max(sup, std::abs(kf[i] - target[i]));
    }
    return sup;
}

GradientBound gradient_bound_check(const TruncatedGenerator& gen, const CorrectorSolution& sol,
                                   double relative_slack) {
    if (sol.direction != 0) throw std::invalid_argument("gradient bound applies to the mean-mode corrector");
    const double l = gen.spec().sup_abs_d2V();
    if (!(sol.lambda > l)) throw std::invalid_argument("gradient bound needs lambda > |D^2 V|");
    GradientBound out;
    out.lhs = gen.sup_gradient(sol.f_values);
    out.rhs = l / (sol.lambda - l);
    out.slack = relative_slack * out.rhs + 1e-12;
    out.pass = out.lhs <= out.rhs + out.slack;
    return out;
}

}  // namespace shelab
