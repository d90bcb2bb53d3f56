#include "lagput/fd_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "lagput/errors.hpp"
#include "lagput/european.hpp"
#include "lagput/perpetual.hpp"

namespace lagput {

Eigen::VectorXd Grid::nodes() const
{
    return Eigen::VectorXd::LinSpaced(node_count(), x_min, x_max);
}

int Grid::nearest(double x) const
{
    const long i = std::lround((x - x_min) / h());
    return static_cast<int>(std::clamp<long>(i, 0, nx + 1));
}

std::pair<double, double> boundary_anchors(const MarketParams& params, double lag)
{
    if (lag > 0) {
        const auto sol = find_x_under(lag, params);
        return {sol.x_under, sol.x_bar};
    }
    return {standard_perpetual_boundary(params), 0.0};
}

Grid default_grid(const MarketParams& params, double lag, double tau_max, int nx, int nt)
{
    const auto [x_under, x_bar] = boundary_anchors(params, lag);
    return {x_under - 4, x_bar + 8, nx, tau_max, nt};
}

namespace {

void validate_span(const Grid& grid, double x_under, double x_bar)
{
    if (!(grid.x_min < x_under - 1))
        throw std::invalid_argument("grid must extend more than 1 below the perpetual boundary");
    if (!(grid.x_max > x_bar + 3))
        throw std::invalid_argument("grid must extend more than 3 above the theta zero crossing");
    if (grid.nx < 50)
        throw std::invalid_argument("grid needs at least 50 interior nodes");
}

}  // namespace

void validate_grid(const Grid& grid, double x_under, double x_bar)
{
    validate_span(grid, x_under, x_bar);
    if (grid.nt < 50)
        throw std::invalid_argument("grid needs at least 50 time steps");
    if (!(grid.tau_max > 0))
        throw std::invalid_argument("grid time horizon must be positive");
}

namespace {

/// Coefficients of the discrete stationary operator
/// (sigma^2/2) u'' + (r - q - sigma^2/2) u' - r u with central differences.
struct Stencil {
    double lower;
    double diag;
    double upper;
};

Stencil operator_stencil(const MarketParams& params, double h)
{
    const double s = params.half_variance() / (h * h);
    const double c = params.log_drift() / (2 * h);
    return {s - c, -2 * s - params.rate(), s + c};
}

struct LcpResult {
    int sweeps;
    double residual;
};

/// Projected SOR for  M u >= rhs, u >= obstacle, complementarity, with M
/// tridiagonal and constant along the diagonals. `u` holds all nodes; the two
/// end entries are fixed boundary values and only 1..n-2 are updated.
LcpResult psor(const Stencil& m, const Eigen::VectorXd& rhs, const Eigen::VectorXd& obstacle,
               Eigen::VectorXd& u, const PsorOptions& opts)
{
    const Eigen::Index last = u.size() - 1;
    const double inv_diag = 1.0 / m.diag;
    double residual = 0;
    for (int sweep = 1; sweep <= opts.max_iter; ++sweep) {
        for (Eigen::Index i = 1; i < last; ++i) {
            const double gs = (rhs[i] - m.lower * u[i - 1] - m.upper * u[i + 1]) * inv_diag;
            u[i] = std::max(obstacle[i], u[i] + opts.omega * (gs - u[i]));
        }
        residual = 0;
        for (Eigen::Index i = 1; i < last; ++i) {
            const double row = m.lower * u[i - 1] + m.diag * u[i] + m.upper * u[i + 1] - rhs[i];
            residual = std::max(residual, std::abs(std::min(u[i] - obstacle[i], row)));
        }
        if (residual <= opts.tol)
            return {sweep, residual};
    }
    throw SolverError("PSOR did not converge within " + std::to_string(opts.max_iter)
                          + " sweeps (worst residual " + std::to_string(residual) + ")",
                      residual);
}

struct ParabolicProblem {
    Eigen::VectorXd source;
    Eigen::VectorXd obstacle;
    Eigen::VectorXd initial;
    double left;
    double right;
};

/// One theta-weighted step (weight 1 = implicit Euler, 1/2 = Crank-Nicolson).
int advance(const Stencil& a, const ParabolicProblem& prob, double weight, double k, const Eigen::VectorXd& prev,
            Eigen::VectorXd& next, const PsorOptions& opts, SolveStats& stats)
{
    const Eigen::Index n = prev.size();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    const double explicit_part = (1 - weight) * k;
    for (Eigen::Index i = 1; i + 1 < n; ++i) {
        const double applied = a.lower * prev[i - 1] + a.diag * prev[i] + a.upper * prev[i + 1];
        rhs[i] = prev[i] + explicit_part * applied + k * prob.source[i];
    }
    const Stencil m{-weight * k * a.lower, 1 - weight * k * a.diag, -weight * k * a.upper};
    next = prev;
    next[0] = prob.left;
    next[n - 1] = prob.right;
    const LcpResult res = psor(m, rhs, prob.obstacle, next, opts);
    stats.total_sweeps += res.sweeps;
    stats.max_sweeps = std::max(stats.max_sweeps, res.sweeps);
    stats.max_residual = std::max(stats.max_residual, res.residual);
    return res.sweeps;
}

/// Crank-Nicolson with a Rannacher start: the first step is taken as two
/// implicit-Euler half steps.
Surface march(const MarketParams& params, const Grid& grid, const ParabolicProblem& prob, const PsorOptions& opts)
{
    const Stencil a = operator_stencil(params, grid.h());
    const double k = grid.dtau();
    Surface surface{grid, Eigen::MatrixXd(grid.nt + 1, grid.node_count()), prob.obstacle, {}};
    surface.values.row(0) = prob.initial.transpose();

    Eigen::VectorXd prev = prob.initial;
    Eigen::VectorXd next;
    advance(a, prob, 1.0, k / 2, prev, next, opts, surface.stats);
    prev = next;
    advance(a, prob, 1.0, k / 2, prev, next, opts, surface.stats);
    surface.values.row(1) = next.transpose();
    for (int level = 2; level <= grid.nt; ++level) {
        prev = next;
        advance(a, prob, 0.5, k, prev, next, opts, surface.stats);
        surface.values.row(level) = next.transpose();
    }
    return surface;
}

void check_horizon(const Grid& grid, double horizon)
{
    if (std::abs(grid.tau_max - horizon) > 1e-12 * std::max(1.0, horizon))
        throw std::invalid_argument("grid time horizon must equal the decision horizon");
}

}  // namespace

Surface solve_u(const MarketParams& params, const LagContract& contract, const Grid& grid, const PsorOptions& psor)
{
    if (!(contract.lag() > 0))
        throw std::invalid_argument("solve_u needs a positive lag");
    const auto sol = find_x_under(contract.lag(), params);
    validate_grid(grid, sol.x_under, sol.x_bar);
    check_horizon(grid, contract.decision_horizon());

    const Eigen::VectorXd x = grid.nodes();
    ParabolicProblem prob{theta(x, contract.lag(), params), Eigen::VectorXd::Zero(x.size()),
                          Eigen::VectorXd::Zero(x.size()), 0.0, u_infinity(grid.x_max, sol, params)};
    return march(params, grid, prob, psor);
}

Surface solve_v_lagged(const MarketParams& params, const LagContract& contract, const Grid& grid,
                       const PsorOptions& psor)
{
    if (contract.lag() == 0)
        return solve_v_standard(params, contract.maturity(), grid, psor);
    const auto sol = find_x_under(contract.lag(), params);
    validate_grid(grid, sol.x_under, sol.x_bar);
    check_horizon(grid, contract.decision_horizon());

    const Eigen::VectorXd x = grid.nodes();
    const Eigen::VectorXd p = put_price(x, contract.lag(), params);
    const Eigen::Index last = x.size() - 1;
    ParabolicProblem prob{Eigen::VectorXd::Zero(x.size()), p, p, p[0],
                          p[last] + u_infinity(grid.x_max, sol, params)};
    return march(params, grid, prob, psor);
}

Surface solve_v_standard(const MarketParams& params, double maturity, const Grid& grid, const PsorOptions& psor)
{
    validate_grid(grid, standard_perpetual_boundary(params), 0.0);
    check_horizon(grid, maturity);

    const Eigen::VectorXd x = grid.nodes();
    const double K = params.strike();
    const Eigen::VectorXd payoff = (K - K * x.array().exp()).max(0.0).matrix();
    ParabolicProblem prob{Eigen::VectorXd::Zero(x.size()), payoff, payoff, payoff[0], 0.0};
    return march(params, grid, prob, psor);
}

Grid stationary_grid(const MarketParams& params, double lag, int intervals)
{
    const auto sol = find_x_under(lag, params);
    return {sol.x_under - 2, sol.x_bar + 6, intervals - 1, 1.0, intervals};
}

StationarySolution solve_u_stationary(const MarketParams& params, double lag, const Grid& grid, PsorOptions psor)
{
    if (!(lag > 0))
        throw std::invalid_argument("solve_u_stationary needs a positive lag");
    const auto sol = find_x_under(lag, params);
    validate_span(grid, sol.x_under, sol.x_bar);
    if (psor.omega <= 0)
        psor.omega = 2.0 / (1.0 + std::sin(std::numbers::pi / (grid.nx + 1)));

    const Eigen::VectorXd x = grid.nodes();
    const Stencil a = operator_stencil(params, grid.h());
    const Stencil m{-a.lower, -a.diag, -a.upper};
    const Eigen::VectorXd rhs = theta(x, lag, params);
    const Eigen::VectorXd obstacle = Eigen::VectorXd::Zero(x.size());

    Eigen::VectorXd u = Eigen::VectorXd::Zero(x.size());
    u[x.size() - 1] = u_infinity(grid.x_max, sol, params);
    const LcpResult res = lagput::psor(m, rhs, obstacle, u, psor);

    StationarySolution out{x, u, grid.x_max, {res.sweeps, res.sweeps, res.residual}};
    const double threshold = default_threshold(psor);
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        if (u[i] > threshold) {
            out.x_under_numeric = x[i];
            break;
        }
    }
    return out;
}

double time_monotonicity_violation(const Surface& surface)
{
    double worst = 0;
    for (Eigen::Index k = 0; k + 1 < surface.values.rows(); ++k)
        worst = std::max(worst, (surface.values.row(k) - surface.values.row(k + 1)).maxCoeff());
    return worst;
}

double surface_value(const Surface& surface, int level, double x)
{
    const Grid& g = surface.grid;
    const double pos = (x - g.x_min) / g.h();
    const int i = std::clamp(static_cast<int>(std::floor(pos)), 0, g.nx);
    const double w = std::clamp(pos - i, 0.0, 1.0);
    return (1 - w) * surface.values(level, i) + w * surface.values(level, i + 1);
}

}  // namespace lagput
