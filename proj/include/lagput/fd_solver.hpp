#pragma once

// Crank-Nicolson / PSOR solver for the obstacle problems in log-moneyness
// x = ln(X/K) and remaining decision time tau:
//
//   u        : premium over the European put, source theta, obstacle 0
//   V^delta  : lagged American put, obstacle P(T - delta, .)
//   V^0      : standard American put, obstacle (K - X)^+
//   u_inf    : stationary (elliptic) version of the u problem
//
// plus boundary extraction, the early-exercise-premium integral and the
// lag / maturity studies built on top of them.

#include <string>
#include <vector>

#include <Eigen/Core>

#include "lagput/model.hpp"
#include "lagput/perpetual.hpp"

namespace lagput {

struct Grid {
    double x_min = 0;
    double x_max = 0;
    int nx = 0;          ///< interior node count; nodes 0 and nx+1 carry boundary values
    double tau_max = 0;
    int nt = 0;

    double h() const { return (x_max - x_min) / (nx + 1); }
    double dtau() const { return tau_max / nt; }
    double x(int i) const { return x_min + i * h(); }
    double tau(int k) const { return k * dtau(); }
    int node_count() const { return nx + 2; }
    Eigen::VectorXd nodes() const;
    /// Index of the node nearest to x.
    int nearest(double x) const;
};

/// Span [X_ - 4, X^- + 8] around the perpetual boundary and the theta zero.
Grid default_grid(const MarketParams& params, double lag, double tau_max, int nx = 600, int nt = 600);

/// Throws std::invalid_argument unless x_min < x_under - 1, x_max > x_bar + 3,
/// nx >= 50 and nt >= 50.
void validate_grid(const Grid& grid, double x_under, double x_bar);

/// The (x_under, x_bar) pair that anchors grids: the perpetual solution for a
/// positive lag, and (ln(l_-/(l_- - 1)), 0) for the standard put.
std::pair<double, double> boundary_anchors(const MarketParams& params, double lag);

struct PsorOptions {
    double omega = 1.5;
    double tol = 1e-9;
    int max_iter = 10000;
};

struct SolveStats {
    long total_sweeps = 0;
    int max_sweeps = 0;
    double max_residual = 0;   ///< worst discrete complementarity residual over all steps
};

/// Node values over (tau_k, x_i): row k is time level k, column i is node i.
struct Surface {
    Grid grid;
    Eigen::MatrixXd values;
    Eigen::VectorXd obstacle;
    SolveStats stats;

    /// values - obstacle, row by row.
    Eigen::MatrixXd excess() const { return values.rowwise() - obstacle.transpose(); }
};

Surface solve_u(const MarketParams& params, const LagContract& contract, const Grid& grid,
                const PsorOptions& psor = {});

/// V^delta in (tau, x); a zero lag is routed to solve_v_standard.
Surface solve_v_lagged(const MarketParams& params, const LagContract& contract, const Grid& grid,
                       const PsorOptions& psor = {});

Surface solve_v_standard(const MarketParams& params, double maturity, const Grid& grid,
                         const PsorOptions& psor = {});

struct StationarySolution {
    Eigen::VectorXd x;
    Eigen::VectorXd values;
    double x_under_numeric;
    SolveStats stats;
};

/// Elliptic obstacle solve of -L u = theta, u >= 0 on [x_min, x_max] with
/// u(x_min) = 0 and u(x_max) = u_inf(x_max). `grid.tau_max`/`grid.nt` are
/// ignored. omega <= 0 selects the near-optimal SOR factor for the grid.
StationarySolution solve_u_stationary(const MarketParams& params, double lag, const Grid& grid,
                                      PsorOptions psor = {0.0, 1e-10, 200000});

/// 1-d grid spanning [X_ - 2, X^- + 6] with `intervals` cells.
Grid stationary_grid(const MarketParams& params, double lag, int intervals);

struct Boundary {
    std::vector<double> taus;
    std::vector<double> xs;
};

/// Smallest node x_i with excess > threshold at each level k >= 1. Level 1 may
/// be skipped if it is still flat; any later flat level is an error.
Boundary extract_boundary(const Surface& surface, double threshold);

/// Threshold used when none is given: ten PSOR tolerances.
inline double default_threshold(const PsorOptions& psor) { return 10 * psor.tol; }

struct BoundaryShape {
    double band_excess = 0;      ///< worst distance outside [x_under - 2h, x_bar + 2h]
    double worst_rise = 0;       ///< largest x(tau_{k+1}) - min_{j<=k} x(tau_j)
    bool corners_decreasing = false;
    double first_level_gap = 0;  ///< |x(first level) - x_bar|
    int corners = 0;
};

/// Shape diagnostics of a grid-resolved boundary. The staircase is reduced to
/// its corners (the first level at which each new minimum is reached); the
/// piecewise-linear interpolant through them must fall strictly between any
/// two levels `window` steps apart, up to the last corner.
BoundaryShape assess_boundary(const Boundary& boundary, double h, double x_under, double x_bar, int window = 5);

/// Sub-cell estimate: near the free boundary the excess grows quadratically,
/// so sqrt(excess) is extrapolated linearly to zero from the first two
/// continuation nodes and clamped to the cell left of the detected node.
Boundary refine_boundary(const Surface& surface, const Boundary& coarse);

/// Boundary in calendar time and stock price, sorted by t ascending, with the
/// known end point (t = end_time, X = end_value) appended.
struct CalendarBoundary {
    std::vector<double> ts;
    std::vector<double> stocks;
    double at(double t) const;
};

CalendarBoundary to_calendar(const Boundary& boundary, const MarketParams& params, double horizon,
                             double end_value);

/// Value of a surface at calendar level `tau` (must be a grid level) and log-moneyness x, by
/// linear interpolation in x.
double surface_value(const Surface& surface, int level, double x);

/// e(t, X) = int_t^T ds int_0^{X0(s)} (rK - q xi) p(t, X; s, xi) d xi with p the discounted
/// lognormal transition density.
double early_exercise_premium(const MarketParams& params, double maturity, double t, double stock,
                              const CalendarBoundary& boundary_std, double tol = 1e-7);

/// Largest violation of u[k+1][i] >= u[k][i] (0 if none).
double time_monotonicity_violation(const Surface& surface);

struct Violation {
    std::string kind;
    double lag_a = 0;
    double lag_b = 0;
    double t = 0;
    double x = 0;
    double magnitude = 0;
};

struct StudyOptions {
    PsorOptions psor{};
    int workers = 1;
};

/// Spatial grid shared by all lags of a study: span covers every lag's anchors.
Grid study_grid(const MarketParams& params, double maturity, const std::vector<double>& lags, int nx, int nt);

struct LagMonotonicityReport {
    bool passed = false;
    std::vector<double> lags;
    std::vector<double> values_at_strike;  ///< V^delta(0, K) per lag
    double slack = 0;
    Violation worst_chain;     ///< V^{d2} >= V^{d1} for d2 <= d1
    Violation worst_upper;     ///< V^0 >= V^delta
    Violation worst_lower;     ///< V^delta >= V^0 - delta r K
    double standard_gap = 0;   ///< |V^{0} entry - solve_v_standard| when 0 is among the lags
};

LagMonotonicityReport study_lag_monotonicity(const MarketParams& params, double maturity,
                                             std::vector<double> lags, const Grid& grid,
                                             const StudyOptions& options = {});

struct SmallLagReport {
    bool passed = false;
    std::vector<double> lags;
    std::vector<double> probe_times;
    std::vector<std::vector<double>> gaps;  ///< gaps[j][p]: |X^delta(t_p) - X^0(t_p)| for lag j
    std::vector<double> end_points;         ///< X^delta(T - delta) from the surface
    std::vector<double> end_point_targets;  ///< K e^{x_bar(delta)}
    double standard_end_point = 0;          ///< X^0 at the first level
    double tolerance = 0;
    Violation worst;
};

SmallLagReport study_small_lag(const MarketParams& params, double maturity, std::vector<double> lags,
                               const Grid& grid, const StudyOptions& options = {});

struct LargeMaturityReport {
    bool passed = false;
    double tau_max = 0;
    double h = 0;
    double x_under = 0;
    double x_boundary_end = 0;
    double boundary_gap = 0;
    double boundary_tolerance = 0;
    double value_gap = 0;
    double value_tolerance = 0;
};

LargeMaturityReport study_large_maturity(const MarketParams& params, double lag, double tau_max, int nx,
                                         int nt, const StudyOptions& options = {});

}  // namespace lagput
