#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "lagput/european.hpp"
#include "lagput/fd_solver.hpp"
#include "lagput/perpetual.hpp"

namespace lagput {

namespace {

/// Runs fn(0..n-1) on up to `workers` threads; results land in index order.
template <typename T>
std::vector<T> parallel_map(std::size_t n, int workers, const std::function<T(std::size_t)>& fn)
{
    std::vector<T> out(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto run = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                out[i] = fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const std::size_t count = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, n ? n : 1);
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < count; ++w)
        pool.emplace_back(run);
    run();
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

/// Same spatial nodes and time step as `grid` (whose horizon is the full
/// maturity), restricted to the decision horizon T - lag.
Grid lag_grid(const Grid& grid, double maturity, double lag)
{
    const double dtau = grid.dtau();
    const double horizon = maturity - lag;
    const long steps = std::lround(horizon / dtau);
    if (std::abs(steps * dtau - horizon) > 1e-9 * maturity)
        throw std::invalid_argument("every lag must be a whole number of time steps");
    Grid g = grid;
    g.tau_max = horizon;
    g.nt = static_cast<int>(steps);
    return g;
}

void check_maturity_grid(const Grid& grid, double maturity)
{
    if (std::abs(grid.tau_max - maturity) > 1e-12 * maturity)
        throw std::invalid_argument("study grid horizon must equal the maturity");
}

struct Worst {
    Violation v{};
    bool seen = false;

    void offer(const Violation& cand)
    {
        if (!seen || cand.magnitude > v.magnitude) {
            v = cand;
            seen = true;
        }
    }
};

}  // namespace

Grid study_grid(const MarketParams& params, double maturity, const std::vector<double>& lags, int nx, int nt)
{
    double lo = 0, hi = 0;
    bool first = true;
    auto absorb = [&](double lag) {
        const auto [x_under, x_bar] = boundary_anchors(params, lag);
        lo = first ? x_under : std::min(lo, x_under);
        hi = first ? x_bar : std::max(hi, x_bar);
        first = false;
    };
    absorb(0.0);
    for (double lag : lags)
        absorb(lag);
    return {lo - 4, hi + 8, nx, maturity, nt};
}

LagMonotonicityReport study_lag_monotonicity(const MarketParams& params, double maturity, std::vector<double> lags,
                                             const Grid& grid, const StudyOptions& options)
{
    if (lags.empty())
        throw std::invalid_argument("need at least one lag");
    if (!std::is_sorted(lags.begin(), lags.end()))
        throw std::invalid_argument("lags must be sorted ascending");
    if (lags.front() < 0 || lags.back() >= maturity)
        throw std::invalid_argument("lags must lie in [0, maturity)");
    check_maturity_grid(grid, maturity);

    // Slot 0 is always the standard put; slots 1.. follow `lags`.
    std::vector<double> all{0.0};
    all.insert(all.end(), lags.begin(), lags.end());
    const auto surfaces = parallel_map<Surface>(all.size(), options.workers, [&](std::size_t j) {
        const Grid g = lag_grid(grid, maturity, all[j]);
        if (j == 0)
            return solve_v_standard(params, maturity, g, options.psor);
        return solve_v_lagged(params, LagContract(maturity, all[j]), g, options.psor);
    });

    const double K = params.strike();
    const double h = grid.h();
    LagMonotonicityReport rep;
    rep.lags = lags;
    rep.slack = 3 * (h * h + grid.dtau()) * K;

    auto steps = [&](std::size_t j) { return surfaces[j].grid.nt; };
    const Eigen::VectorXd x = grid.nodes();
    const Surface& standard = surfaces[0];

    for (std::size_t j = 1; j < all.size(); ++j) {
        rep.values_at_strike.push_back(surface_value(surfaces[j], steps(j), 0.0));
        if (all[j] == 0)
            rep.standard_gap = std::max(rep.standard_gap, (surfaces[j].values - standard.values).cwiseAbs().maxCoeff());
    }

    Worst chain, upper, lower;
    for (std::size_t j = 1; j < all.size(); ++j) {
        const Surface& cur = surfaces[j];
        const double lag = all[j];
        for (int m = 0; m <= steps(j); ++m) {
            const double t = m * grid.dtau();
            const auto row = cur.values.row(steps(j) - m);
            const auto v0 = standard.values.row(steps(0) - m);
            Eigen::Index at = 0;
            const double up = (row - v0).maxCoeff(&at);
            upper.offer({"upper", 0.0, lag, t, x[at], up});
            const double low = (v0.array() - lag * params.rate() * K - row.array()).maxCoeff(&at);
            lower.offer({"lower", 0.0, lag, t, x[at], low});
            if (j >= 2) {
                // previous lag is shorter, so its value must dominate
                const auto shorter = surfaces[j - 1].values.row(steps(j - 1) - m);
                const double ch = (row - shorter).maxCoeff(&at);
                chain.offer({"chain", all[j - 1], lag, t, x[at], ch});
            }
        }
    }
    rep.worst_chain = chain.v;
    rep.worst_upper = upper.v;
    rep.worst_lower = lower.v;
    rep.passed = rep.worst_chain.magnitude <= rep.slack && rep.worst_upper.magnitude <= rep.slack
              && rep.worst_lower.magnitude <= rep.slack && rep.standard_gap <= rep.slack;
    return rep;
}

SmallLagReport study_small_lag(const MarketParams& params, double maturity, std::vector<double> lags,
                               const Grid& grid, const StudyOptions& options)
{
    if (lags.empty())
        throw std::invalid_argument("need at least one lag");
    if (!std::is_sorted(lags.rbegin(), lags.rend()))
        throw std::invalid_argument("lags must be sorted descending");
    if (!(lags.back() > 0) || lags.front() >= maturity / 4)
        throw std::invalid_argument("lags must lie in (0, maturity/4)");
    check_maturity_grid(grid, maturity);

    std::vector<double> all{0.0};
    all.insert(all.end(), lags.begin(), lags.end());
    const double threshold = default_threshold(options.psor);
    struct Solved {
        Boundary boundary;
        int steps = 0;
    };
    const auto solved = parallel_map<Solved>(all.size(), options.workers, [&](std::size_t j) {
        const Grid g = lag_grid(grid, maturity, all[j]);
        const Surface s = j == 0 ? solve_v_standard(params, maturity, g, options.psor)
                                 : solve_v_lagged(params, LagContract(maturity, all[j]), g, options.psor);
        return Solved{refine_boundary(s, extract_boundary(s, threshold)), g.nt};
    });

    const double K = params.strike();
    const double dtau = grid.dtau();
    const double h = grid.h();

    // Boundary stock price at calendar time t for slot j.
    auto boundary_at = [&](std::size_t j, double t) {
        const double tau = maturity - all[j] - t;
        const long level = std::lround(tau / dtau);
        const Boundary& b = solved[j].boundary;
        for (std::size_t s = 0; s < b.taus.size(); ++s)
            if (std::lround(b.taus[s] / dtau) == level)
                return boundary_stock_price(b.xs[s], params);
        throw std::logic_error("probe time has no boundary sample");
    };

    SmallLagReport rep;
    rep.lags = lags;
    rep.probe_times = {0.0, maturity / 4, maturity / 2, 3 * maturity / 4};
    rep.tolerance = 0.01 * K;
    rep.standard_end_point = boundary_stock_price(solved[0].boundary.xs.front(), params);

    bool ok = std::abs(solved[0].boundary.xs.front()) <= 2 * h;
    Worst worst;
    for (std::size_t j = 1; j < all.size(); ++j) {
        std::vector<double> row;
        for (double t : rep.probe_times)
            row.push_back(std::abs(boundary_at(j, t) - boundary_at(0, t)));
        rep.gaps.push_back(row);

        const double x_bar = find_x_bar(all[j], params).x_bar;
        const double end_x = solved[j].boundary.xs.front();
        rep.end_points.push_back(boundary_stock_price(end_x, params));
        rep.end_point_targets.push_back(boundary_stock_price(x_bar, params));
        if (std::abs(end_x - x_bar) > 2 * h) {
            ok = false;
            worst.offer({"end-point", all[j], all[j], maturity - all[j], end_x, std::abs(end_x - x_bar)});
        }
    }
    // Shrinking gaps are asserted at mid-life only: near expiry the lagged
    // boundaries may cross the standard one, so |gap| need not be monotone there.
    const std::size_t mid = 2;
    for (std::size_t p = 0; p < rep.probe_times.size(); ++p) {
        for (std::size_t j = 1; p == mid && j < rep.gaps.size(); ++j) {
            const double growth = rep.gaps[j][p] - rep.gaps[j - 1][p];
            if (growth > 0) {
                ok = false;
                worst.offer({"gap-increase", lags[j - 1], lags[j], rep.probe_times[p], 0.0, growth});
            }
        }
        const double final_gap = rep.gaps.back()[p];
        if (final_gap > rep.tolerance) {
            ok = false;
            worst.offer({"final-gap", lags.back(), 0.0, rep.probe_times[p], 0.0, final_gap});
        }
    }
    rep.worst = worst.v;
    rep.passed = ok;
    return rep;
}

LargeMaturityReport study_large_maturity(const MarketParams& params, double lag, double tau_max, int nx, int nt,
                                         const StudyOptions& options)
{
    const LagContract contract(tau_max + lag, lag);
    const Grid grid = default_grid(params, lag, tau_max, nx, nt);
    const Surface u = solve_u(params, contract, grid, options.psor);
    const auto sol = find_x_under(lag, params);
    const Boundary b = extract_boundary(u, default_threshold(options.psor));

    LargeMaturityReport rep;
    rep.tau_max = tau_max;
    rep.h = grid.h();
    rep.x_under = sol.x_under;
    rep.x_boundary_end = b.xs.back();
    rep.boundary_gap = std::abs(rep.x_boundary_end - sol.x_under);
    rep.boundary_tolerance = 3 * rep.h;
    const Eigen::VectorXd stationary = u_infinity(grid.nodes(), sol, params);
    rep.value_gap = (u.values.row(grid.nt).transpose() - stationary).cwiseAbs().maxCoeff();
    const double K = params.strike();
    rep.value_tolerance = std::max(1e-3 * K, K * rep.h * rep.h);
    rep.passed = rep.boundary_gap <= rep.boundary_tolerance && rep.value_gap <= rep.value_tolerance;
    return rep;
}

}  // namespace lagput
