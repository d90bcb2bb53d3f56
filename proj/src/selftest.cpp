#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "lagput/app.hpp"
#include "lagput/european.hpp"
#include "lagput/oracle.hpp"
#include "lagput/perpetual.hpp"

namespace lagput::app {

namespace {

class Checklist {
public:
    explicit Checklist(std::ostream& log) : log_(log) {}

    void record(const std::string& name, bool ok, double measured, double limit)
    {
        log_ << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << format_number(measured)
             << " (limit " << format_number(limit) << ")\n";
        all_ = all_ && ok;
    }

    bool all() const { return all_; }

private:
    std::ostream& log_;
    bool all_ = true;
};

StoppingProblem random_problem(std::mt19937_64& rng, int horizon, int lag_steps)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    StoppingProblem pb;
    pb.horizon = horizon;
    pb.lag_steps = lag_steps;
    pb.discount_rate = 0.1 * unit(rng);
    pb.terminal = Eigen::VectorXd::NullaryExpr(horizon + 1, [&] { return unit(rng); });
    pb.running = Eigen::MatrixXd::NullaryExpr(horizon + 1, horizon + 1, [&] { return unit(rng) - 0.5; });
    pb.payoff = Eigen::MatrixXd::NullaryExpr(horizon + 1, horizon + 1, [&] { return unit(rng); });
    return pb;
}

}  // namespace

bool run_selftest(const SelftestOptions& options, std::ostream& log)
{
    const auto start = std::chrono::steady_clock::now();
    Checklist checks(log);
    const MarketParams P(100.0, 0.05, 0.02, 0.2);
    const double K = P.strike();
    const double sign = options.corrupt_theta ? -1.0 : 1.0;
    const std::function<double(double, double)> theta_of = [&](double x, double lag) {
        return sign * theta(x, lag, P);
    };

    // Closed-form put against Gauss-Legendre quadrature.
    double worst = 0;
    for (double life : {0.05, 0.25, 1.0, 3.0})
        for (double x : {-0.8, -0.2, 0.0, 0.3, 1.0})
            worst = std::max(worst, std::abs(put_price(x, life, P) - quad_european_put(P, life, K * std::exp(x))));
    checks.record("european put vs quadrature", worst <= 1e-8, worst, 1e-8);

    // theta = -d/dt P = d/dlife P.
    worst = 0;
    const double step = 1e-4;
    for (double lag : {0.1, 0.25, 0.5})
        for (double x : {-0.5, -0.15, 0.0, 0.4}) {
            const double fd = (put_price(x, lag + step, P) - put_price(x, lag - step, P)) / (2 * step);
            worst = std::max(worst, std::abs(theta_of(x, lag) - fd));
        }
    checks.record("theta vs central difference", worst <= 1e-5 * K, worst, 1e-5 * K);

    // Perpetual solution: root equation and ODE residual.
    const double lag = 0.25;
    const auto sol = find_x_under(lag, P);
    const double l_at_root = std::abs(l_function(sol.x_under, lag, P));
    checks.record("l(x_under)", l_at_root <= 1e-12, l_at_root, 1e-12);
    checks.record("x_bar - x_under", sol.x_under < sol.x_bar, sol.x_bar - sol.x_under, 0.0);
    worst = 0;
    const double hh = 1e-3;
    for (int i = 1; i <= 20; ++i) {
        const double x = sol.x_under + 0.05 * i;
        auto u = [&](double y) { return u_infinity(y, sol, P); };
        const double d1 = (-u(x + 2 * hh) + 8 * u(x + hh) - 8 * u(x - hh) + u(x - 2 * hh)) / (12 * hh);
        const double d2 = (-u(x + 2 * hh) + 16 * u(x + hh) - 30 * u(x) + 16 * u(x - hh) - u(x - 2 * hh))
                        / (12 * hh * hh);
        const double lu = P.half_variance() * d2 + P.log_drift() * d1 - P.rate() * u(x);
        worst = std::max(worst, std::abs(-lu - theta_of(x, lag)));
    }
    checks.record("stationary ODE residual", worst <= 1e-6 * K, worst, 1e-6 * K);

    // Delayed stopping equals standard stopping on the modified obstacle.
    std::mt19937_64 rng(20240601);
    worst = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + trial % 6;
        const int d = trial % 3;
        const auto tree = Lattice::with_probability(n, 0.1, 0.35 + 0.3 * (trial % 5) / 4.0, 0.05);
        const auto res = enumerate_delay_equivalence(random_problem(rng, n, d), tree);
        worst = std::max(worst, std::abs(res.enumerated - res.dp));
    }
    checks.record("enumeration vs modified-obstacle DP", worst <= 1e-12, worst, 1e-12);

    // Reduced-size PDE: decomposition and agreement with the lattice.
    const LagContract contract(1.0, lag);
    const Grid grid = default_grid(P, lag, contract.decision_horizon(), 200, 100);
    const Surface v = solve_v_lagged(P, contract, grid);
    const Surface u = solve_u(P, contract, grid);
    const Eigen::VectorXd p = put_price(grid.nodes(), lag, P);
    const double gap = ((v.values - u.values).rowwise() - p.transpose()).cwiseAbs().maxCoeff();
    const double slack = 3 * (grid.h() * grid.h() + grid.dtau()) * K;
    checks.record("decomposition gap", gap <= slack, gap, slack);
    checks.record("complementarity residual", v.stats.max_residual <= 1e-9, v.stats.max_residual, 1e-9);

    const double pde = surface_value(v, grid.nt, 0.0);
    const double tree = lattice_price_lagged(P, contract, 400, K);
    checks.record("PDE vs lattice at the strike", std::abs(pde - tree) <= 5e-3 * K, std::abs(pde - tree), 5e-3 * K);

    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    log << "selftest " << (checks.all() ? "passed" : "FAILED") << " in " << format_number(std::round(seconds * 100) / 100)
        << " s\n";
    return checks.all();
}

}  // namespace lagput::app
