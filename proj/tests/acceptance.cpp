// Acceptance run: one PASS/FAIL line per criterion, tolerances pinned below.
// Exit status is the number of failed criteria (0 when all pass).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lagput/european.hpp"
#include "lagput/fd_solver.hpp"
#include "lagput/oracle.hpp"
#include "lagput/perpetual.hpp"

using namespace lagput;
namespace fs = std::filesystem;

namespace {

// Desk parameters.
const MarketParams kP(100, 0.05, 0.02, 0.2);
constexpr double kK = 100;
constexpr double kT = 1.0;
constexpr double kLag = 0.25;
constexpr int kNx = 600;
constexpr int kNt = 600;

// Pinned tolerances.
constexpr double kQuadTol = 1e-8;                 // 1: closed form vs quadrature
constexpr double kFdOrderMin = 3.0;               // 1, 4: error ratio per halving
constexpr double kDeepLeftTol = 1e-10 * kK;       // 3
constexpr double kRootTol = 1e-12;                // 4: |l(x_under)|
constexpr double kGrowthRel = 0.05;               // 4: quadratic growth ratio
constexpr double kEnumTol = 1e-12;                // 5
constexpr int kEnumTrials = 50;                   // 5
constexpr double kSlackFactor = 3.0;              // 6, 7: 3 (h^2 + dtau) K
constexpr double kBandCells = 2.0;                // 8
constexpr double kFirstLevelCells = 2.0;          // 8
constexpr int kStrictWindow = 5;                  // 8
constexpr double kLargeTau = 25.0;                // 9
constexpr double kSmallLagTol = 0.01 * kK;        // 10
constexpr double kPremiumTol = 1e-3 * kK;         // 11
constexpr double kCrossTol = 1e-3 * kK;           // 12
constexpr int kLatticeSteps = 2000;               // 12
constexpr double kSelftestSeconds = 60;           // 13

int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail)
{
    std::printf("criterion %2d %s: %s | %s\n", id, ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!ok)
        ++failures;
}

std::string fmt(const char* f, double a)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

template <typename... Args>
std::string cat(Args&&... parts)
{
    std::ostringstream s;
    (s << ... << parts);
    return s.str();
}

void closed_form_consistency()
{
    double worst_quad = 0;
    for (double life : {0.05, 0.25, 1.0, 3.0})
        for (double x : {-1.0, -0.25, 0.0, 0.25, 1.0})
            worst_quad = std::max(worst_quad, std::abs(put_price(x, life, kP) - quad_european_put(kP, life, kK * std::exp(x))));

    double worst_ratio = INFINITY, worst_err = 0;
    for (double lag : {0.1, 0.25, 0.5})
        for (double x : {-0.6, -0.2, 0.0, 0.3}) {
            auto err = [&](double h) {
                const double fd = (put_price(x, lag + h, kP) - put_price(x, lag - h, kP)) / (2 * h);
                return std::abs(fd - theta(x, lag, kP));
            };
            worst_ratio = std::min(worst_ratio, err(0.02) / err(0.01));
            worst_err = std::max(worst_err, err(0.01));
        }
    const bool ok = worst_quad <= kQuadTol && worst_ratio >= kFdOrderMin;
    report(1, "closed-form consistency", ok,
           cat("max |put - quad| = ", fmt("%.3g", worst_quad), " (<= 1e-8); theta FD error ratio per halving >= ",
               fmt("%.3f", worst_ratio), " (>= 3), error at h=0.01 ", fmt("%.3g", worst_err)));
}

void gaussian_tails()
{
    int violations = 0;
    for (int i = 1; i <= 1000; ++i) {
        const double d = 10.0 * i / 1000;
        const double n = norm_cdf(-d), dens = norm_pdf(-d);
        if (!(dens / (d + 1 / d) <= n && n <= dens / d))
            ++violations;
    }
    report(2, "Gaussian tail bounds", violations == 0, cat(violations, " violations at 1000 points of (0, 10]"));
}

void theta_structure()
{
    int changes = 0;
    // raw theta underflows to 0 far right; the sign is read from theta / N'(-d2)
    double prev = theta_scaled(-60.0, kLag, kP);
    for (int i = 1; i <= 12000; ++i) {
        const double v = theta_scaled(-60.0 + 0.01 * i, kLag, kP);
        changes += v == 0 || (v > 0) != (prev > 0);
        prev = v;
    }
    const double xb = find_x_bar(kLag, kP).x_bar;
    const bool flanks = theta(xb - 0.1, kLag, kP) < 0 && theta(xb + 0.1, kLag, kP) > 0;

    bool increasing = true;
    double g_prev = -INFINITY;
    for (int i = 0; i < 1000; ++i) {
        const double x = xb - 2 + 4.0 * i / 999;
        const double g = theta(x, kLag, kP) / norm_pdf(-d_pair(x, kLag, kP).d2);
        increasing = increasing && g > g_prev;
        g_prev = g;
    }
    const double deep = std::abs(theta(-30.0, kLag, kP) + 0.05 * kK * std::exp(-0.05 * kLag));

    bool limit_monotone = true;
    double gap_prev = INFINITY;
    const double target = 0.02 * kK * std::exp(-0.3) - 0.05 * kK;
    for (double lag : {0.2, 0.1, 0.05, 0.025}) {
        const double gap = std::abs(theta(-0.3, lag, kP) - target);
        limit_monotone = limit_monotone && gap < gap_prev;
        gap_prev = gap;
    }
    const bool ok = changes == 1 && flanks && increasing && deep <= kDeepLeftTol && limit_monotone;
    report(3, "theta structure", ok,
           cat("sign changes ", changes, ", flanks ", flanks ? "ok" : "bad", ", g increasing ",
               increasing ? "yes" : "no", ", |theta(-30)+rKe^{-r lag}| = ", fmt("%.3g", deep),
               ", small-lag gaps monotone ", limit_monotone ? "yes" : "no", " (last ", fmt("%.3g", gap_prev), ")"));
}

void perpetual_solution()
{
    const auto sol = find_x_under(kLag, kP);
    std::vector<double> errs;
    for (int n : {200, 400, 800}) {
        const Grid g = stationary_grid(kP, kLag, n);
        const StationarySolution st = solve_u_stationary(kP, kLag, g);
        errs.push_back((st.values - u_infinity(st.x, sol, kP)).cwiseAbs().maxCoeff());
    }
    const double r1 = errs[0] / errs[1], r2 = errs[1] / errs[2];
    const double l_res = std::abs(l_function(sol.x_under, kLag, kP));

    bool pasting = true;
    double slope_prev = INFINITY;
    for (double h : {1e-1, 1e-2, 1e-3}) {
        const double slope = std::abs(u_infinity(sol.x_under + h, sol, kP) / h);
        pasting = pasting && slope < slope_prev;
        slope_prev = slope;
    }
    const double target = -theta(sol.x_under, kLag, kP) / (0.2 * 0.2);
    double worst_rel = 0;
    for (double h : {1e-2, 1e-3, 1e-4})
        worst_rel = std::max(worst_rel, std::abs(u_infinity(sol.x_under + h, sol, kP) / (h * h) / target - 1));

    const bool ok = r1 >= kFdOrderMin && r2 >= kFdOrderMin && l_res <= kRootTol && pasting && worst_rel <= kGrowthRel;
    report(4, "perpetual explicit solution", ok,
           cat("stationary errors ", fmt("%.3g", errs[0]), "/", fmt("%.3g", errs[1]), "/", fmt("%.3g", errs[2]),
               " ratios ", fmt("%.2f", r1), ", ", fmt("%.2f", r2), " (>= 3); |l(x_under)| = ", fmt("%.2g", l_res),
               "; pasting slope at h=1e-3 ", fmt("%.3g", slope_prev), "; growth ratio off by ",
               fmt("%.3f", 100 * worst_rel), "%"));
}

void delay_reduction()
{
    std::mt19937_64 rng(20240515);
    std::uniform_int_distribution<int> steps(2, 10), lag(0, 2);
    std::uniform_real_distribution<double> unit(0, 1), prob(0.2, 0.8);
    double worst = 0;
    int zero_lag = 0;
    for (int trial = 0; trial < kEnumTrials; ++trial) {
        const int n = steps(rng);
        const int d = trial % 5 == 0 ? 0 : std::min(lag(rng), n - 1);
        zero_lag += d == 0;
        StoppingProblem pb;
        pb.horizon = n;
        pb.lag_steps = d;
        pb.discount_rate = 0.2 * unit(rng);
        pb.terminal = Eigen::VectorXd::NullaryExpr(n + 1, [&] { return unit(rng); });
        pb.running = Eigen::MatrixXd::NullaryExpr(n + 1, n + 1, [&] { return unit(rng); });
        pb.payoff = Eigen::MatrixXd::NullaryExpr(n + 1, n + 1, [&] { return 3 * unit(rng); });
        const auto res = enumerate_delay_equivalence(pb, Lattice::with_probability(n, 0.1, prob(rng), pb.discount_rate));
        worst = std::max(worst, std::abs(res.enumerated - res.dp));
    }
    report(5, "delayed stopping reduces to the modified obstacle", worst <= kEnumTol,
           cat("max |enumerated - dp| = ", fmt("%.3g", worst), " over ", kEnumTrials, " trees (", zero_lag,
               " with zero lag)"));
}

double decomposition_gap(int nx, int nt, double* slack)
{
    const LagContract c(kT, kLag);
    const Grid g = default_grid(kP, kLag, c.decision_horizon(), nx, nt);
    const Surface v = solve_v_lagged(kP, c, g);
    const Surface u = solve_u(kP, c, g);
    const Eigen::VectorXd p = put_price(g.nodes(), kLag, kP);
    if (slack)
        *slack = kSlackFactor * (g.h() * g.h() + g.dtau()) * kK;
    return ((v.values - u.values).rowwise() - p.transpose()).cwiseAbs().maxCoeff();
}

void decomposition()
{
    double slack = 0;
    const double fine = decomposition_gap(kNx, kNt, &slack);
    const double coarse = decomposition_gap(kNx / 2, kNt / 2, nullptr);
    const bool ok = fine <= slack && fine < coarse;
    report(6, "decomposition into European plus premium", ok,
           cat("max gap ", fmt("%.3g", fine), " (slack ", fmt("%.3g", slack), "), half-resolution gap ",
               fmt("%.3g", coarse)));
}

void sandwich()
{
    const std::vector<double> lags{0.05, 0.1, 0.2, 0.4};
    const Grid g = study_grid(kP, kT, lags, kNx, kNt);
    const auto rep = study_lag_monotonicity(kP, kT, lags, g, {PsorOptions{}, 4});
    report(7, "sandwich bound and monotone chain in the lag", rep.passed,
           cat("worst chain ", fmt("%.3g", rep.worst_chain.magnitude), ", upper ", fmt("%.3g", rep.worst_upper.magnitude),
               ", lower ", fmt("%.3g", rep.worst_lower.magnitude), " (slack ", fmt("%.3g", rep.slack), ")"));
}

void boundary_properties()
{
    const LagContract c(kT, kLag);
    const Grid g = default_grid(kP, kLag, c.decision_horizon(), kNx, kNt);
    const Surface u = solve_u(kP, c, g);
    const auto sol = find_x_under(kLag, kP);
    const Boundary b = extract_boundary(u, default_threshold(PsorOptions{}));
    const double h = g.h();
    const BoundaryShape s = assess_boundary(b, h, sol.x_under, sol.x_bar, kStrictWindow);
    const bool band = s.band_excess <= 0;  // assess_boundary already uses the 2h band
    const bool ok = band && s.worst_rise <= h && s.corners_decreasing && s.first_level_gap <= kFirstLevelCells * h;
    report(8, "exercise boundary properties", ok,
           cat("band excess ", fmt("%.3g", s.band_excess), " (", kBandCells, "h band), worst rise ",
               fmt("%.3g", s.worst_rise), " (<= h = ", fmt("%.4f", h), "), strict decrease over ", kStrictWindow,
               "-level windows ", s.corners_decreasing ? "yes" : "no", " (", s.corners, " corners), first level ",
               fmt("%.3g", s.first_level_gap), " from x_bar"));
}

void large_maturity()
{
    const auto rep = study_large_maturity(kP, kLag, kLargeTau, kNx, kNt);
    report(9, "large-maturity convergence", rep.passed,
           cat("|x(25) - x_under| = ", fmt("%.4g", rep.boundary_gap), " (<= 3h = ", fmt("%.4g", rep.boundary_tolerance),
               "); max |u(25) - u_inf| = ", fmt("%.4g", rep.value_gap), " (<= max(1e-3 K, K h^2) = ",
               fmt("%.4g", rep.value_tolerance), ")"));
}

void small_lag()
{
    const std::vector<double> lags{0.2, 0.1, 0.05, 0.025};
    const Grid g = study_grid(kP, kT, lags, kNx, kNt);
    const auto rep = study_small_lag(kP, kT, lags, g, {PsorOptions{}, 4});
    constexpr std::size_t mid = 2;  // probe t = T/2
    bool shrinking = true;
    std::string gaps;
    for (std::size_t j = 0; j < rep.gaps.size(); ++j) {
        if (j > 0)
            shrinking = shrinking && rep.gaps[j][mid] <= rep.gaps[j - 1][mid];
        gaps += (j ? ", " : "") + fmt("%.4g", rep.gaps[j][mid]);
    }
    const double last = rep.gaps.back()[mid];
    report(10, "small-lag convergence of the boundary", shrinking && last <= kSmallLagTol,
           cat("|X^lag(T/2) - X^0(T/2)| over lags 0.2..0.025: ", gaps, " (non-increasing, last <= ",
               fmt("%.3g", kSmallLagTol), ")"));
}

void premium()
{
    const Grid g = default_grid(kP, 0.0, kT, kNx, kNt);
    const Surface v = solve_v_standard(kP, kT, g);
    const Boundary b = refine_boundary(v, extract_boundary(v, default_threshold(PsorOptions{})));
    const CalendarBoundary cal = to_calendar(b, kP, kT, kK);
    double worst = 0;
    for (double t : {0.0, 0.2, 0.4, 0.6, 0.8})
        for (double stock : {85.0, 95.0, 105.0, 120.0}) {
            const int level = static_cast<int>(std::lround((kT - t) / g.dtau()));
            const double life = kT - t;
            const double lhs = surface_value(v, level, std::log(stock / kK));
            const double rhs = put_price(std::log(stock / kK), life, kP) + early_exercise_premium(kP, kT, t, stock, cal);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    report(11, "early-exercise premium representation", worst <= kPremiumTol,
           cat("max |V0 - P - e| = ", fmt("%.4g", worst), " over 20 points (<= ", fmt("%.3g", kPremiumTol), ")"));
}

void cross_method()
{
    const LagContract c(kT, kLag);
    const Grid g = default_grid(kP, kLag, c.decision_horizon(), kNx, kNt);
    const double pde = surface_value(solve_v_lagged(kP, c, g), g.nt, 0.0);
    const double tree = lattice_price_lagged(kP, c, kLatticeSteps, kK);
    report(12, "PDE vs lattice for the lagged put", std::abs(pde - tree) <= kCrossTol,
           cat("PDE ", fmt("%.6f", pde), ", lattice ", fmt("%.6f", tree), ", diff ", fmt("%.3g", std::abs(pde - tree))));
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism()
{
    const fs::path dir = fs::temp_directory_path() / "lagput_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream sc(dir / "scenario.json");
        sc << R"({"market": {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2},
                 "contract": {"maturity": 1, "lag": 0.25}})";
    }
    const std::string cli = LAGPUT_CLI_PATH;
    bool identical = true;
    int status = 0;
    for (const char* run : {"a", "b"})
        status |= std::system((cli + " price --scenario " + (dir / "scenario.json").string() + " --out "
                               + (dir / run).string() + " > /dev/null").c_str());
    int files = 0;
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
        ++files;
        identical = identical && slurp(entry.path()) == slurp(dir / "b" / entry.path().filename());
    }
    const auto start = std::chrono::steady_clock::now();
    const int selftest = std::system((cli + " selftest > /dev/null").c_str());
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool ok = status == 0 && files == 5 && identical && selftest == 0 && seconds < kSelftestSeconds;
    report(13, "determinism and selftest budget", ok,
           cat(files, " artifacts ", identical ? "byte-identical" : "DIFFER", " across two runs; selftest exit ",
               selftest, " in ", fmt("%.2f", seconds), " s (< 60)"));
}

}  // namespace

int main()
{
    const std::vector<std::function<void()>> criteria{
        closed_form_consistency, gaussian_tails, theta_structure, perpetual_solution, delay_reduction,
        decomposition,           sandwich,       boundary_properties, large_maturity, small_lag,
        premium,                 cross_method,   determinism};
    for (const auto& c : criteria) {
        try {
            c();
        } catch (const std::exception& e) {
            std::printf("criterion threw: %s\n", e.what());
            ++failures;
        }
    }
    std::printf("%d of 13 criteria failed\n", failures);
    return failures;
}
