#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "lagput/errors.hpp"
#include "lagput/european.hpp"
#include "lagput/fd_solver.hpp"

namespace lagput {

Boundary extract_boundary(const Surface& surface, double threshold)
{
    const Grid& g = surface.grid;
    const Eigen::MatrixXd excess = surface.excess();
    Boundary out;
    for (int k = 1; k <= g.nt; ++k) {
        int first = -1;
        for (int i = 0; i < g.node_count(); ++i) {
            if (excess(k, i) > threshold) {
                first = i;
                break;
            }
        }
        if (first < 0) {
            if (k == 1)
                continue;
            throw NumericalError("no continuation node at time level " + std::to_string(k));
        }
        out.taus.push_back(g.tau(k));
        out.xs.push_back(g.x(first));
    }
    return out;
}

Boundary refine_boundary(const Surface& surface, const Boundary& coarse)
{
    const Grid& g = surface.grid;
    const double h = g.h();
    Boundary out = coarse;
    for (std::size_t j = 0; j < coarse.taus.size(); ++j) {
        const int k = static_cast<int>(std::lround(coarse.taus[j] / g.dtau()));
        const int i = g.nearest(coarse.xs[j]);
        if (i < 1 || i + 1 >= g.node_count())
            continue;
        const double s0 = std::sqrt(std::max(0.0, surface.values(k, i) - surface.obstacle[i]));
        const double s1 = std::sqrt(std::max(0.0, surface.values(k, i + 1) - surface.obstacle[i + 1]));
        if (!(s1 > s0))
            continue;
        const double shift = std::clamp(s0 / (s1 - s0), 0.0, 1.0);
        out.xs[j] = g.x(i) - shift * h;
    }
    return out;
}

BoundaryShape assess_boundary(const Boundary& b, double h, double x_under, double x_bar, int window)
{
    if (b.xs.empty())
        throw std::invalid_argument("empty boundary");
    BoundaryShape out;
    std::vector<double> ct, cx;
    double low = b.xs.front();
    ct.push_back(b.taus.front());
    cx.push_back(low);
    for (std::size_t k = 0; k < b.xs.size(); ++k) {
        const double x = b.xs[k];
        out.band_excess = std::max({out.band_excess, x_under - 2 * h - x, x - x_bar - 2 * h});
        out.worst_rise = std::max(out.worst_rise, x - low);
        if (x < low) {
            low = x;
            ct.push_back(b.taus[k]);
            cx.push_back(x);
        }
    }
    out.corners = static_cast<int>(ct.size());
    out.first_level_gap = std::abs(b.xs.front() - x_bar);

    auto interp = [&](double tau) {
        const auto it = std::upper_bound(ct.begin(), ct.end(), tau);
        if (it == ct.begin())
            return cx.front();
        if (it == ct.end())
            return cx.back();
        const std::size_t j = static_cast<std::size_t>(it - ct.begin());
        const double w = (tau - ct[j - 1]) / (ct[j] - ct[j - 1]);
        return (1 - w) * cx[j - 1] + w * cx[j];
    };
    out.corners_decreasing = ct.size() >= 2;
    for (std::size_t k = 0; k + window < b.taus.size() && b.taus[k + window] <= ct.back(); ++k)
        if (!(interp(b.taus[k + window]) < interp(b.taus[k])))
            out.corners_decreasing = false;
    return out;
}

CalendarBoundary to_calendar(const Boundary& boundary, const MarketParams& params, double horizon, double end_value)
{
    CalendarBoundary out;
    for (std::size_t j = boundary.taus.size(); j-- > 0;) {
        out.ts.push_back(horizon - boundary.taus[j]);
        out.stocks.push_back(boundary_stock_price(boundary.xs[j], params));
    }
    out.ts.push_back(horizon);
    out.stocks.push_back(end_value);
    return out;
}

double CalendarBoundary::at(double t) const
{
    if (ts.empty())
        throw std::logic_error("empty boundary");
    if (t <= ts.front())
        return stocks.front();
    if (t >= ts.back())
        return stocks.back();
    const auto it = std::upper_bound(ts.begin(), ts.end(), t);
    const std::size_t j = static_cast<std::size_t>(it - ts.begin());
    const double w = (t - ts[j - 1]) / (ts[j] - ts[j - 1]);
    return (1 - w) * stocks[j - 1] + w * stocks[j];
}

namespace {

/// Discounted expectation of (rK - q X_s) 1{X_s <= B} given X_t = X, life = s - t.
double premium_rate(const MarketParams& params, double stock, double barrier, double life)
{
    const double K = params.strike();
    const double r = params.rate();
    const double q = params.dividend();
    if (life <= 0) {
        if (stock < barrier)
            return r * K - q * stock;
        if (stock > barrier)
            return 0.0;
        return (r * K - q * stock) / 2;
    }
    const double sigma = params.volatility();
    const double root = sigma * std::sqrt(life);
    const double d1 = (std::log(stock / barrier) + (r - q + sigma * sigma / 2) * life) / root;
    const double d2 = d1 - root;
    return r * K * std::exp(-r * life) * norm_cdf(-d2) - q * stock * std::exp(-q * life) * norm_cdf(-d1);
}

/// Composite Simpson in v with s = t + (T - t) v^2, which removes the sqrt
/// behaviour of the integrand at s = t.
double simpson(const MarketParams& params, double span, double t, double stock, const CalendarBoundary& b, int panels)
{
    auto f = [&](double v) {
        const double life = span * v * v;
        return premium_rate(params, stock, b.at(t + life), life) * 2 * span * v;
    };
    const double dv = 1.0 / panels;
    double sum = f(0.0) + f(1.0);
    for (int j = 1; j < panels; ++j)
        sum += (j % 2 ? 4.0 : 2.0) * f(j * dv);
    return sum * dv / 3;
}

}  // namespace

double early_exercise_premium(const MarketParams& params, double maturity, double t, double stock,
                              const CalendarBoundary& boundary_std, double tol)
{
    if (!(t < maturity))
        throw std::domain_error("early_exercise_premium needs t < T");
    if (!(stock > 0))
        throw std::domain_error("stock price must be positive");
    const double span = maturity - t;
    int panels = 256;
    double coarse = simpson(params, span, t, stock, boundary_std, panels);
    for (; panels <= (1 << 18); panels *= 2) {
        const double fine = simpson(params, span, t, stock, boundary_std, 2 * panels);
        if (std::abs(fine - coarse) <= tol * params.strike())
            return fine;
        coarse = fine;
    }
    throw NumericalError("early exercise premium quadrature did not settle");
}

}  // namespace lagput
