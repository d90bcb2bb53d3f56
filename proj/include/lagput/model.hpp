#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace lagput {

/// Black-Scholes market: strike K, rate r, dividend yield q, volatility sigma.
/// Invariants are enforced at construction so downstream numerics can assume
/// K > 0, sigma > 0, r > 0 and 0 <= q < r.
template <typename Scalar>
class BasicMarketParams {
public:
    BasicMarketParams(Scalar strike, Scalar rate, Scalar dividend, Scalar volatility)
        : strike_(strike), rate_(rate), dividend_(dividend), volatility_(volatility)
    {
        using std::isfinite;
        if (!(isfinite(strike) && isfinite(rate) && isfinite(dividend) && isfinite(volatility)))
            throw std::invalid_argument("market parameters must be finite");
        if (!(strike > 0))
            throw std::invalid_argument("strike must be positive");
        if (!(volatility > 0))
            throw std::invalid_argument("volatility must be positive");
        if (!(rate > 0))
            throw std::invalid_argument("rate must be positive");
        if (!(dividend >= 0))
            throw std::invalid_argument("dividend yield must be non-negative");
        if (!(dividend < rate))
            throw std::invalid_argument("dividend yield must be strictly below the rate");
    }

    Scalar strike() const { return strike_; }
    Scalar rate() const { return rate_; }
    Scalar dividend() const { return dividend_; }
    Scalar volatility() const { return volatility_; }

    /// Drift of log-price under the pricing measure, r - q - sigma^2/2.
    Scalar log_drift() const { return rate_ - dividend_ - volatility_ * volatility_ / 2; }
    Scalar half_variance() const { return volatility_ * volatility_ / 2; }

    template <typename Other>
    BasicMarketParams<Other> cast() const
    {
        return {Other(strike_), Other(rate_), Other(dividend_), Other(volatility_)};
    }

private:
    Scalar strike_;
    Scalar rate_;
    Scalar dividend_;
    Scalar volatility_;
};

using MarketParams = BasicMarketParams<double>;

/// Maturity T and delivery lag delta, with 0 <= delta < T.
class LagContract {
public:
    LagContract(double maturity, double lag) : maturity_(maturity), lag_(lag)
    {
        if (!(std::isfinite(maturity) && std::isfinite(lag)))
            throw std::invalid_argument("contract times must be finite");
        if (!(maturity > 0))
            throw std::invalid_argument("maturity must be positive");
        if (!(lag >= 0 && lag < maturity))
            throw std::invalid_argument("lag must lie in [0, maturity)");
    }

    double maturity() const { return maturity_; }
    double lag() const { return lag_; }
    /// Length of the decision window, T - delta.
    double decision_horizon() const { return maturity_ - lag_; }

private:
    double maturity_;
    double lag_;
};

/// Log-moneyness x = ln(X/K) and remaining decision time tau = T - delta - t.
struct LogCoords {
    double x;
    double tau;
};

struct CalendarPoint {
    double t;
    double stock;
};

inline LogCoords to_log(double t, double stock, const MarketParams& params, const LagContract& contract)
{
    if (!(stock > 0) || !std::isfinite(stock))
        throw std::domain_error("stock price must be positive");
    const double horizon = contract.decision_horizon();
    if (!(t >= 0 && t <= horizon))
        throw std::domain_error("calendar time outside [0, T - lag]");
    return {std::log(stock / params.strike()), horizon - t};
}

inline CalendarPoint from_log(const LogCoords& coords, const MarketParams& params, const LagContract& contract)
{
    return {contract.decision_horizon() - coords.tau, params.strike() * std::exp(coords.x)};
}

/// Exercise boundary mapped back to stock-price units: X(t) = K exp(x(T - delta - t)).
inline double boundary_stock_price(double x_boundary, const MarketParams& params)
{
    return params.strike() * std::exp(x_boundary);
}

}  // namespace lagput
