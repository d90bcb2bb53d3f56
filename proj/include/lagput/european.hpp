#pragma once

// Closed-form European put, its Theta at remaining life delta, and the
// Gaussian helpers they share. Everything here is templated on the scalar so
// the same formulas can be evaluated in double or long double.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <Eigen/Core>

#include "lagput/detail/roots.hpp"
#include "lagput/model.hpp"

namespace lagput {

template <typename Scalar>
Scalar norm_cdf(Scalar d)
{
    using std::erfc;
    return erfc(-d / std::numbers::sqrt2_v<Scalar>) / 2;
}

template <typename Scalar>
Scalar norm_pdf(Scalar d)
{
    using std::exp;
    return exp(-d * d / 2) * std::numbers::inv_sqrtpi_v<Scalar> / std::numbers::sqrt2_v<Scalar>;
}

/// Mills ratio N(-d) / N'(d). Finite for every d above roughly -37; below
/// that the density underflows and +inf is returned.
template <typename Scalar>
Scalar mills_ratio(Scalar d)
{
    if (d > Scalar(30)) {
        // Laplace continued fraction 1/(d + 1/(d + 2/(d + 3/(d + ...)))).
        Scalar tail = d;
        for (int k = 60; k >= 1; --k)
            tail = d + Scalar(k) / tail;
        return 1 / tail;
    }
    if (d < Scalar(-37))
        return std::numeric_limits<Scalar>::infinity();
    return norm_cdf(-d) / norm_pdf(d);
}

template <typename Scalar>
struct DPair {
    Scalar d1;
    Scalar d2;
};

/// d1 = x / (sigma sqrt(life)) + ((r - q)/sigma + sigma/2) sqrt(life), d2 = d1 - sigma sqrt(life).
template <typename Scalar>
DPair<Scalar> d_pair(Scalar x, Scalar life, const BasicMarketParams<Scalar>& params)
{
    using std::sqrt;
    if (!(life > 0))
        throw std::domain_error("d_pair needs a positive remaining life");
    const Scalar sigma = params.volatility();
    const Scalar root_life = sqrt(life);
    const Scalar d1 = x / (sigma * root_life) + ((params.rate() - params.dividend()) / sigma + sigma / 2) * root_life;
    return {d1, d1 - sigma * root_life};
}

/// European put with remaining life `life`, as a function of log-moneyness.
template <typename Scalar>
Scalar put_price(Scalar x, Scalar life, const BasicMarketParams<Scalar>& params)
{
    using std::exp;
    const Scalar K = params.strike();
    if (life < 0)
        throw std::domain_error("put_price needs a non-negative remaining life");
    if (life == 0) {
        const Scalar payoff = K - K * exp(x);
        return payoff > 0 ? payoff : Scalar(0);
    }
    const auto [d1, d2] = d_pair(x, life, params);
    const Scalar value = K * exp(-params.rate() * life) * norm_cdf(-d2)
                       - K * exp(x - params.dividend() * life) * norm_cdf(-d1);
    return value > 0 ? value : Scalar(0);
}

/// Derivative of put_price in x: -K e^{x - q life} N(-d1).
template <typename Scalar>
Scalar put_price_dx(Scalar x, Scalar life, const BasicMarketParams<Scalar>& params)
{
    using std::exp;
    const auto [d1, d2] = d_pair(x, life, params);
    return -params.strike() * exp(x - params.dividend() * life) * norm_cdf(-d1);
}

/// Theta of the European put at remaining life `lag`, with the sign
/// convention theta = -dP/dt (the running payoff of the decomposed claim).
template <typename Scalar>
Scalar theta(Scalar x, Scalar lag, const BasicMarketParams<Scalar>& params)
{
    using std::exp;
    using std::sqrt;
    if (!(lag > 0))
        throw std::domain_error("theta needs a positive lag");
    const Scalar K = params.strike();
    const Scalar r = params.rate();
    const Scalar q = params.dividend();
    const auto [d1, d2] = d_pair(x, lag, params);
    const Scalar discount = exp(-r * lag);
    return q * K * exp(x - q * lag) * norm_cdf(-d1)
         + params.volatility() * K / (2 * sqrt(lag)) * discount * norm_pdf(-d2)
         - r * K * discount * norm_cdf(-d2);
}

/// theta / N'(-d2), rewritten through Mills ratios so it stays finite where
/// both numerator and denominator underflow. Strictly increasing in x.
template <typename Scalar>
Scalar theta_scaled(Scalar x, Scalar lag, const BasicMarketParams<Scalar>& params)
{
    using std::exp;
    using std::isinf;
    using std::sqrt;
    if (!(lag > 0))
        throw std::domain_error("theta needs a positive lag");
    const auto [d1, d2] = d_pair(x, lag, params);
    const Scalar m2 = mills_ratio(d2);
    if (isinf(m2))
        return -std::numeric_limits<Scalar>::infinity();
    const Scalar m1 = mills_ratio(d1);
    return params.strike() * exp(-params.rate() * lag)
         * (params.dividend() * m1 + params.volatility() / (2 * sqrt(lag)) - params.rate() * m2);
}

inline constexpr double kLogMoneynessSpan = 60.0;

template <typename Scalar>
struct ThetaProfile {
    Scalar x_bar;
    Scalar lag;
};

/// Unique zero of theta in log-moneyness.
template <typename Scalar>
ThetaProfile<Scalar> find_x_bar(Scalar lag, const BasicMarketParams<Scalar>& params, Scalar tol = Scalar(1e-12))
{
    if (!(lag > 0))
        throw std::domain_error("find_x_bar needs a positive lag");
    if (!(tol > 0))
        throw std::domain_error("find_x_bar needs a positive tolerance");
    auto g = [&](Scalar x) { return theta_scaled(x, lag, params); };
    const auto [lo, hi] = detail::expand_bracket(g, Scalar(kLogMoneynessSpan));
    return {detail::bisect(g, lo, hi, tol), lag};
}

// Array overloads: evaluate elementwise over any Eigen expression.

template <typename Derived>
auto put_price(const Eigen::DenseBase<Derived>& x, typename Derived::Scalar life,
               const BasicMarketParams<typename Derived::Scalar>& params)
{
    using Scalar = typename Derived::Scalar;
    return x.derived().unaryExpr([&](Scalar v) { return put_price(v, life, params); }).eval();
}

template <typename Derived>
auto theta(const Eigen::DenseBase<Derived>& x, typename Derived::Scalar lag,
           const BasicMarketParams<typename Derived::Scalar>& params)
{
    using Scalar = typename Derived::Scalar;
    return x.derived().unaryExpr([&](Scalar v) { return theta(v, lag, params); }).eval();
}

}  // namespace lagput
