#pragma once

// Stationary (perpetual) version of the Theta-payoff stopping problem:
// characteristic roots of the stationary operator, the boundary equation
// l(x) = 0 and the explicit value u_inf.

#include <cmath>
#include <limits>
#include <stdexcept>

#include "lagput/detail/roots.hpp"
#include "lagput/errors.hpp"
#include "lagput/european.hpp"
#include "lagput/model.hpp"

namespace lagput {

template <typename Scalar>
struct CharRoots {
    Scalar lambda_plus;
    Scalar lambda_minus;
};

/// Roots of (sigma^2/2) l^2 + (r - q - sigma^2/2) l - r = 0, computed without
/// cancellation. The constant term is negative, so the roots have opposite sign.
template <typename Scalar>
CharRoots<Scalar> char_roots(const BasicMarketParams<Scalar>& params)
{
    using std::sqrt;
    const Scalar a = params.half_variance();
    const Scalar b = params.log_drift();
    const Scalar c = -params.rate();
    const Scalar root_disc = sqrt(b * b - 4 * a * c);
    if (b >= 0) {
        const Scalar m = -(b + root_disc) / 2;
        return {c / m, m / a};
    }
    const Scalar m = (root_disc - b) / 2;
    return {m / a, c / m};
}

template <typename Scalar>
Scalar char_poly(Scalar lambda, const BasicMarketParams<Scalar>& params)
{
    return params.half_variance() * lambda * lambda + params.log_drift() * lambda - params.rate();
}

/// l(x) = lambda_- e^{-r delta} N(-d2) + (1 - lambda_-) e^{x - q delta} N(-d1).
template <typename Scalar>
Scalar l_function(Scalar x, Scalar lag, const BasicMarketParams<Scalar>& params)
{
    using std::exp;
    const Scalar lm = char_roots(params).lambda_minus;
    const auto [d1, d2] = d_pair(x, lag, params);
    return lm * exp(-params.rate() * lag) * norm_cdf(-d2)
         + (1 - lm) * exp(x - params.dividend() * lag) * norm_cdf(-d1);
}

/// l(x) e^{r delta} / N'(-d2): same sign as l but free of tail underflow, so
/// it can bracket the root far to the right where l itself rounds to zero.
template <typename Scalar>
Scalar l_scaled(Scalar x, Scalar lag, const BasicMarketParams<Scalar>& params)
{
    using std::isinf;
    const Scalar lm = char_roots(params).lambda_minus;
    const auto [d1, d2] = d_pair(x, lag, params);
    const Scalar m2 = mills_ratio(d2);
    if (isinf(m2))
        return l_function(x, lag, params);
    return lm * m2 + (1 - lm) * mills_ratio(d1);
}

template <typename Scalar>
struct PerpetualSolution {
    Scalar x_under;        ///< perpetual exercise boundary (log-moneyness)
    Scalar x_bar;          ///< zero of theta at the same lag
    CharRoots<Scalar> roots;
    Scalar lag;
    Scalar p_at_boundary;  ///< European put with life `lag` at x_under
};

template <typename Scalar>
PerpetualSolution<Scalar> find_x_under(Scalar lag, const BasicMarketParams<Scalar>& params,
                                       Scalar tol = Scalar(1e-12))
{
    if (!(lag > 0))
        throw std::domain_error("find_x_under needs a positive lag");
    auto f = [&](Scalar x) { return l_scaled(x, lag, params); };
    const auto [lo, hi] = detail::expand_bracket(f, Scalar(kLogMoneynessSpan));
    const Scalar x_under = detail::bisect(f, lo, hi, tol * Scalar(1e-3));
    const Scalar x_bar = find_x_bar(lag, params, tol).x_bar;
    if (!(x_under < x_bar))
        throw NumericalError("perpetual boundary is not left of the theta zero crossing");
    return {x_under, x_bar, char_roots(params), lag, put_price(x_under, lag, params)};
}

/// u_inf(x) = p(X_) e^{lambda_-(x - X_)} - p(x) right of the boundary, 0 left of it.
template <typename Scalar>
Scalar u_infinity(Scalar x, const PerpetualSolution<Scalar>& sol, const BasicMarketParams<Scalar>& params)
{
    using std::exp;
    if (x <= sol.x_under)
        return Scalar(0);
    const Scalar v = sol.p_at_boundary * exp(sol.roots.lambda_minus * (x - sol.x_under))
                   - put_price(x, sol.lag, params);
    return v > 0 ? v : Scalar(0);
}

template <typename Derived>
auto u_infinity(const Eigen::DenseBase<Derived>& x, const PerpetualSolution<typename Derived::Scalar>& sol,
                const BasicMarketParams<typename Derived::Scalar>& params)
{
    using Scalar = typename Derived::Scalar;
    return x.derived().unaryExpr([&](Scalar v) { return u_infinity(v, sol, params); }).eval();
}

/// Perpetual boundary of the standard (zero-lag) American put, ln(l_- / (l_- - 1)).
template <typename Scalar>
Scalar standard_perpetual_boundary(const BasicMarketParams<Scalar>& params)
{
    using std::log;
    const Scalar lm = char_roots(params).lambda_minus;
    return log(lm / (lm - 1));
}

}  // namespace lagput
