#pragma once

#include <array>
#include <cmath>
#include <utility>

#include "lagput/errors.hpp"

namespace lagput::detail {

template <typename Scalar>
int sign_of(Scalar v)
{
    return (v > 0) - (v < 0);
}

/// Walks outward from 0 by doubling (1, 2, 4, ... capped at `span`) on both
/// sides and returns the first interval over which `f` changes sign.
template <typename Scalar, typename F>
std::pair<Scalar, Scalar> expand_bracket(F&& f, Scalar span)
{
    const Scalar f0 = f(Scalar(0));
    if (f0 == 0)
        return {Scalar(0), Scalar(0)};
    Scalar left = 0, right = 0;
    Scalar f_left = f0, f_right = f0;
    for (Scalar w = 1;; w *= 2) {
        const Scalar step = w < span ? w : span;
        const Scalar fr = f(step);
        if (sign_of(fr) != sign_of(f_right))
            return {right, step};
        const Scalar fl = f(-step);
        if (sign_of(fl) != sign_of(f_left))
            return {-step, left};
        left = -step;
        right = step;
        f_left = fl;
        f_right = fr;
        if (step >= span)
            break;
    }
    throw NumericalError("no sign change found within the search span");
}

/// Plain bisection on a sign-changing bracket until the width is below tol.
template <typename Scalar, typename F>
Scalar bisect(F&& f, Scalar lo, Scalar hi, Scalar tol)
{
    if (lo == hi)
        return lo;
    int s_lo = sign_of(f(lo));
    if (s_lo == 0)
        return lo;
    if (sign_of(f(hi)) == 0)
        return hi;
    for (int it = 0; it < 400 && hi - lo > tol; ++it) {
        const Scalar mid = lo + (hi - lo) / 2;
        if (mid <= lo || mid >= hi)
            break;
        const int s_mid = sign_of(f(mid));
        if (s_mid == 0)
            return mid;
        if (s_mid == s_lo)
            lo = mid;
        else
            hi = mid;
    }
    return lo + (hi - lo) / 2;
}

}  // namespace lagput::detail
