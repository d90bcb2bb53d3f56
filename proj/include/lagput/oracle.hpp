#pragma once

// Slow, independent reference pricers: recombining binomial lattices for the
// standard and the lagged put, a quadrature European put, and an exhaustive
// search over stopping rules that checks the reduction of the lagged stopping
// problem to standard stopping on the modified obstacle.

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "lagput/model.hpp"

namespace lagput {

/// Recombining binomial tree. Node (k, j) has j up moves after k steps.
class Lattice {
public:
    /// Cox-Ross-Rubinstein tree over `horizon` years in `steps` steps.
    Lattice(const MarketParams& params, double horizon, int steps);

    /// Tree with an explicit up-probability; used for synthetic stopping problems.
    static Lattice with_probability(int steps, double dt, double up_probability, double rate);

    int steps() const { return steps_; }
    double dt() const { return dt_; }
    double up() const { return up_; }
    double down() const { return down_; }
    double probability() const { return prob_; }
    /// One-step discount factor e^{-r dt}.
    double discount() const { return discount_; }

private:
    Lattice() = default;
    void check() const;

    int steps_ = 0;
    double dt_ = 0;
    double up_ = 1;
    double down_ = 1;
    double prob_ = 0.5;
    double discount_ = 1;
};

double lattice_price_standard(const MarketParams& params, double maturity, int n_steps, double spot);

/// Backward induction over [0, T - lag] with the European put of life `lag`
/// as exercise value and terminal layer.
double lattice_price_lagged(const MarketParams& params, const LagContract& contract, int n_steps, double spot);

/// Discounted expectation of (K - X_life)^+ by Gauss-Legendre panels over the
/// exercised half-line of the standard normal driver.
double quad_european_put(const MarketParams& params, double life, double spot);

/// Lagged stopping problem on a lattice: stop at decision step k, receive
/// running payoff f until k + d, then S at k + d (or xi at the horizon).
struct StoppingProblem {
    int horizon = 0;             ///< N
    int lag_steps = 0;           ///< d
    Eigen::VectorXd terminal;    ///< xi(j), j = 0..N
    Eigen::MatrixXd running;     ///< f(k, j), j <= k
    double discount_rate = 0;    ///< r
    Eigen::MatrixXd payoff;      ///< S(k, j), j <= k

    void validate(const Lattice& tree) const;
};

struct EnumerationResult {
    double enumerated = 0;
    double dp = 0;
    std::uint64_t rules_listed = 0;  ///< 0 when the product-decomposed search was used
};

/// Number of adapted stopping rules on a binary path tree of decision depth m:
/// c(0) = 1, c(m) = 1 + c(m - 1)^2.
std::uint64_t stopping_rule_count(int decision_depth);

/// Optimum of the lagged problem over every adapted stopping rule on the
/// non-recombining path tree, next to the modified-obstacle dynamic program on
/// the recombining tree. Rules are listed one by one when there are at most
/// 458330 of them (decision depth <= 5); larger trees use the exact
/// product decomposition of the rule set (stop here, or pick a rule in each
/// child subtree independently).
EnumerationResult enumerate_delay_equivalence(const StoppingProblem& problem, const Lattice& tree);

/// The two enumeration routes separately, for cross-checking.
double enumerate_by_listing(const StoppingProblem& problem, const Lattice& tree, std::uint64_t* rules = nullptr);
double enumerate_by_decomposition(const StoppingProblem& problem, const Lattice& tree);
double modified_obstacle_dp(const StoppingProblem& problem, const Lattice& tree);

}  // namespace lagput
