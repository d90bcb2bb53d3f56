#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "lagput/oracle.hpp"

namespace lagput {

void StoppingProblem::validate(const Lattice& tree) const
{
    if (horizon < 1 || horizon > 12)
        throw std::invalid_argument("enumeration horizon must lie in 1..12");
    if (lag_steps < 0 || lag_steps > 3 || lag_steps >= horizon)
        throw std::invalid_argument("enumeration lag must lie in 0..min(3, horizon - 1)");
    if (tree.steps() != horizon)
        throw std::invalid_argument("tree and stopping problem disagree on the horizon");
    const Eigen::Index n1 = horizon + 1;
    if (terminal.size() != n1 || running.rows() != n1 || running.cols() != n1 || payoff.rows() != n1
        || payoff.cols() != n1)
        throw std::invalid_argument("stopping problem arrays must be (N+1) long / (N+1)x(N+1)");
    if (!terminal.allFinite() || !running.allFinite() || !payoff.allFinite() || !std::isfinite(discount_rate))
        throw std::invalid_argument("stopping problem data must be finite");
}

std::uint64_t stopping_rule_count(int decision_depth)
{
    if (decision_depth < 0 || decision_depth > 5)
        throw std::invalid_argument("rule count overflows beyond decision depth 5");
    std::uint64_t c = 1;
    for (int m = 1; m <= decision_depth; ++m)
        c = 1 + c * c;
    return c;
}

namespace {

/// W(prefix, tau): probability-weighted, discounted payoff summed over every
/// full path that starts with the given decision-depth prefix, if the rule
/// stops at step tau on that prefix.
Eigen::MatrixXd path_table(const StoppingProblem& pb, const Lattice& tree)
{
    const int N = pb.horizon;
    const int d = pb.lag_steps;
    const int M = N - d;
    const double p = tree.probability();
    const double D = std::exp(-pb.discount_rate * tree.dt());
    const double dt = tree.dt();

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(Eigen::Index{1} << M, M + 1);
    for (std::uint32_t path = 0; path < (1u << N); ++path) {
        const int ups = std::popcount(path);
        const double prob = std::pow(p, ups) * std::pow(1 - p, N - ups);
        auto level = [&](int k) { return std::popcount(path & ((1u << k) - 1)); };

        // running[k] = sum_{i<k} D^i f(i, j_i) dt
        std::vector<double> running(N + 1, 0.0);
        for (int k = 0; k < N; ++k)
            running[k + 1] = running[k] + std::pow(D, k) * pb.running(k, level(k)) * dt;

        const std::uint32_t prefix = path & ((1u << M) - 1);
        for (int tau = 0; tau <= M; ++tau) {
            const int end = tau + d;
            const double last = end < N ? pb.payoff(end, level(end)) : pb.terminal(level(N));
            w(prefix, tau) += prob * (running[end] + std::pow(D, end) * last);
        }
    }
    return w;
}

}  // namespace

double enumerate_by_listing(const StoppingProblem& pb, const Lattice& tree, std::uint64_t* rules)
{
    pb.validate(tree);
    const int M = pb.horizon - pb.lag_steps;
    if (M > 5)
        throw std::invalid_argument("listing every rule is limited to decision depth 5");
    const Eigen::MatrixXd w = path_table(pb, tree);

    // Each rule is the stopping step on every prefix; for a subtree of height
    // h the vector is indexed by the remaining moves, first move in bit 0.
    std::vector<std::vector<std::vector<std::uint8_t>>> by_height(M + 1);
    by_height[0] = {{0}};
    for (int h = 1; h <= M; ++h) {
        const std::size_t width = std::size_t{1} << h;
        auto& out = by_height[h];
        out.emplace_back(width, 0);
        for (const auto& down : by_height[h - 1]) {
            for (const auto& up : by_height[h - 1]) {
                std::vector<std::uint8_t> v(width);
                for (std::size_t r = 0; r < width / 2; ++r) {
                    v[r << 1] = static_cast<std::uint8_t>(down[r] + 1);
                    v[(r << 1) | 1] = static_cast<std::uint8_t>(up[r] + 1);
                }
                out.push_back(std::move(v));
            }
        }
        by_height[h - 1].shrink_to_fit();
    }

    double best = -std::numeric_limits<double>::infinity();
    for (const auto& rule : by_height[M]) {
        double value = 0;
        for (std::size_t prefix = 0; prefix < rule.size(); ++prefix)
            value += w(static_cast<Eigen::Index>(prefix), rule[prefix]);
        best = std::max(best, value);
    }
    if (rules)
        *rules = by_height[M].size();
    return best;
}

double enumerate_by_decomposition(const StoppingProblem& pb, const Lattice& tree)
{
    pb.validate(tree);
    const int M = pb.horizon - pb.lag_steps;
    // sums[k](prefix, tau): the path table aggregated to depth-k prefixes.
    Eigen::MatrixXd sums = path_table(pb, tree);
    Eigen::VectorXd best = sums.col(M);
    for (int k = M - 1; k >= 0; --k) {
        const Eigen::Index width = Eigen::Index{1} << k;
        Eigen::MatrixXd coarse(width, M + 1);
        Eigen::VectorXd next(width);
        for (Eigen::Index s = 0; s < width; ++s) {
            coarse.row(s) = sums.row(s) + sums.row(s | width);
            next[s] = std::max(coarse(s, k), best[s] + best[s | width]);
        }
        sums = std::move(coarse);
        best = std::move(next);
    }
    return best[0];
}

double modified_obstacle_dp(const StoppingProblem& pb, const Lattice& tree)
{
    pb.validate(tree);
    const int N = pb.horizon;
    const int d = pb.lag_steps;
    const double p = tree.probability();
    const double D = std::exp(-pb.discount_rate * tree.dt());
    const double dt = tree.dt();

    // Value of stopping at step k: d steps of running payoff, then S or xi.
    auto stop_value = [&](int k) {
        const int end = k + d;
        Eigen::VectorXd g(end + 1);
        for (int j = 0; j <= end; ++j)
            g[j] = end < N ? pb.payoff(end, j) : pb.terminal(j);
        for (int level = end - 1; level >= k; --level) {
            Eigen::VectorXd prev(level + 1);
            for (int j = 0; j <= level; ++j)
                prev[j] = pb.running(level, j) * dt + D * (p * g[j + 1] + (1 - p) * g[j]);
            g = std::move(prev);
        }
        return g;
    };

    const int M = N - d;
    Eigen::VectorXd y = stop_value(M);
    for (int k = M - 1; k >= 0; --k) {
        const Eigen::VectorXd stop = stop_value(k);
        Eigen::VectorXd prev(k + 1);
        for (int j = 0; j <= k; ++j)
            prev[j] = std::max(stop[j], pb.running(k, j) * dt + D * (p * y[j + 1] + (1 - p) * y[j]));
        y = std::move(prev);
    }
    return y[0];
}

EnumerationResult enumerate_delay_equivalence(const StoppingProblem& pb, const Lattice& tree)
{
    EnumerationResult out;
    const int M = pb.horizon - pb.lag_steps;
    if (M <= 5)
        out.enumerated = enumerate_by_listing(pb, tree, &out.rules_listed);
    else
        out.enumerated = enumerate_by_decomposition(pb, tree);
    out.dp = modified_obstacle_dp(pb, tree);
    return out;
}

}  // namespace lagput
