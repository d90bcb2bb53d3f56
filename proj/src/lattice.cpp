#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lagput/european.hpp"
#include "lagput/oracle.hpp"

namespace lagput {

Lattice::Lattice(const MarketParams& params, double horizon, int steps)
{
    if (steps < 1)
        throw std::invalid_argument("lattice needs at least one step");
    if (!(horizon > 0))
        throw std::invalid_argument("lattice horizon must be positive");
    steps_ = steps;
    dt_ = horizon / steps;
    up_ = std::exp(params.volatility() * std::sqrt(dt_));
    down_ = 1 / up_;
    prob_ = (std::exp((params.rate() - params.dividend()) * dt_) - down_) / (up_ - down_);
    discount_ = std::exp(-params.rate() * dt_);
    check();
}

Lattice Lattice::with_probability(int steps, double dt, double up_probability, double rate)
{
    Lattice t;
    t.steps_ = steps;
    t.dt_ = dt;
    t.prob_ = up_probability;
    t.discount_ = std::exp(-rate * dt);
    t.check();
    return t;
}

void Lattice::check() const
{
    if (!(prob_ > 0 && prob_ < 1))
        throw std::invalid_argument("risk-neutral probability outside (0, 1); use more steps");
}

namespace {

/// Backward induction with exercise value `exercise(x)` at log-moneyness x,
/// node (k, j) sitting at x0 + (2j - k) sigma sqrt(dt).
template <typename Exercise>
double american_backward(const Lattice& tree, double x0, double log_step, Exercise&& exercise)
{
    const int n = tree.steps();
    std::vector<double> v(n + 1);
    for (int j = 0; j <= n; ++j)
        v[j] = exercise(x0 + (2 * j - n) * log_step);
    const double pu = tree.discount() * tree.probability();
    const double pd = tree.discount() * (1 - tree.probability());
    for (int k = n - 1; k >= 0; --k) {
        for (int j = 0; j <= k; ++j) {
            const double cont = pu * v[j + 1] + pd * v[j];
            v[j] = std::max(cont, exercise(x0 + (2 * j - k) * log_step));
        }
    }
    return v[0];
}

}  // namespace

double lattice_price_standard(const MarketParams& params, double maturity, int n_steps, double spot)
{
    if (!(spot > 0))
        throw std::domain_error("spot must be positive");
    const Lattice tree(params, maturity, n_steps);
    const double K = params.strike();
    return american_backward(tree, std::log(spot / K), std::log(tree.up()),
                             [K](double x) { return std::max(0.0, K - K * std::exp(x)); });
}

double lattice_price_lagged(const MarketParams& params, const LagContract& contract, int n_steps, double spot)
{
    if (!(spot > 0))
        throw std::domain_error("spot must be positive");
    if (contract.lag() == 0)
        return lattice_price_standard(params, contract.maturity(), n_steps, spot);
    const Lattice tree(params, contract.decision_horizon(), n_steps);
    const double lag = contract.lag();
    return american_backward(tree, std::log(spot / params.strike()), std::log(tree.up()),
                             [&](double x) { return put_price(x, lag, params); });
}

namespace {

struct Rule {
    Eigen::VectorXd nodes;
    Eigen::VectorXd weights;
};

/// 64-point Gauss-Legendre rule on [-1, 1] from the Golub-Welsch eigenproblem.
const Rule& gauss_legendre_64()
{
    static const Rule rule = [] {
        constexpr int n = 64;
        Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            const double b = k / std::sqrt(4.0 * k * k - 1.0);
            jacobi(k, k - 1) = b;
            jacobi(k - 1, k) = b;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
        return Rule{eig.eigenvalues(), 2.0 * eig.eigenvectors().row(0).transpose().array().square().matrix()};
    }();
    return rule;
}

}  // namespace

double quad_european_put(const MarketParams& params, double life, double spot)
{
    if (!(life > 0))
        throw std::domain_error("quad_european_put needs a positive life");
    if (!(spot > 0))
        throw std::domain_error("spot must be positive");
    const double K = params.strike();
    const double drift = params.log_drift() * life;
    const double scale = params.volatility() * std::sqrt(life);
    constexpr double z_floor = -40.0;
    const double z_star = std::min(40.0, (std::log(K / spot) - drift) / scale);
    if (z_star <= z_floor)
        return 0.0;

    const Rule& gl = gauss_legendre_64();
    const int panels = static_cast<int>(std::ceil((z_star - z_floor) / 2.0));
    const double width = (z_star - z_floor) / panels;
    const double inv_root_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    double sum = 0;
    for (int p = 0; p < panels; ++p) {
        const double mid = z_floor + (p + 0.5) * width;
        for (Eigen::Index i = 0; i < gl.nodes.size(); ++i) {
            const double z = mid + 0.5 * width * gl.nodes[i];
            const double payoff = K - spot * std::exp(drift + scale * z);
            sum += gl.weights[i] * 0.5 * width * payoff * inv_root_2pi * std::exp(-0.5 * z * z);
        }
    }
    return std::exp(-params.rate() * life) * std::max(0.0, sum);
}

}  // namespace lagput
