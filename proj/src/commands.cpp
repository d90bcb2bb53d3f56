#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <string>
#include <system_error>
#include <thread>

#include "json.hpp"

#include "lagput/app.hpp"
#include "lagput/errors.hpp"
#include "lagput/european.hpp"
#include "lagput/perpetual.hpp"

namespace lagput::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

/// Rounds to the value that "%.12g" prints, so that the JSON writer (which
/// emits the shortest round-trip form) never shows more than 12 digits.
json num(double v)
{
    if (!std::isfinite(v))
        return nullptr;
    const std::string s = format_number(v);
    double back = 0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    return back;
}

json num_array(const std::vector<double>& v)
{
    json a = json::array();
    for (double x : v)
        a.push_back(num(x));
    return a;
}

json params_json(const MarketParams& p)
{
    return {{"strike", num(p.strike())},
            {"rate", num(p.rate())},
            {"dividend", num(p.dividend())},
            {"volatility", num(p.volatility())}};
}

json contract_json(double maturity, double lag)
{
    return {{"maturity", num(maturity)}, {"lag", num(lag)}};
}

json grid_json(const Grid& g)
{
    return {{"x_min", num(g.x_min)}, {"x_max", num(g.x_max)}, {"nx", g.nx},
            {"tau_max", num(g.tau_max)}, {"nt", g.nt}, {"h", num(g.h())}, {"dtau", num(g.dtau())}};
}

json document(const char* kind, const MarketParams& p, double maturity, double lag, const Grid& g, json data)
{
    return {{"version", kFormatVersion}, {"kind", kind},
            {"params", params_json(p)}, {"contract", contract_json(maturity, lag)},
            {"grid", grid_json(g)}, {"data", std::move(data)}};
}

json violation_json(const Violation& v)
{
    if (v.kind.empty())
        return nullptr;
    return {{"kind", v.kind}, {"lag_a", num(v.lag_a)}, {"lag_b", num(v.lag_b)},
            {"t", num(v.t)}, {"x", num(v.x)}, {"magnitude", num(v.magnitude)}};
}

void write_file(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw fs::filesystem_error("cannot open for writing", path, std::make_error_code(std::errc::io_error));
    out << text;
    if (!out)
        throw fs::filesystem_error("write failed", path, std::make_error_code(std::errc::io_error));
}

void write_json(const fs::path& path, const json& doc)
{
    write_file(path, doc.dump(2) + "\n");
}

std::string surface_csv(const Surface& s)
{
    const Grid& g = s.grid;
    std::string out = "tau,x,value\n";
    out.reserve(static_cast<std::size_t>(g.nt + 1) * g.node_count() * 48);
    for (int k = 0; k <= g.nt; ++k) {
        const std::string tau = format_number(g.tau(k));
        for (int i = 0; i < g.node_count(); ++i) {
            out += tau;
            out += ',';
            out += format_number(g.x(i));
            out += ',';
            out += format_number(s.values(k, i));
            out += '\n';
        }
    }
    return out;
}

json surface_data(const Surface& s)
{
    const Grid& g = s.grid;
    json tau = json::array(), x = json::array(), values = json::array();
    for (int k = 0; k <= g.nt; ++k)
        tau.push_back(num(g.tau(k)));
    for (int i = 0; i < g.node_count(); ++i)
        x.push_back(num(g.x(i)));
    for (int k = 0; k <= g.nt; ++k) {
        json row = json::array();
        for (int i = 0; i < g.node_count(); ++i)
            row.push_back(num(s.values(k, i)));
        values.push_back(std::move(row));
    }
    return {{"tau", std::move(tau)}, {"x", std::move(x)}, {"values", std::move(values)}};
}

std::string boundary_csv(const Boundary& b)
{
    std::string out = "tau,x_boundary\n";
    for (std::size_t j = 0; j < b.taus.size(); ++j)
        out += format_number(b.taus[j]) + ',' + format_number(b.xs[j]) + '\n';
    return out;
}

void apply_span(Grid& grid, const GridOverrides& o)
{
    if (o.x_min)
        grid.x_min = *o.x_min;
    if (o.x_max)
        grid.x_max = *o.x_max;
    if (!(grid.x_min < grid.x_max))
        throw InputError("grid.x_min must be below grid.x_max");
}

/// Runs `body`, mapping exceptions onto the exit-code contract.
template <typename Body>
int guarded(std::ostream& log, Body&& body)
{
    try {
        return body();
    } catch (const InputError& e) {
        log << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::invalid_argument& e) {
        log << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const std::domain_error& e) {
        log << "input error: " << e.what() << '\n';
        return kInputError;
    } catch (const fs::filesystem_error& e) {
        log << "output error: " << e.what() << '\n';
        return kInputError;
    } catch (const SolverError& e) {
        log << "solver failure: " << e.what() << '\n';
        return kSolverError;
    } catch (const std::exception& e) {
        log << "solver failure: " << e.what() << '\n';
        return kSolverError;
    }
}

}  // namespace

std::string format_number(double v)
{
    if (!std::isfinite(v))
        throw std::logic_error("cannot format a non-finite number");
    if (v == 0)
        v = 0;  // drop the sign of negative zero
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

int workers_from_env()
{
    if (const char* env = std::getenv("LAGPUT_WORKERS")) {
        const std::string s(env);
        int n = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), n);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size() || n < 1 || n > 256)
            throw InputError("LAGPUT_WORKERS must be an integer in 1..256");
        return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::clamp(hw, 1u, 8u));
}

int cmd_price(const Scenario& sc, const fs::path& out, std::ostream& log)
{
    return guarded(log, [&] {
        const MarketParams& P = sc.market;
        const LagContract& C = sc.contract;
        const double K = P.strike();
        const double lag = C.lag();
        Grid grid = default_grid(P, lag, C.decision_horizon(), sc.grid.nx, sc.grid.nt);
        apply_span(grid, sc.grid);
        const double x_spot = std::log(sc.spot / K);
        if (!(x_spot > grid.x_min && x_spot < grid.x_max))
            throw InputError("spot lies outside the grid");
        const double threshold = default_threshold(sc.psor);

        Surface v;
        Boundary boundary;
        json data;
        if (lag > 0) {
            v = solve_v_lagged(P, C, grid, sc.psor);
            const Surface u = solve_u(P, C, grid, sc.psor);
            const Eigen::VectorXd p = put_price(grid.nodes(), lag, P);
            const double gap = ((v.values - u.values).rowwise() - p.transpose()).cwiseAbs().maxCoeff();
            const auto sol = find_x_under(lag, P);
            boundary = extract_boundary(u, threshold);
            data = {{"spot", num(sc.spot)},
                    {"value_at_spot", num(surface_value(v, grid.nt, x_spot))},
                    {"standard_price", nullptr},
                    {"x_bar", num(sol.x_bar)},
                    {"x_under", num(sol.x_under)},
                    {"lambda_minus", num(sol.roots.lambda_minus)},
                    {"decomposition_max_gap", num(gap)}};
        } else {
            v = solve_v_standard(P, C.maturity(), grid, sc.psor);
            boundary = extract_boundary(v, threshold);
            const double price = surface_value(v, grid.nt, x_spot);
            data = {{"spot", num(sc.spot)},
                    {"value_at_spot", num(price)},
                    {"standard_price", num(price)},
                    {"x_bar", nullptr},
                    {"x_under", nullptr},
                    {"lambda_minus", nullptr},
                    {"decomposition_max_gap", nullptr}};
        }
        const double end_stock = boundary_stock_price(boundary.xs.front(), P);
        data["boundary_end_stock"] = num(end_stock);
        data["boundary_samples"] = boundary.taus.size();
        data["solver"] = {{"max_sweeps", v.stats.max_sweeps}, {"max_residual", num(v.stats.max_residual)}};

        fs::create_directories(out);
        write_file(out / sc.output.surface_csv, surface_csv(v));
        write_file(out / sc.output.boundary_csv, boundary_csv(boundary));
        write_json(out / sc.output.surface_json,
                   document("surface", P, C.maturity(), lag, grid, surface_data(v)));
        write_json(out / sc.output.boundary_json,
                   document("boundary", P, C.maturity(), lag, grid,
                            {{"tau", num_array(boundary.taus)}, {"x_boundary", num_array(boundary.xs)}}));
        write_json(out / sc.output.summary_json, document("price-summary", P, C.maturity(), lag, grid, data));

        if (lag > 0) {
            log << "lagged put value at spot " << format_number(sc.spot) << ": "
                << format_number(data["value_at_spot"].get<double>()) << '\n';
        } else {
            log << "standard American put price at spot " << format_number(sc.spot) << ": "
                << format_number(data["value_at_spot"].get<double>()) << '\n';
        }
        log << "exercise boundary end point: " << format_number(end_stock) << '\n';
        return int{kOk};
    });
}

int cmd_study(const Scenario& sc, const std::string& name, const fs::path& out, int workers, std::ostream& log)
{
    return guarded(log, [&] {
        if (std::find(std::begin(kStudyNames), std::end(kStudyNames), name) == std::end(kStudyNames))
            throw InputError("unknown study '" + name + "'");
        if (sc.study.name && *sc.study.name != name)
            throw InputError("scenario names study '" + *sc.study.name + "' but '" + name + "' was requested");

        const MarketParams& P = sc.market;
        const StudyOptions options{sc.psor, workers};
        const double T = sc.contract.maturity();
        bool passed = false;
        json doc;

        if (name == "lag-monotonicity") {
            const auto lags = sc.study.lags.value_or(std::vector<double>{0.05, 0.1, 0.2, 0.4});
            Grid grid = study_grid(P, T, lags, sc.grid.nx, sc.grid.nt);
            apply_span(grid, sc.grid);
            const auto rep = study_lag_monotonicity(P, T, lags, grid, options);
            passed = rep.passed;
            Violation worst = rep.worst_chain;
            for (const auto* v : {&rep.worst_upper, &rep.worst_lower})
                if (worst.kind.empty() || v->magnitude > worst.magnitude)
                    worst = *v;
            doc = document("study-report", P, T, sc.contract.lag(), grid,
                           {{"lags", num_array(rep.lags)},
                            {"values_at_strike", num_array(rep.values_at_strike)},
                            {"slack", num(rep.slack)},
                            {"standard_gap", num(rep.standard_gap)},
                            {"worst_chain", violation_json(rep.worst_chain)},
                            {"worst_upper", violation_json(rep.worst_upper)},
                            {"worst_lower", violation_json(rep.worst_lower)}});
            doc["worst_violation"] = violation_json(worst);
        } else if (name == "small-lag") {
            const auto lags = sc.study.lags.value_or(std::vector<double>{0.2, 0.1, 0.05, 0.025});
            Grid grid = study_grid(P, T, lags, sc.grid.nx, sc.grid.nt);
            apply_span(grid, sc.grid);
            const auto rep = study_small_lag(P, T, lags, grid, options);
            passed = rep.passed;
            json gaps = json::array();
            for (const auto& row : rep.gaps)
                gaps.push_back(num_array(row));
            doc = document("study-report", P, T, sc.contract.lag(), grid,
                           {{"lags", num_array(rep.lags)},
                            {"probe_times", num_array(rep.probe_times)},
                            {"gaps", std::move(gaps)},
                            {"end_points", num_array(rep.end_points)},
                            {"end_point_targets", num_array(rep.end_point_targets)},
                            {"standard_end_point", num(rep.standard_end_point)},
                            {"tolerance", num(rep.tolerance)}});
            doc["worst_violation"] = violation_json(rep.worst);
        } else {
            const double lag = sc.contract.lag();
            if (!(lag > 0))
                throw InputError("large-maturity study needs a positive contract lag");
            if (sc.grid.x_min || sc.grid.x_max)
                throw InputError("large-maturity study uses the default span; drop grid.x_min/x_max");
            const double tau_max = sc.study.tau_max;
            const auto rep = study_large_maturity(P, lag, tau_max, sc.grid.nx, sc.grid.nt, options);
            passed = rep.passed;
            const Grid grid = default_grid(P, lag, tau_max, sc.grid.nx, sc.grid.nt);
            doc = document("study-report", P, tau_max + lag, lag, grid,
                           {{"tau_max", num(rep.tau_max)},
                            {"x_under", num(rep.x_under)},
                            {"x_boundary_end", num(rep.x_boundary_end)},
                            {"boundary_gap", num(rep.boundary_gap)},
                            {"boundary_tolerance", num(rep.boundary_tolerance)},
                            {"value_gap", num(rep.value_gap)},
                            {"value_tolerance", num(rep.value_tolerance)}});
            json worst = nullptr;
            if (rep.value_gap > rep.value_tolerance)
                worst = {{"kind", "value-gap"}, {"lag_a", num(lag)}, {"lag_b", num(lag)}, {"t", 0},
                         {"x", nullptr}, {"magnitude", num(rep.value_gap - rep.value_tolerance)}};
            else if (rep.boundary_gap > rep.boundary_tolerance)
                worst = {{"kind", "boundary-gap"}, {"lag_a", num(lag)}, {"lag_b", num(lag)}, {"t", 0},
                         {"x", num(rep.x_boundary_end)}, {"magnitude", num(rep.boundary_gap - rep.boundary_tolerance)}};
            doc["worst_violation"] = worst;
        }
        doc["study"] = name;
        doc["passed"] = passed;

        fs::create_directories(out);
        write_json(out / sc.output.report_json, doc);
        log << "study " << name << (passed ? " passed" : " FAILED") << '\n';
        return passed ? int{kOk} : int{kStudyFailed};
    });
}

}  // namespace lagput::app
