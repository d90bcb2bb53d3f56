#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "json.hpp"

#include "lagput/app.hpp"

namespace lagput::app {

namespace {

using nlohmann::json;

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!obj.is_object())
        throw InputError(where + " must be an object");
    for (const auto& [key, _] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            known = known || key == a;
        if (!known)
            throw InputError("unknown field '" + key + "' in " + where);
    }
}

const json& required(const json& obj, const char* key, const std::string& where)
{
    if (!obj.contains(key))
        throw InputError("missing field '" + std::string(key) + "' in " + where);
    return obj.at(key);
}

double number(const json& v, const std::string& what)
{
    if (!v.is_number())
        throw InputError(what + " must be a number");
    return v.get<double>();
}

int integer(const json& v, const std::string& what)
{
    if (!v.is_number_integer())
        throw InputError(what + " must be an integer");
    const auto i = v.get<long long>();
    if (i < 1 || i > 1'000'000)
        throw InputError(what + " out of range");
    return static_cast<int>(i);
}

std::string file_name(const json& v, const std::string& what)
{
    if (!v.is_string())
        throw InputError(what + " must be a string");
    std::string s = v.get<std::string>();
    if (s.empty() || s.find('/') != std::string::npos || s == "." || s == "..")
        throw InputError(what + " must be a plain file name");
    return s;
}

MarketParams parse_market(const json& m)
{
    only_keys(m, {"strike", "rate", "dividend", "volatility"}, "market");
    return MarketParams(number(required(m, "strike", "market"), "market.strike"),
                        number(required(m, "rate", "market"), "market.rate"),
                        number(required(m, "dividend", "market"), "market.dividend"),
                        number(required(m, "volatility", "market"), "market.volatility"));
}

LagContract parse_contract(const json& c)
{
    only_keys(c, {"maturity", "lag"}, "contract");
    return LagContract(number(required(c, "maturity", "contract"), "contract.maturity"),
                       number(required(c, "lag", "contract"), "contract.lag"));
}

GridOverrides parse_grid(const json& g)
{
    only_keys(g, {"x_min", "x_max", "nx", "nt"}, "grid");
    GridOverrides out;
    if (g.contains("x_min"))
        out.x_min = number(g["x_min"], "grid.x_min");
    if (g.contains("x_max"))
        out.x_max = number(g["x_max"], "grid.x_max");
    if (g.contains("nx"))
        out.nx = integer(g["nx"], "grid.nx");
    if (g.contains("nt"))
        out.nt = integer(g["nt"], "grid.nt");
    return out;
}

PsorOptions parse_psor(const json& p)
{
    only_keys(p, {"omega", "tol", "max_iter"}, "psor");
    PsorOptions out;
    if (p.contains("omega"))
        out.omega = number(p["omega"], "psor.omega");
    if (p.contains("tol"))
        out.tol = number(p["tol"], "psor.tol");
    if (p.contains("max_iter"))
        out.max_iter = integer(p["max_iter"], "psor.max_iter");
    if (!(out.omega > 0 && out.omega < 2))
        throw InputError("psor.omega must lie in (0, 2)");
    if (!(out.tol > 0))
        throw InputError("psor.tol must be positive");
    return out;
}

StudySettings parse_study(const json& s)
{
    only_keys(s, {"name", "lags", "tau_max"}, "study");
    StudySettings out;
    if (s.contains("name")) {
        if (!s["name"].is_string())
            throw InputError("study.name must be a string");
        out.name = s["name"].get<std::string>();
    }
    if (s.contains("lags")) {
        if (!s["lags"].is_array() || s["lags"].empty())
            throw InputError("study.lags must be a non-empty array");
        std::vector<double> lags;
        for (const auto& v : s["lags"])
            lags.push_back(number(v, "study.lags[]"));
        out.lags = lags;
    }
    if (s.contains("tau_max")) {
        out.tau_max = number(s["tau_max"], "study.tau_max");
        if (!(out.tau_max > 0))
            throw InputError("study.tau_max must be positive");
    }
    return out;
}

OutputNames parse_output(const json& o)
{
    only_keys(o,
              {"surface_csv", "surface_json", "boundary_csv", "boundary_json", "summary_json", "report_json"},
              "output");
    OutputNames out;
    auto take = [&](const char* key, std::string& slot) {
        if (o.contains(key))
            slot = file_name(o[key], std::string("output.") + key);
    };
    take("surface_csv", out.surface_csv);
    take("surface_json", out.surface_json);
    take("boundary_csv", out.boundary_csv);
    take("boundary_json", out.boundary_json);
    take("summary_json", out.summary_json);
    take("report_json", out.report_json);
    return out;
}

}  // namespace

Scenario parse_scenario(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(std::string("malformed scenario JSON: ") + e.what());
    }
    try {
        only_keys(doc, {"market", "contract", "spot", "grid", "psor", "study", "output"}, "scenario");
        const MarketParams market = parse_market(required(doc, "market", "scenario"));
        const LagContract contract = parse_contract(required(doc, "contract", "scenario"));
        double spot = market.strike();
        if (doc.contains("spot")) {
            spot = number(doc["spot"], "spot");
            if (!(spot > 0))
                throw InputError("spot must be positive");
        }
        return Scenario{market,
                        contract,
                        spot,
                        doc.contains("grid") ? parse_grid(doc["grid"]) : GridOverrides{},
                        doc.contains("psor") ? parse_psor(doc["psor"]) : PsorOptions{},
                        doc.contains("study") ? parse_study(doc["study"]) : StudySettings{},
                        doc.contains("output") ? parse_output(doc["output"]) : OutputNames{}};
    } catch (const std::invalid_argument& e) {
        throw InputError(std::string("invalid scenario: ") + e.what());
    }
}

Scenario load_scenario(const std::filesystem::path& file)
{
    std::ifstream in(file, std::ios::binary);
    if (!in)
        throw InputError("cannot read scenario file " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

}  // namespace lagput::app
