#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"

#include "lagput/app.hpp"

namespace fs = std::filesystem;
using namespace lagput::app;
using nlohmann::json;

namespace {

const char* kDefault = R"({
  "market": {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2},
  "contract": {"maturity": 1, "lag": 0.25},
  "grid": {"nx": 150, "nt": 60}
})";

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("lagput_app_" + name);
    fs::remove_all(dir);
    return dir;
}

json read_json(const fs::path& p)
{
    std::ifstream in(p);
    return json::parse(in);
}

}  // namespace

TEST(Scenario, ParsesDefaultsAndOverrides)
{
    const Scenario sc = parse_scenario(kDefault);
    EXPECT_EQ(sc.market.strike(), 100);
    EXPECT_EQ(sc.contract.lag(), 0.25);
    EXPECT_EQ(sc.spot, 100);
    EXPECT_EQ(sc.grid.nx, 150);
    EXPECT_EQ(sc.grid.nt, 60);
    EXPECT_FALSE(sc.grid.x_min.has_value());
    EXPECT_EQ(sc.psor.omega, 1.5);
    EXPECT_EQ(sc.study.tau_max, 25);
    EXPECT_EQ(sc.output.summary_json, "summary.json");
}

TEST(Scenario, RejectsUnknownFieldsAtEveryLevel)
{
    EXPECT_THROW(parse_scenario(R"({"market": {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2},
                                    "contract": {"maturity": 1, "lag": 0}, "colour": 1})"),
                 InputError);
    EXPECT_THROW(parse_scenario(R"({"market": {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2, "x": 1},
                                    "contract": {"maturity": 1, "lag": 0}})"),
                 InputError);
    EXPECT_THROW(parse_scenario(R"({"market": {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2},
                                    "contract": {"maturity": 1, "lag": 0}, "grid": {"ny": 3}})"),
                 InputError);
}

TEST(Scenario, RejectsInvariantViolationsAndWrongTypes)
{
    EXPECT_THROW(parse_scenario(R"({"market": {"strike": 100, "rate": 0.05, "dividend": 0.06, "volatility": 0.2},
                                    "contract": {"maturity": 1, "lag": 0}})"),
                 InputError);
    EXPECT_THROW(parse_scenario(R"({"market": {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2},
                                    "contract": {"maturity": 1, "lag": 1}})"),
                 InputError);
    EXPECT_THROW(parse_scenario(R"({"market": {"strike": "100", "rate": 0.05, "dividend": 0.02, "volatility": 0.2},
                                    "contract": {"maturity": 1, "lag": 0}})"),
                 InputError);
    EXPECT_THROW(parse_scenario(R"({"market": {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2},
                                    "contract": {"maturity": 1, "lag": 0}, "grid": {"nx": 10.5}})"),
                 InputError);
    EXPECT_THROW(parse_scenario(R"({"market": {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2},
                                    "contract": {"maturity": 1, "lag": 0}, "output": {"summary_json": "../x"}})"),
                 InputError);
    EXPECT_THROW(parse_scenario(R"({"contract": {"maturity": 1, "lag": 0}})"), InputError);
}

TEST(Scenario, MalformedJsonReportsLineAndColumn)
{
    try {
        parse_scenario("{\n  \"market\": {,\n}");
        FAIL() << "expected an input error";
    } catch (const InputError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
        EXPECT_NE(msg.find("column"), std::string::npos) << msg;
    }
}

TEST(Format, TwelveSignificantDigits)
{
    EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
    EXPECT_EQ(format_number(100.0), "100");
    EXPECT_EQ(format_number(-0.0), "0");
    EXPECT_EQ(format_number(1.5e-20), "1.5e-20");
    EXPECT_THROW(format_number(NAN), std::logic_error);
}

TEST(Workers, EnvironmentOverride)
{
    setenv("LAGPUT_WORKERS", "3", 1);
    EXPECT_EQ(workers_from_env(), 3);
    setenv("LAGPUT_WORKERS", "zero", 1);
    EXPECT_THROW(workers_from_env(), InputError);
    unsetenv("LAGPUT_WORKERS");
    EXPECT_GE(workers_from_env(), 1);
}

TEST(Price, LaggedScenarioWritesArtifacts)
{
    const fs::path out = scratch("lagged");
    std::ostringstream log;
    ASSERT_EQ(cmd_price(parse_scenario(kDefault), out, log), kOk) << log.str();
    for (const char* f : {"surface.csv", "surface.json", "boundary.csv", "boundary.json", "summary.json"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    const json summary = read_json(out / "summary.json");
    EXPECT_EQ(summary["version"], 1);
    const json& d = summary["data"];
    EXPECT_LT(d["x_under"].get<double>(), d["x_bar"].get<double>());
    EXPECT_LT(d["lambda_minus"].get<double>(), 0);
    EXPECT_TRUE(d["standard_price"].is_null());
    EXPECT_GT(d["value_at_spot"].get<double>(), 0);

    std::ifstream csv(out / "surface.csv");
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "tau,x,value");
    std::ifstream bcsv(out / "boundary.csv");
    std::getline(bcsv, header);
    EXPECT_EQ(header, "tau,x_boundary");
}

TEST(Price, ZeroLagReportsStandardPutAndStrikeEndPoint)
{
    const fs::path out = scratch("standard");
    std::ostringstream log;
    const Scenario sc = parse_scenario(R"({
      "market": {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2},
      "contract": {"maturity": 1, "lag": 0}, "grid": {"nx": 300, "nt": 100}})");
    ASSERT_EQ(cmd_price(sc, out, log), kOk) << log.str();
    EXPECT_NE(log.str().find("standard American put"), std::string::npos);
    const json d = read_json(out / "summary.json")["data"];
    EXPECT_TRUE(d["x_bar"].is_null());
    EXPECT_TRUE(d["decomposition_max_gap"].is_null());
    const json grid = read_json(out / "summary.json")["grid"];
    const double h = grid["h"].get<double>();
    EXPECT_NEAR(std::log(d["boundary_end_stock"].get<double>() / 100), 0.0, 2 * h);
    EXPECT_EQ(d["standard_price"], d["value_at_spot"]);
}

TEST(Price, SpotOffTheGridIsAnInputError)
{
    std::ostringstream log;
    const Scenario sc = parse_scenario(R"({
      "market": {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2},
      "contract": {"maturity": 1, "lag": 0.25}, "spot": 1e9, "grid": {"nx": 100, "nt": 50}})");
    EXPECT_EQ(cmd_price(sc, scratch("offgrid"), log), kInputError);
}

TEST(Price, SolverFailureMapsToExitThree)
{
    std::ostringstream log;
    const Scenario sc = parse_scenario(R"({
      "market": {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2},
      "contract": {"maturity": 1, "lag": 0.25}, "grid": {"nx": 100, "nt": 50},
      "psor": {"max_iter": 1, "tol": 1e-15}})");
    EXPECT_EQ(cmd_price(sc, scratch("solverfail"), log), kSolverError);
}

TEST(Study, NameChecks)
{
    std::ostringstream log;
    const Scenario sc = parse_scenario(kDefault);
    EXPECT_EQ(cmd_study(sc, "nonsense", scratch("badname"), 1, log), kInputError);
    const Scenario named = parse_scenario(R"({
      "market": {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2},
      "contract": {"maturity": 1, "lag": 0.25}, "study": {"name": "small-lag"}})");
    EXPECT_EQ(cmd_study(named, "lag-monotonicity", scratch("mismatch"), 1, log), kInputError);
}

TEST(Study, LagMonotonicityReportOnSmallGrid)
{
    const fs::path out = scratch("lagmono");
    std::ostringstream log;
    const Scenario sc = parse_scenario(R"({
      "market": {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2},
      "contract": {"maturity": 1, "lag": 0.25}, "grid": {"nx": 200, "nt": 100},
      "study": {"lags": [0.1, 0.2]}})");
    ASSERT_EQ(cmd_study(sc, "lag-monotonicity", out, 2, log), kOk) << log.str();
    const json rep = read_json(out / "report.json");
    EXPECT_TRUE(rep["passed"].get<bool>());
    EXPECT_EQ(rep["study"], "lag-monotonicity");
    EXPECT_EQ(rep["data"]["lags"].size(), 2u);
}

TEST(Study, LargeMaturityNeedsAPositiveLag)
{
    std::ostringstream log;
    const Scenario sc = parse_scenario(R"({
      "market": {"strike": 100, "rate": 0.05, "dividend": 0.02, "volatility": 0.2},
      "contract": {"maturity": 1, "lag": 0}})");
    EXPECT_EQ(cmd_study(sc, "large-maturity", scratch("lm0"), 1, log), kInputError);
}

TEST(Selftest, PassesAndDetectsCorruptedTheta)
{
    std::ostringstream log;
    EXPECT_TRUE(run_selftest({}, log)) << log.str();
    std::ostringstream bad;
    EXPECT_FALSE(run_selftest({true}, bad));
}
