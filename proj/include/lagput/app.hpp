#pragma once

// Scenario-driven front end: JSON scenario parsing, the price / study /
// selftest commands and their CSV + JSON artifacts. The command-line binary is
// a thin wrapper over these functions.

#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lagput/fd_solver.hpp"
#include "lagput/model.hpp"

namespace lagput::app {

enum ExitCode : int { kOk = 0, kInputError = 2, kSolverError = 3, kStudyFailed = 4 };

/// Bad scenario file or arguments; maps to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GridOverrides {
    std::optional<double> x_min;
    std::optional<double> x_max;
    int nx = 600;
    int nt = 600;
};

struct StudySettings {
    std::optional<std::string> name;
    std::optional<std::vector<double>> lags;
    double tau_max = 25.0;
};

/// Artifact file names, relative to the --out directory.
struct OutputNames {
    std::string surface_csv = "surface.csv";
    std::string surface_json = "surface.json";
    std::string boundary_csv = "boundary.csv";
    std::string boundary_json = "boundary.json";
    std::string summary_json = "summary.json";
    std::string report_json = "report.json";
};

struct Scenario {
    MarketParams market;
    LagContract contract;
    double spot;
    GridOverrides grid;
    PsorOptions psor;
    StudySettings study;
    OutputNames output;
};

/// Parses a scenario document. Unknown keys, wrong types and invariant
/// violations raise InputError; malformed JSON reports line and column.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::filesystem::path& file);

inline constexpr const char* kStudyNames[] = {"lag-monotonicity", "small-lag", "large-maturity"};

int cmd_price(const Scenario& scenario, const std::filesystem::path& out, std::ostream& log);
int cmd_study(const Scenario& scenario, const std::string& name, const std::filesystem::path& out, int workers,
              std::ostream& log);

struct SelftestOptions {
    bool corrupt_theta = false;  ///< test hook: flip the sign of theta in every check that consumes it
};

/// Oracle-equivalence checks at reduced size; true iff all pass.
bool run_selftest(const SelftestOptions& options, std::ostream& log);

/// Worker count from LAGPUT_WORKERS, else the hardware concurrency (capped at 8).
int workers_from_env();

/// %.12g, locale independent; non-finite values are rejected.
std::string format_number(double v);

}  // namespace lagput::app
