// lagput: price American puts with a delivery lag, run the lag / maturity
// studies, or run the oracle selftest.
//
//   lagput price --scenario FILE --out DIR
//   lagput study --name {lag-monotonicity|small-lag|large-maturity} --scenario FILE --out DIR
//   lagput selftest
//
// Exit codes: 0 ok, 2 input error, 3 solver failure, 4 study assertion failed.
// LAGPUT_WORKERS sets the number of parallel solves in studies.

#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "lagput/app.hpp"

namespace app = lagput::app;

int main(int argc, char** argv)
{
    CLI::App cli{"American puts with delivery lags"};
    cli.require_subcommand(1);

    std::string scenario_file, out_dir, study_name;

    auto* price = cli.add_subcommand("price", "solve the lagged (or standard) put and write surface, boundary, summary");
    price->add_option("--scenario", scenario_file, "scenario JSON")->required();
    price->add_option("--out", out_dir, "output directory")->required();

    auto* study = cli.add_subcommand("study", "run one of the lag / maturity studies and write a pass/fail report");
    study->add_option("--name", study_name, "study to run")
        ->required()
        ->check(CLI::IsMember({"lag-monotonicity", "small-lag", "large-maturity"}));
    study->add_option("--scenario", scenario_file, "scenario JSON")->required();
    study->add_option("--out", out_dir, "output directory")->required();

    auto* selftest = cli.add_subcommand("selftest", "oracle-equivalence checks at reduced size");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return cli.exit(e);
    } catch (const CLI::ParseError& e) {
        cli.exit(e);
        return app::kInputError;
    }

    try {
        if (*selftest) {
            app::SelftestOptions opts;
            opts.corrupt_theta = std::getenv("LAGPUT_SELFTEST_CORRUPT_THETA") != nullptr;
            return app::run_selftest(opts, std::cout) ? app::kOk : 1;
        }
        const app::Scenario sc = app::load_scenario(scenario_file);
        if (*price)
            return app::cmd_price(sc, out_dir, std::cout);
        return app::cmd_study(sc, study_name, out_dir, app::workers_from_env(), std::cout);
    } catch (const app::InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return app::kInputError;
    }
}
