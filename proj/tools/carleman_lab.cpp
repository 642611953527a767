// Command-line front end: parses one JSON experiment config, dispatches the
// requested subcommand and reports machine-readable errors.
// Exit codes: 0 ok, 2 config error, 3 numeric error.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "carlab/runner.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string output_override;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("-c,--config", args.config_path, "experiment config (JSON)")->required();
    sub->add_option("-o,--output", args.output_override, "override output.dir");
}

void print_error_json(const std::string& kind, const std::string& detail) {
    carlab::ordered_json j;
    j["error"] = kind;
    j["detail"] = detail;
    std::cout << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"carleman-lab: numerical Carleman inequalities and Lipschitz stability"};
    app.require_subcommand(1);

    CommonArgs args;
    CLI::App* verify_carleman =
        app.add_subcommand("verify-carleman", "elliptic Carleman (s, gamma) sweep");
    CLI::App* verify_parabolic =
        app.add_subcommand("verify-parabolic", "parabolic Carleman sweep");
    CLI::App* solve = app.add_subcommand("solve", "single BVP/IBVP with Cauchy export");
    CLI::App* stability =
        app.add_subcommand("stability", "elliptic Lipschitz-stability study");
    CLI::App* parabolic_stability =
        app.add_subcommand("parabolic-stability", "parabolic stability study");
    CLI::App* oracle_check =
        app.add_subcommand("oracle-check", "run the closed-form oracle suite");
    for (CLI::App* sub : {verify_carleman, verify_parabolic, solve, stability,
                          parabolic_stability, oracle_check})
        add_common(sub, args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        print_error_json("ConfigInvalid", e.what());
        return 2;
    }

    try {
        carlab::ExperimentConfig cfg = carlab::load_config(args.config_path);
        if (!args.output_override.empty()) cfg.output_dir = args.output_override;

        if (verify_carleman->parsed()) {
            carlab::run_verify_carleman(cfg);
        } else if (verify_parabolic->parsed()) {
            carlab::run_verify_parabolic(cfg);
        } else if (solve->parsed()) {
            carlab::run_solve(cfg);
        } else if (stability->parsed()) {
            carlab::run_stability(cfg);
        } else if (parabolic_stability->parsed()) {
            carlab::run_parabolic_stability(cfg);
        } else if (oracle_check->parsed()) {
            if (!carlab::run_oracle_check(cfg)) return 3;
        }
        return 0;
    } catch (const carlab::ConfigInvalid& e) {
        print_error_json(e.kind(), e.what());
        return 2;
    } catch (const carlab::Error& e) {
        print_error_json(e.kind(), e.what());
        return 3;
    } catch (const std::exception& e) {
        print_error_json("Internal", e.what());
        return 3;
    }
}
