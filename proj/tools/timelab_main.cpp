// timelab: run declarative quantum/classical time-measurement scenarios
// and export CSV/JSON results.

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "timelab/errors.hpp"
#include "timelab/scenario.hpp"

namespace rep = timelab::report;

namespace {

rep::ExportFormat parse_format(const std::string& f) {
    if (f == "csv") return rep::ExportFormat::csv;
    if (f == "json") return rep::ExportFormat::json;
    throw timelab::config_error("format must be csv or json");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"timelab - quantum and classical arrival-time measurement laboratory"};
    app.require_subcommand(1);

    long seed = 0;
    app.add_option("--seed", seed,
                   "reserved for future stochastic scenarios; current scenarios are "
                   "deterministic and ignore it");

    std::string scenario_path, out_dir = "out", format = "csv";

    CLI::App* run = app.add_subcommand("run", "run one scenario file");
    run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    CLI::App* sweep = app.add_subcommand("sweep", "run a sweep scenario file");
    sweep->add_option("scenario", scenario_path, "sweep JSON file")->required();
    sweep->add_option("--out", out_dir, "output directory");
    sweep->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    CLI::App* validate = app.add_subcommand("validate", "validate a scenario file");
    validate->add_option("scenario", scenario_path, "scenario JSON file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (validate->parsed()) {
            rep::ScenarioConfig cfg = rep::load_scenario(scenario_path);
            std::printf("ok: %s (kind %s)\n", cfg.id.c_str(), cfg.kind.c_str());
            return 0;
        }
        rep::ScenarioConfig cfg = rep::load_scenario(scenario_path);
        if (run->parsed()) {
            if (cfg.kind == "sweep")
                throw timelab::config_error("use the sweep subcommand for sweep scenarios");
            rep::RunResult result = rep::run_scenario(cfg);
            const auto files = rep::export_results({result}, parse_format(format), out_dir);
            for (const std::string& f : files) std::printf("wrote %s\n", f.c_str());
            return 0;
        }
        if (cfg.kind != "sweep")
            throw timelab::config_error("the sweep subcommand requires kind = \"sweep\"");
        rep::SweepResult result = rep::run_sweep(cfg);
        const auto files = rep::export_sweep(result, parse_format(format), out_dir);
        for (const std::string& f : files) std::printf("wrote %s\n", f.c_str());
        return 0;
    } catch (const timelab::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
