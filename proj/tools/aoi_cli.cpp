// aoi: run age-of-information experiments from a JSON config.
//
//   aoi run <config> [--out <path>] [--seed <n>] [--list-cases]
//
// Exit status: 0 when every case passes, 1 when any case fails, 2 on a
// configuration or I/O error.

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fstream>
#include <iostream>

#include "aoi/errors.hpp"
#include "aoi/harness.hpp"

namespace {

int run(const std::string& config_path, const std::string& out_override, const std::optional<std::uint64_t>& seed,
        bool list_only) {
    aoi::ExperimentConfig cfg;
    try {
        cfg = aoi::load_experiment_config(config_path);
    } catch (const aoi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }
    if (seed) aoi::override_seed(cfg, *seed);

    if (list_only) {
        for (const auto& c : cfg.cases)
            std::cout << fmt::format("{}\t{}\tseed={}\n", c.name, aoi::to_string(c.sim.spec.discipline), c.sim.seed);
        return 0;
    }

    const std::string out_path = out_override.empty() ? cfg.output_path : out_override;
    const auto table = aoi::run_experiments(cfg);

    if (out_path.empty()) {
        aoi::emit_csv(table, std::cout);
    } else {
        std::ofstream csv(out_path);
        std::ofstream long_csv(aoi::long_csv_path(out_path));
        if (!csv || !long_csv) {
            std::cerr << "cannot write output '" << out_path << "'\n";
            return 2;
        }
        aoi::emit_csv(table, csv);
        aoi::emit_long_csv(table, long_csv);
    }
    std::cerr << aoi::emit_summary(table);

    const bool all_ok = std::all_of(table.begin(), table.end(), [](const auto& r) { return r.ok(); });
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-time age-of-information experiments"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "run every case in a config file");
    std::string config_path, out_path;
    std::optional<std::uint64_t> seed;
    bool list_only = false;
    run_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
    run_cmd->add_option("--out", out_path, "CSV output path (overrides the config)");
    run_cmd->add_option("--seed", seed, "seed applied to every case");
    run_cmd->add_flag("--list-cases", list_only, "list case names and exit");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    try {
        return run(config_path, out_path, seed, list_only);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
