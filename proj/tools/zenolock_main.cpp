#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "zenolock/commands.hpp"
#include "zenolock/parallel.hpp"

int main(int argc, char** argv) {
    zenolock::RunOptions options;
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;

    CLI::App app{"Zeno-locked clock simulations: dephasing, zeno2, zeno4, readout, allan"};
    app.set_version_flag("--version", std::string(zenolock::kToolVersion));
    app.add_option("command", options.command, "Subcommand to run")
        ->required()
        ->check(CLI::IsMember(zenolock::command_names()));
    app.add_option("--config", config_path, "Config file with one [section] per subcommand")->required();
    app.add_option("--out", out_dir, "Output directory")->required();
    auto* seed_opt = app.add_option("--seed", seed, "Overrides the seed in the config");
    app.add_flag("--plots", options.plots, "Also write SVG plots");
    app.add_flag("--strict", options.strict, "Exit 3 when parameters leave the perturbative regime");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : zenolock::kExitUsage;
    }

    options.config_path = config_path;
    options.out_dir = out_dir;
    if (seed_opt->count() > 0) options.seed = seed;
    options.threads = zenolock::default_thread_count();
    return zenolock::execute(options, std::cout, std::cerr);
}
