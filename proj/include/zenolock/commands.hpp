// commands.hpp - subcommand orchestration behind the command-line tool.
//
// Each cmd_* reads its own [section] of the config, runs the experiment and
// returns tables plus a summary; execute() owns all file output:
//   <out>/manifest.txt, <out>/<record>.csv and, with plots, <out>/<record>.svg.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zenolock/config.hpp"
#include "zenolock/svg_plot.hpp"
#include "zenolock/trace_record.hpp"

namespace zenolock {

inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitConfig = 2,
    kExitOutOfRegime = 3,  // only with --strict
    kExitInvalid = 4,      // numerical validity check failed (e.g. Fock cutoff)
};

struct RunOptions {
    std::string command;
    std::filesystem::path config_path;
    std::filesystem::path out_dir;
    std::optional<std::uint64_t> seed;
    bool plots = false;
    bool strict = false;
    unsigned threads = 1;
};

using KeyValues = std::vector<std::pair<std::string, std::string>>;

struct CommandOutput {
    std::vector<TraceRecord> records;
    std::vector<std::pair<std::string, PlotSpec>> plots;  // file stem, plot
    KeyValues resolved;                                   // every setting after defaults
    KeyValues results;
    std::string table;  // extra stdout text
    std::uint64_t seed = 0;
    bool out_of_regime = false;
    bool invalid = false;
};

CommandOutput cmd_dephasing(ConfigSection section, const RunOptions& options);
CommandOutput cmd_zeno2(ConfigSection section, const RunOptions& options);
CommandOutput cmd_zeno4(ConfigSection section, const RunOptions& options);
CommandOutput cmd_readout(ConfigSection section, const RunOptions& options);
CommandOutput cmd_allan(ConfigSection section, const RunOptions& options);

const std::vector<std::string>& command_names();

/// Runs one subcommand end to end and returns the process exit code.
int execute(const RunOptions& options, std::ostream& out, std::ostream& err);

}  // namespace zenolock
