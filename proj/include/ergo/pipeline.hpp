// Subcommand dispatch: every run writes its outputs plus a manifest listing them.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ergo/config.hpp"
#include "ergo/io.hpp"

namespace ergo {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2 };

struct RunOptions {
  std::string out_dir = ".";
  int threads = 1;
  std::optional<std::uint64_t> seed;  // overrides run.seed
};

const std::vector<std::string>& subcommand_names();

// Runs one subcommand on a parsed config. Module errors produce error.json and
// status 1; an unknown subcommand gives status 2. The manifest is written in
// every case where the output directory is usable.
int run_subcommand(const std::string& name, const AppConfig& cfg, const RunOptions& opt);

// Same, reading the config file first; config errors give status 2 and an
// error.json naming the key path.
int run_with_config_file(const std::string& name, const std::string& config_path, const RunOptions& opt);

// Writes {"status", "kind", "key", "message"} to out_dir/error.json.
void write_error_json(const std::string& out_dir, int status, const std::string& kind, const std::string& key,
                      const std::string& message);

// Initial data for simulate and freq-analyze (zero, packet or file), one snapshot per configured mode.
std::vector<FieldSnapshot> initial_snapshots(const AppConfig& cfg);

// Run settings with "all" modes replaced by the modes present in init.
RunConfig resolved_run(const AppConfig& cfg, const std::vector<FieldSnapshot>& init);

// Packet data for the configured model and grid, normalised when data.normalize is set.
InitialData packet_data(const AppConfig& cfg);

}  // namespace ergo
