// Deterministic output formats and run manifests.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "ergo/evolution.hpp"
#include "ergo/initial_data.hpp"

namespace ergo {

using Json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.3.0";

// 17 significant digits, "%.17g".
std::string format_double(double x);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);
// Two-space indentation and a trailing newline.
void write_json(const std::string& path, const Json& j);

// t, E_T_total, E_T_ergo, E_N_total, E_log, flux_in, flux_out
std::string diagnostics_csv(const std::vector<EnergyReport>& reports);
// m, r, t, re, im
std::string probes_csv(const std::vector<ProbeHistory>& probes);

struct OutputEntry {
  std::string file;  // relative to the output directory
  std::string sha256;
  std::uint64_t bytes = 0;
};

struct RunManifest {
  std::string subcommand;
  std::string tool_version = kToolVersion;
  std::string config_echo;
  std::string config_hash;  // sha256 of config_echo
  std::uint64_t seed = 0;
  int threads = 1;
  double wall_time = 0.0;  // seconds
  int status = 0;
  std::vector<OutputEntry> outputs;

  Json to_json() const;
  static RunManifest from_json(const Json& j);
  static std::string file_name(const std::string& subcommand) { return "manifest-" + subcommand + ".json"; }
};

// Files in dir that no manifest lists, and listed files that are missing or
// whose hash changed. Empty means the directory is consistent.
std::vector<std::string> audit_out_dir(const std::string& dir);

// Little-endian binary of every mode (phi, dphi_dt) plus a JSON sidecar with the
// packet parameters and energies.
void write_initial_data(const std::string& bin_path, const InitialData& data);
Json initial_data_sidecar(const InitialData& data);
// Grid is rebuilt from the stored r_min, r_max, N.
InitialData read_initial_data(const std::string& bin_path);

}  // namespace ergo
