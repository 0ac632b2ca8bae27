// Run configuration: typed key = value text with [sections].
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergo/carleman.hpp"
#include "ergo/evolution.hpp"
#include "ergo/initial_data.hpp"

namespace ergo {

// Bad key, bad value or range violation. key is the dotted path ("model.C").
struct ConfigError : std::runtime_error {
  std::string key;
  ConfigError(const std::string& k, const std::string& msg) : std::runtime_error(k + ": " + msg), key(k) {}
};

struct DataSection {
  // zero | gaussian (radial profile from [packet] r_center, radial_halfwidth, amplitude) | packet | file
  std::string source = "zero";
  std::string file;             // binary written by make-data (source = file)
  bool normalize = true;        // rescale the packet to T-energy -1
  bool operator==(const DataSection&) const = default;
};

struct FrequencySection {
  double omega0 = 0.5;
  double omega_plus = 8.0;
  double R1 = 2.0;
  double tau1 = 0.0;
  double margin = 40.0;          // interior window trimmed at both ends
  double sample_every = 0.05;    // record cadence
  double tail_tolerance = 1e-9;  // kernel mass allowed beyond the record
  bool operator==(const FrequencySection&) const = default;
};

struct CarlemanSection {
  double omega_k = 1.0;
  double delta1 = 0.1;
  double eps0 = 0.05;
  double delta2 = 0.1;
  double l = 2.0;
  double gamma = 0.05;
  double R0 = 8.0;
  double C1 = 1.0;
  std::vector<double> separation{0.05, 0.1};
  std::vector<double> identity_steps{0.04, 0.02, 0.01};
  bool operator==(const CarlemanSection&) const = default;
};

struct HardySection {
  std::vector<int> dims{2, 3};
  std::vector<double> a{0.5, 1.0, 2.0};
  int count = 100;               // suite size per (d, a)
  int calibration_count = 1000;  // functions behind each calibrated constant
  int N = 2000;
  bool operator==(const HardySection&) const = default;
};

struct GeometrySection {
  int samples = 1000;     // random points for the inverse check
  int ergo_grid = 4096;   // cells for the ergosurface location
  bool operator==(const GeometrySection&) const = default;
};

struct AppConfig {
  RunConfig run;
  DataSection data;
  WavePacketSpec packet;
  FrequencySection frequency;
  CarlemanSection carleman;
  HardySection hardy;
  GeometrySection geometry;
  std::uint64_t seed = 1;

  bool operator==(const AppConfig&) const = default;
};

AppConfig parse_config_text(const std::string& text);
AppConfig parse_config(const std::string& path);
// Every key, fixed order, doubles with 17 significant digits.
std::string serialize_config(const AppConfig& cfg);

// Checks cross-field ranges; throws ConfigError with the offending key.
void validate_config(const AppConfig& cfg);

std::string model_key(ModelKind k);
ModelKind model_from_key(const std::string& s);

}  // namespace ergo
