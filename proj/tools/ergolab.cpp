// ergolab <subcommand> [--config FILE] [--out-dir DIR] [--threads N] [--seed S]
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>

#include "CLI11.hpp"

#include "ergo/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace ergo;
  CLI::App app{"Wave evolution and estimate checks on ergoregion spacetimes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  std::string config_path;
  RunOptions opt;
  if (const char* env = std::getenv("ERGOLAB_OUT_DIR")) opt.out_dir = env;
  std::uint64_t seed = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (defaults when omitted)")->check(CLI::ExistingFile);
    sub->add_option("--out-dir", opt.out_dir, "output directory (env ERGOLAB_OUT_DIR)");
    sub->add_option("--threads", opt.threads, "worker threads")->check(CLI::Range(1, 256));
    sub->add_option("--seed", seed, "overrides run.seed");
  };
  const std::map<std::string, std::string> about = {
      {"simulate", "evolve the configured modes and write energy diagnostics"},
      {"make-data", "build negative-energy packet data (binary plus JSON sidecar)"},
      {"freq-analyze", "evolve, cut off in time and split the record into frequency bands"},
      {"carleman-certify", "choose Carleman parameters and certify the weight"},
      {"hardy-check", "calibrate Hardy constants and test them on random suites"},
      {"geometry-lint", "check metric inverses, the timelike observer and the ergosurface"}};
  for (const auto& name : subcommand_names()) add_common(app.add_subcommand(name, about.at(name)));

  std::vector<int> dims;
  std::vector<double> avals;
  int count = 0;
  auto* hardy = app.get_subcommand("hardy-check");
  hardy->add_option("--dim", dims, "dimensions (overrides hardy.dims)")->check(CLI::IsMember({2, 3}));
  hardy->add_option("--a", avals, "weight exponents (overrides hardy.a)");
  hardy->add_option("--count", count, "suite size (overrides hardy.count)")->check(CLI::PositiveNumber);
  double omega0 = 0.0, omega_plus = 0.0;
  auto* freq = app.get_subcommand("freq-analyze");
  freq->add_option("--omega0", omega0, "lowest band frequency")->check(CLI::PositiveNumber);
  freq->add_option("--omegaplus", omega_plus, "upper cut-off frequency")->check(CLI::PositiveNumber);

  auto* audit = app.add_subcommand("audit", "check that every file in the output directory is in a manifest");
  audit->add_option("--out-dir", opt.out_dir, "output directory (env ERGOLAB_OUT_DIR)");
  auto* defaults = app.add_subcommand("default-config", "print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (defaults->parsed()) {
    std::cout << serialize_config(AppConfig{});
    return kExitOk;
  }
  if (audit->parsed()) {
    const auto problems = audit_out_dir(opt.out_dir);
    for (const auto& p : problems) std::cerr << p << "\n";
    return problems.empty() ? kExitOk : kExitCheckFailed;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  if (app.get_subcommands().front()->count("--seed")) opt.seed = seed;
  int status;
  try {
    AppConfig cfg;
    if (!config_path.empty()) {
      try {
        cfg = parse_config(config_path);
      } catch (const ConfigError& e) {
        std::filesystem::create_directories(opt.out_dir);
        write_error_json(opt.out_dir, kExitUsage, "config", e.key, e.what());
        std::cerr << "ergolab: " << e.what() << "\n";
        return kExitUsage;
      }
    }
    if (!dims.empty()) cfg.hardy.dims = dims;
    if (!avals.empty()) cfg.hardy.a = avals;
    if (count > 0) cfg.hardy.count = count;
    if (omega0 > 0.0) cfg.frequency.omega0 = omega0;
    if (omega_plus > 0.0) cfg.frequency.omega_plus = omega_plus;
    try {
      validate_config(cfg);
    } catch (const ConfigError& e) {
      std::filesystem::create_directories(opt.out_dir);
      write_error_json(opt.out_dir, kExitUsage, "config", e.key, e.what());
      std::cerr << "ergolab: " << e.what() << "\n";
      return kExitUsage;
    }
    status = run_subcommand(name, cfg, opt);
  } catch (const std::exception& e) {
    std::cerr << "ergolab: " << e.what() << "\n";
    return kExitCheckFailed;
  }
  if (status != kExitOk) std::cerr << "ergolab: " << name << " exited with status " << status << "\n";
  return status;
}
