#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ergo/config.hpp"
#include "ergo/io.hpp"
#include "ergo/pipeline.hpp"

using namespace ergo;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ergo_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kSmallRun = R"([model]
kind = vortex
C = 1
delta = 0.3
inner_bc = dirichlet
r_max = 10
[grid]
N = 128
[run]
T_final = 2
output_every = 0.5
modes = 0, 2
)";

std::string hashes(const fs::path& dir) {
  std::ostringstream os;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    // the manifest carries the wall time; every other file must match byte for byte
    if (f.filename().string().rfind("manifest-", 0) == 0) continue;
    os << f.filename().string() << ' ' << sha256_file(f.string()) << '\n';
  }
  return os.str();
}

}  // namespace

TEST_CASE("defaults") {
  const AppConfig c = parse_config_text("");
  CHECK(c.run.cfl == 0.5);
  CHECK(c.run.outer == OuterBC::Sommerfeld);
  CHECK(c.data.source == "zero");
  CHECK(c.seed == 1u);
  CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("config errors name the offending key") {
  try {
    validate_config(parse_config_text("[model]\nkind = vortex\nC = 0.2\ndelta = 0.3\n"));
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key == "model.C");
  }
  try {
    parse_config_text("[run]\nbogus = 1\n");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key == "run.bogus");
  }
  CHECK_THROWS_AS(parse_config_text("[run]\ncfl = abc\n"), ConfigError);
}

TEST_CASE("serialisation round trip") {
  AppConfig c = parse_config_text(kSmallRun);
  c.packet.l = 17.25;
  c.carleman.separation = {0.01, 0.2, 0.3};
  c.seed = 99;
  const std::string text = serialize_config(c);
  const AppConfig back = parse_config_text(text);
  CHECK(back == c);
  CHECK(serialize_config(back) == text);
}

TEST_CASE("format_double keeps 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
  CHECK(format_double(1.0 / 3.0) == "0.33333333333333331");
  CHECK(std::stod(format_double(M_PI)) == M_PI);
}

TEST_CASE("sha256 of known strings") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("a corrupt config exits with the usage status and error.json") {
  const fs::path dir = fresh_dir("corrupt");
  const fs::path cfg = dir / "bad.ini";
  write_file(cfg.string(), "[model]\nkind = vortex\nC = 0.1\ndelta = 0.3\n");
  RunOptions opt;
  opt.out_dir = (dir / "out").string();
  CHECK(run_with_config_file("simulate", cfg.string(), opt) == kExitUsage);
  const Json err = Json::parse(read_file((dir / "out" / "error.json").string()));
  CHECK(err["key"] == "model.C");
  CHECK(err["status"] == 2);
  CHECK(run_subcommand("no-such-command", parse_config_text(""), opt) == kExitUsage);
}

TEST_CASE("zero data: simulate writes zero diagnostics and repeats byte for byte") {
  const AppConfig c = parse_config_text(kSmallRun);
  RunOptions opt;
  opt.out_dir = fresh_dir("zero_a").string();
  REQUIRE(run_subcommand("simulate", c, opt) == kExitOk);
  std::istringstream csv(read_file((fs::path(opt.out_dir) / "diagnostics.csv").string()));
  std::string line;
  std::getline(csv, line);
  CHECK(line == "t,E_T_total,E_T_ergo,E_N_total,E_log,flux_in,flux_out");
  int rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    std::istringstream ls(line);
    std::string cell;
    std::getline(ls, cell, ',');
    while (std::getline(ls, cell, ',')) REQUIRE(std::stod(cell) == 0.0);
  }
  CHECK(rows == 5);
  CHECK(audit_out_dir(opt.out_dir).empty());

  RunOptions again = opt;
  again.out_dir = fresh_dir("zero_b").string();
  REQUIRE(run_subcommand("simulate", c, again) == kExitOk);
  CHECK(hashes(opt.out_dir) == hashes(again.out_dir));

  // an unlisted file is reported, and so is a modified one
  write_file((fs::path(opt.out_dir) / "stray.txt").string(), "x");
  const auto found = audit_out_dir(opt.out_dir);
  REQUIRE(found.size() == 1u);
  CHECK(found[0].find("stray.txt") != std::string::npos);
  fs::remove(fs::path(opt.out_dir) / "stray.txt");
  write_file((fs::path(opt.out_dir) / "summary.json").string(), "{}\n");
  CHECK(!audit_out_dir(opt.out_dir).empty());

  const RunManifest m =
      RunManifest::from_json(Json::parse(read_file((fs::path(again.out_dir) / "manifest-simulate.json").string())));
  CHECK(m.subcommand == "simulate");
  CHECK(m.status == 0);
  CHECK(m.config_hash == sha256_hex(m.config_echo));
  CHECK(parse_config_text(m.config_echo) == c);
}

TEST_CASE("initial data binary round trip") {
  AppConfig c = parse_config_text(kSmallRun);
  c.run.model = make_vortex(1.0, 0.3, InnerBC::Dirichlet, 4.0);
  c.run.N = 2048;
  c.data.source = "packet";
  c.packet.l = 10.0;
  const InitialData d = packet_data(c);
  const fs::path dir = fresh_dir("binary");
  const std::string bin = (dir / "data.bin").string();
  write_initial_data(bin, d);
  const InitialData back = read_initial_data(bin);
  REQUIRE(back.modes.size() == d.modes.size());
  CHECK(back.m_lo == d.m_lo);
  CHECK(back.m_hi == d.m_hi);
  CHECK(back.modes.front().grid->r == d.modes.front().grid->r);
  for (size_t k = 0; k < d.modes.size(); ++k) {
    REQUIRE(back.modes[k].m == d.modes[k].m);
    REQUIRE(back.modes[k].phi == d.modes[k].phi);
    REQUIRE(back.modes[k].dphi_dt == d.modes[k].dphi_dt);
  }
  write_file((dir / "short.bin").string(), read_file(bin).substr(0, 100));
  CHECK_THROWS(read_initial_data((dir / "short.bin").string()));
}
