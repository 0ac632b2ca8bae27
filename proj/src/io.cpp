#include "ergo/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ergo {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "binary data files assume a little-endian host");

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr))
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

void write_json(const std::string& path, const Json& j) { write_file(path, j.dump(2) + "\n"); }

std::string diagnostics_csv(const std::vector<EnergyReport>& reports) {
  std::string s = "t,E_T_total,E_T_ergo,E_N_total,E_log,flux_in,flux_out\n";
  for (const auto& r : reports) {
    for (double x : {r.t, r.E_T_total, r.E_T_ergo, r.E_N_total, r.E_log, r.flux_in}) s += format_double(x) + ",";
    s += format_double(r.flux_out) + "\n";
  }
  return s;
}

std::string probes_csv(const std::vector<ProbeHistory>& probes) {
  std::string s = "m,r,t,re,im\n";
  for (const auto& p : probes)
    for (size_t j = 0; j < p.t.size(); ++j)
      s += std::to_string(p.m) + "," + format_double(p.r) + "," + format_double(p.t[j]) + "," +
           format_double(p.u[j].real()) + "," + format_double(p.u[j].imag()) + "\n";
  return s;
}

Json RunManifest::to_json() const {
  Json j;
  j["subcommand"] = subcommand;
  j["tool_version"] = tool_version;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["threads"] = threads;
  j["status"] = status;
  j["wall_time_s"] = wall_time;
  Json outs = Json::array();
  for (const auto& o : outputs) outs.push_back({{"file", o.file}, {"sha256", o.sha256}, {"bytes", o.bytes}});
  j["outputs"] = outs;
  j["config"] = config_echo;
  return j;
}

RunManifest RunManifest::from_json(const Json& j) {
  RunManifest m;
  m.subcommand = j.at("subcommand").get<std::string>();
  m.tool_version = j.at("tool_version").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.threads = j.at("threads").get<int>();
  m.status = j.at("status").get<int>();
  m.wall_time = j.at("wall_time_s").get<double>();
  for (const auto& o : j.at("outputs"))
    m.outputs.push_back({o.at("file").get<std::string>(), o.at("sha256").get<std::string>(),
                         o.at("bytes").get<std::uint64_t>()});
  m.config_echo = j.at("config").get<std::string>();
  return m;
}

std::vector<std::string> audit_out_dir(const std::string& dir) {
  std::vector<std::string> problems;
  std::set<std::string> listed;
  std::map<std::string, std::string> expected;
  std::vector<std::string> present;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    const std::string name = e.path().filename().string();
    present.push_back(name);
    if (name.rfind("manifest-", 0) == 0 && e.path().extension() == ".json") {
      listed.insert(name);
      try {
        const auto m = RunManifest::from_json(Json::parse(read_file(e.path().string())));
        for (const auto& o : m.outputs) {
          listed.insert(o.file);
          expected[o.file] = o.sha256;
        }
      } catch (const std::exception& ex) {
        problems.push_back("unreadable manifest " + name + ": " + ex.what());
      }
    }
  }
  std::sort(present.begin(), present.end());
  for (const auto& name : present)
    if (!listed.count(name) && name != "error.json") problems.push_back("orphan " + name);
  for (const auto& [file, hash] : expected) {
    const fs::path p = fs::path(dir) / file;
    if (!fs::exists(p))
      problems.push_back("missing " + file);
    else if (sha256_file(p.string()) != hash)
      problems.push_back("hash mismatch " + file);
  }
  return problems;
}

namespace {

constexpr char kMagic[8] = {'E', 'R', 'G', 'O', 'I', 'D', '0', '1'};

template <class T>
void put(std::string& buf, T x) {
  char b[sizeof(T)];
  std::memcpy(b, &x, sizeof(T));
  buf.append(b, sizeof(T));
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;
  template <class T>
  T get() {
    if (pos + sizeof(T) > buf.size()) throw std::runtime_error("truncated initial data file");
    T x;
    std::memcpy(&x, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return x;
  }
};

}  // namespace

void write_initial_data(const std::string& bin_path, const InitialData& data) {
  if (data.modes.empty()) throw std::invalid_argument("initial data has no modes");
  const auto& g = *data.modes.front().grid;
  std::string buf(kMagic, 8);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(data.modes.size()));
  put<double>(buf, g.r_min);
  put<double>(buf, g.r_max);
  put<std::int32_t>(buf, g.N);
  const auto& s = data.spec;
  for (double x : {s.r_center, s.radial_halfwidth, s.angular_halfwidth, s.l, s.gamma, s.alpha, s.alpha_fraction,
                   s.amplitude, s.tail_tolerance})
    put<double>(buf, x);
  put<std::int32_t>(buf, data.m_lo);
  put<std::int32_t>(buf, data.m_hi);
  for (double x : {data.discarded_tail, data.alpha, data.raw_T_energy, data.raw_T_energy_imag, data.normalization,
                   data.T_energy})
    put<double>(buf, x);
  for (const auto& m : data.modes) {
    if (m.grid->N != g.N || m.grid->r_min != g.r_min || m.grid->r_max != g.r_max)
      throw std::invalid_argument("modes live on different grids");
    put<std::int32_t>(buf, m.m);
    put<double>(buf, m.t);
    for (const auto* v : {&m.phi, &m.dphi_dt})
      for (const cd& z : *v) {
        put<double>(buf, z.real());
        put<double>(buf, z.imag());
      }
  }
  write_file(bin_path, buf);
}

Json initial_data_sidecar(const InitialData& data) {
  Json j;
  const auto& s = data.spec;
  j["packet"] = {{"r_center", s.r_center},   {"radial_halfwidth", s.radial_halfwidth},
                 {"angular_halfwidth", s.angular_halfwidth},
                 {"l", s.l},                 {"gamma", s.gamma},
                 {"alpha", s.alpha},         {"alpha_fraction", s.alpha_fraction},
                 {"amplitude", s.amplitude}, {"tail_tolerance", s.tail_tolerance}};
  j["alpha"] = data.alpha;
  j["m_lo"] = data.m_lo;
  j["m_hi"] = data.m_hi;
  j["mode_count"] = data.modes.size();
  j["discarded_tail"] = data.discarded_tail;
  j["raw_T_energy"] = data.raw_T_energy;
  j["raw_T_energy_imag"] = data.raw_T_energy_imag;
  j["normalization"] = data.normalization;
  j["T_energy"] = data.T_energy;
  if (!data.modes.empty()) {
    const auto& g = *data.modes.front().grid;
    j["grid"] = {{"r_min", g.r_min}, {"r_max", g.r_max}, {"N", g.N}};
  }
  return j;
}

InitialData read_initial_data(const std::string& bin_path) {
  const std::string buf = read_file(bin_path);
  if (buf.size() < 8 || std::memcmp(buf.data(), kMagic, 8) != 0)
    throw std::runtime_error("'" + bin_path + "' is not an initial data file");
  Reader rd{buf, 8};
  const auto count = rd.get<std::uint32_t>();
  const double r_min = rd.get<double>(), r_max = rd.get<double>();
  const int N = rd.get<std::int32_t>();
  if (N < 1 || N > (1 << 24)) throw std::runtime_error("corrupt grid size in initial data file");
  auto grid = RadialGrid::uniform(r_min, r_max, N);
  InitialData d;
  auto& s = d.spec;
  for (double* x : {&s.r_center, &s.radial_halfwidth, &s.angular_halfwidth, &s.l, &s.gamma, &s.alpha,
                    &s.alpha_fraction, &s.amplitude, &s.tail_tolerance})
    *x = rd.get<double>();
  d.m_lo = rd.get<std::int32_t>();
  d.m_hi = rd.get<std::int32_t>();
  for (double* x :
       {&d.discarded_tail, &d.alpha, &d.raw_T_energy, &d.raw_T_energy_imag, &d.normalization, &d.T_energy})
    *x = rd.get<double>();
  for (std::uint32_t k = 0; k < count; ++k) {
    FieldSnapshot m;
    m.m = rd.get<std::int32_t>();
    m.t = rd.get<double>();
    m.grid = grid;
    for (auto* v : {&m.phi, &m.dphi_dt}) {
      v->resize(grid->size());
      for (auto& z : *v) {
        const double re = rd.get<double>();
        z = cd(re, rd.get<double>());
      }
    }
    d.modes.push_back(std::move(m));
  }
  if (rd.pos != buf.size()) throw std::runtime_error("trailing bytes in initial data file");
  return d;
}

}  // namespace ergo
