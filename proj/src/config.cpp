#include "ergo/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace ergo {

namespace pt = boost::property_tree;

namespace {

std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  double x = 0.0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) throw ConfigError(key, "not a number: '" + v + "'");
  if (!std::isfinite(x)) throw ConfigError(key, "must be finite");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  long long x = 0;
  auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), x);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) throw ConfigError(key, "not an integer: '" + v + "'");
  return x;
}

std::vector<std::string> split(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string s;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    if constexpr (std::is_floating_point_v<T>)
      s += fmt_double(xs[i]);
    else
      s += std::to_string(xs[i]);
  }
  return s;
}

struct Field {
  std::string section, key;
  std::function<std::string(AppConfig&)> get;
  std::function<void(AppConfig&, const std::string&, const std::string&)> set;
  std::string path() const { return section + "." + key; }
};

template <class Acc>
Field dbl(const char* sec, const char* key, Acc acc) {
  return {sec, key, [acc](AppConfig& c) { return fmt_double(acc(c)); },
          [acc](AppConfig& c, const std::string& k, const std::string& v) { acc(c) = to_double(k, v); }};
}

template <class Acc>
Field integer(const char* sec, const char* key, Acc acc) {
  return {sec, key, [acc](AppConfig& c) { return std::to_string(acc(c)); },
          [acc](AppConfig& c, const std::string& k, const std::string& v) {
            const long long x = to_int(k, v);
            using T = std::remove_reference_t<decltype(acc(c))>;
            if (x < 0 && std::is_unsigned_v<T>) throw ConfigError(k, "must be nonnegative");
            if (x > 2147483647LL && std::is_same_v<T, int>) throw ConfigError(k, "out of range");
            acc(c) = static_cast<T>(x);
          }};
}

template <class Acc>
Field boolean(const char* sec, const char* key, Acc acc) {
  return {sec, key, [acc](AppConfig& c) { return std::string(acc(c) ? "true" : "false"); },
          [acc](AppConfig& c, const std::string& k, const std::string& v) {
            const std::string t = trim(v);
            if (t == "true")
              acc(c) = true;
            else if (t == "false")
              acc(c) = false;
            else
              throw ConfigError(k, "expected true or false, got '" + v + "'");
          }};
}

template <class Acc>
Field text(const char* sec, const char* key, Acc acc) {
  return {sec, key, [acc](AppConfig& c) { return acc(c); },
          [acc](AppConfig& c, const std::string&, const std::string& v) { acc(c) = trim(v); }};
}

template <class Acc>
Field dlist(const char* sec, const char* key, Acc acc) {
  return {sec, key, [acc](AppConfig& c) { return join(acc(c)); },
          [acc](AppConfig& c, const std::string& k, const std::string& v) {
            std::vector<double> xs;
            for (const auto& item : split(v)) xs.push_back(to_double(k, item));
            acc(c) = xs;
          }};
}

template <class Acc>
Field ilist(const char* sec, const char* key, Acc acc) {
  return {sec, key, [acc](AppConfig& c) { return join(acc(c)); },
          [acc](AppConfig& c, const std::string& k, const std::string& v) {
            std::vector<int> xs;
            for (const auto& item : split(v)) xs.push_back(static_cast<int>(to_int(k, item)));
            acc(c) = xs;
          }};
}

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = [] {
    std::vector<Field> f;
    f.push_back({"model", "kind", [](AppConfig& c) { return model_key(c.run.model.kind); },
                 [](AppConfig& c, const std::string& k, const std::string& v) {
                   try {
                     c.run.model.kind = model_from_key(trim(v));
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(k, e.what());
                   }
                 }});
    f.push_back(dbl("model", "C", [](AppConfig& c) -> double& { return c.run.model.C; }));
    f.push_back(dbl("model", "delta", [](AppConfig& c) -> double& { return c.run.model.delta; }));
    f.push_back({"model", "inner_bc", [](AppConfig& c) { return to_string(c.run.model.inner_bc); },
                 [](AppConfig& c, const std::string& k, const std::string& v) {
                   try {
                     c.run.model.inner_bc = inner_bc_from_string(trim(v));
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(k, e.what());
                   }
                 }});
    f.push_back(dbl("model", "r_min", [](AppConfig& c) -> double& { return c.run.model.r_min; }));
    f.push_back(dbl("model", "r_max", [](AppConfig& c) -> double& { return c.run.model.r_max; }));

    f.push_back(integer("grid", "N", [](AppConfig& c) -> int& { return c.run.N; }));

    f.push_back(dbl("run", "cfl", [](AppConfig& c) -> double& { return c.run.cfl; }));
    f.push_back(dbl("run", "T_final", [](AppConfig& c) -> double& { return c.run.T_final; }));
    f.push_back({"run", "outer_bc", [](AppConfig& c) { return to_string(c.run.outer); },
                 [](AppConfig& c, const std::string& k, const std::string& v) {
                   try {
                     c.run.outer = outer_bc_from_string(trim(v));
                   } catch (const std::invalid_argument& e) {
                     throw ConfigError(k, e.what());
                   }
                 }});
    f.push_back(dbl("run", "output_every", [](AppConfig& c) -> double& { return c.run.output_every; }));
    f.push_back(dbl("run", "ergo_margin", [](AppConfig& c) -> double& { return c.run.ergo_margin; }));
    // "all" (stored as an empty list) evolves every mode present in the initial data
    f.push_back({"run", "modes", [](AppConfig& c) { return c.run.modes.empty() ? std::string("all") : join(c.run.modes); },
                 [](AppConfig& c, const std::string& k, const std::string& v) {
                   c.run.modes.clear();
                   if (trim(v) == "all") return;
                   for (const auto& item : split(v)) c.run.modes.push_back(static_cast<int>(to_int(k, item)));
                   if (c.run.modes.empty()) throw ConfigError(k, "empty list (use all for every data mode)");
                 }});
    f.push_back(dlist("run", "probes", [](AppConfig& c) -> std::vector<double>& { return c.run.probe_radii; }));
    f.push_back(integer("run", "seed", [](AppConfig& c) -> std::uint64_t& { return c.seed; }));

    f.push_back(text("data", "source", [](AppConfig& c) -> std::string& { return c.data.source; }));
    f.push_back(text("data", "file", [](AppConfig& c) -> std::string& { return c.data.file; }));
    f.push_back(boolean("data", "normalize", [](AppConfig& c) -> bool& { return c.data.normalize; }));

    f.push_back(dbl("packet", "r_center", [](AppConfig& c) -> double& { return c.packet.r_center; }));
    f.push_back(dbl("packet", "radial_halfwidth", [](AppConfig& c) -> double& { return c.packet.radial_halfwidth; }));
    f.push_back(
        dbl("packet", "angular_halfwidth", [](AppConfig& c) -> double& { return c.packet.angular_halfwidth; }));
    f.push_back(dbl("packet", "l", [](AppConfig& c) -> double& { return c.packet.l; }));
    f.push_back(dbl("packet", "gamma", [](AppConfig& c) -> double& { return c.packet.gamma; }));
    f.push_back(dbl("packet", "alpha", [](AppConfig& c) -> double& { return c.packet.alpha; }));
    f.push_back(dbl("packet", "alpha_fraction", [](AppConfig& c) -> double& { return c.packet.alpha_fraction; }));
    f.push_back(dbl("packet", "amplitude", [](AppConfig& c) -> double& { return c.packet.amplitude; }));
    f.push_back(dbl("packet", "tail_tolerance", [](AppConfig& c) -> double& { return c.packet.tail_tolerance; }));

    f.push_back(dbl("frequency", "omega0", [](AppConfig& c) -> double& { return c.frequency.omega0; }));
    f.push_back(dbl("frequency", "omega_plus", [](AppConfig& c) -> double& { return c.frequency.omega_plus; }));
    f.push_back(dbl("frequency", "R1", [](AppConfig& c) -> double& { return c.frequency.R1; }));
    f.push_back(dbl("frequency", "tau1", [](AppConfig& c) -> double& { return c.frequency.tau1; }));
    f.push_back(dbl("frequency", "margin", [](AppConfig& c) -> double& { return c.frequency.margin; }));
    f.push_back(dbl("frequency", "sample_every", [](AppConfig& c) -> double& { return c.frequency.sample_every; }));
    f.push_back(
        dbl("frequency", "tail_tolerance", [](AppConfig& c) -> double& { return c.frequency.tail_tolerance; }));

    f.push_back(dbl("carleman", "omega_k", [](AppConfig& c) -> double& { return c.carleman.omega_k; }));
    f.push_back(dbl("carleman", "delta1", [](AppConfig& c) -> double& { return c.carleman.delta1; }));
    f.push_back(dbl("carleman", "eps0", [](AppConfig& c) -> double& { return c.carleman.eps0; }));
    f.push_back(dbl("carleman", "delta2", [](AppConfig& c) -> double& { return c.carleman.delta2; }));
    f.push_back(dbl("carleman", "l", [](AppConfig& c) -> double& { return c.carleman.l; }));
    f.push_back(dbl("carleman", "gamma", [](AppConfig& c) -> double& { return c.carleman.gamma; }));
    f.push_back(dbl("carleman", "R0", [](AppConfig& c) -> double& { return c.carleman.R0; }));
    f.push_back(dbl("carleman", "C1", [](AppConfig& c) -> double& { return c.carleman.C1; }));
    f.push_back(
        dlist("carleman", "separation", [](AppConfig& c) -> std::vector<double>& { return c.carleman.separation; }));
    f.push_back(dlist("carleman", "identity_steps",
                      [](AppConfig& c) -> std::vector<double>& { return c.carleman.identity_steps; }));

    f.push_back(ilist("hardy", "dims", [](AppConfig& c) -> std::vector<int>& { return c.hardy.dims; }));
    f.push_back(dlist("hardy", "a", [](AppConfig& c) -> std::vector<double>& { return c.hardy.a; }));
    f.push_back(integer("hardy", "count", [](AppConfig& c) -> int& { return c.hardy.count; }));
    f.push_back(integer("hardy", "calibration_count", [](AppConfig& c) -> int& { return c.hardy.calibration_count; }));
    f.push_back(integer("hardy", "N", [](AppConfig& c) -> int& { return c.hardy.N; }));

    f.push_back(integer("geometry", "samples", [](AppConfig& c) -> int& { return c.geometry.samples; }));
    f.push_back(integer("geometry", "ergo_grid", [](AppConfig& c) -> int& { return c.geometry.ergo_grid; }));
    return f;
  }();
  return fields;
}

void require(bool ok, const std::string& key, const std::string& msg) {
  if (!ok) throw ConfigError(key, msg);
}

}  // namespace

std::string model_key(ModelKind k) {
  switch (k) {
    case ModelKind::HydroVortex: return "vortex";
    case ModelKind::HydroVortexDoubled: return "vortex_doubled";
    case ModelKind::Minkowski: return "minkowski";
    case ModelKind::BumpErgoregion3D: return "bump";
    case ModelKind::AlmostSchwarzschild3D: return "almost_schwarzschild";
  }
  return "?";
}

ModelKind model_from_key(const std::string& s) {
  for (auto k : {ModelKind::HydroVortex, ModelKind::HydroVortexDoubled, ModelKind::Minkowski})
    if (model_key(k) == s) return k;
  throw std::invalid_argument("unknown or non-evolvable model '" + s + "' (vortex, vortex_doubled, minkowski)");
}

AppConfig parse_config_text(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("<syntax>", "line " + std::to_string(e.line()) + ": " + e.message());
  }

  std::set<std::string> sections, known;
  for (const auto& f : schema()) {
    sections.insert(f.section);
    known.insert(f.path());
  }
  std::set<std::string> present;
  for (const auto& [sec, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError(sec, "key outside any section");
    if (!sections.count(sec)) throw ConfigError(sec, "unknown section");
    for (const auto& [key, val] : body) {
      const std::string path = sec + "." + key;
      if (!known.count(path)) throw ConfigError(path, "unknown key");
      present.insert(path);
    }
  }

  AppConfig cfg;
  for (const auto& f : schema()) {
    if (!present.count(f.path())) continue;
    f.set(cfg, f.path(), tree.get_child(f.section).get<std::string>(f.key));
  }

  // Geometry defaults that follow from the family.
  auto& m = cfg.run.model;
  if (m.kind == ModelKind::HydroVortex) {
    if (!present.count("model.r_min")) m.r_min = m.delta;
    if (!present.count("model.inner_bc")) m.inner_bc = InnerBC::Dirichlet;
  } else if (m.kind == ModelKind::HydroVortexDoubled) {
    if (!present.count("model.r_min")) m.r_min = 2.0 * m.delta - m.r_max;
    if (!present.count("model.inner_bc")) m.inner_bc = InnerBC::Doubled;
  } else if (m.kind == ModelKind::Minkowski) {
    if (!present.count("model.C")) m.C = 0.0;
    if (!present.count("model.delta")) m.delta = 0.0;
    if (!present.count("model.r_min")) m.r_min = 0.0;
    if (!present.count("model.inner_bc")) m.inner_bc = m.r_min == 0.0 ? InnerBC::Regular : InnerBC::Dirichlet;
  }
  validate_config(cfg);
  return cfg;
}

AppConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string serialize_config(const AppConfig& cfg) {
  AppConfig copy = cfg;
  std::string out, sec;
  for (const auto& f : schema()) {
    if (f.section != sec) {
      if (!sec.empty()) out += "\n";
      sec = f.section;
      out += "[" + sec + "]\n";
    }
    out += f.key + " = " + f.get(copy) + "\n";
  }
  return out;
}

void validate_config(const AppConfig& c) {
  const auto& m = c.run.model;
  if (m.kind == ModelKind::HydroVortex || m.kind == ModelKind::HydroVortexDoubled) {
    require(m.delta > 0.0, "model.delta", "must be positive");
    require(m.C > m.delta, "model.C", "must exceed model.delta");
    require(m.r_max >= 4.0 * m.C, "model.r_max", "must be at least 4 C");
    if (m.kind == ModelKind::HydroVortex) {
      require(m.r_min >= m.delta, "model.r_min", "below the vortex wall model.delta");
      require(m.inner_bc == InnerBC::Dirichlet || m.inner_bc == InnerBC::Neumann, "model.inner_bc",
              "vortex takes dirichlet or neumann");
    } else {
      require(m.inner_bc == InnerBC::Doubled, "model.inner_bc", "doubled vortex takes doubled");
    }
  } else {
    require(m.r_min >= 0.0, "model.r_min", "must be nonnegative");
    require(m.C == 0.0, "model.C", "must be 0 for minkowski");
    require(m.inner_bc == (m.r_min == 0.0 ? InnerBC::Regular : InnerBC::Dirichlet) ||
                (m.r_min > 0.0 && m.inner_bc == InnerBC::Neumann),
            "model.inner_bc", "regular at r = 0, dirichlet or neumann on an annulus");
  }
  require(m.r_max > m.r_min, "model.r_max", "must exceed model.r_min");

  require(c.run.N >= 128, "grid.N", "must be at least 128");
  require(c.run.N <= (1 << 22), "grid.N", "must be at most 4194304");
  require(c.run.cfl > 0.0 && c.run.cfl <= 0.9, "run.cfl", "must lie in (0, 0.9]");
  require(c.run.T_final >= 0.0, "run.T_final", "must be nonnegative");
  require(c.run.output_every > 0.0, "run.output_every", "must be positive");
  require(c.run.ergo_margin >= 0.0, "run.ergo_margin", "must be nonnegative");
  require(!c.run.modes.empty() || c.data.source == "packet" || c.data.source == "file", "run.modes",
          "all needs packet or file data");
  for (double r : c.run.probe_radii)
    require(r >= m.r_min && r <= m.r_max, "run.probes", "radius outside [r_min, r_max]");

  require(c.data.source == "zero" || c.data.source == "gaussian" || c.data.source == "packet" ||
              c.data.source == "file",
          "data.source", "expected zero, gaussian, packet or file");
  require(c.data.source != "file" || !c.data.file.empty(), "data.file", "required when data.source = file");

  const auto& p = c.packet;
  require(p.l > 0.0, "packet.l", "must be positive");
  require(p.radial_halfwidth > 0.0, "packet.radial_halfwidth", "must be positive");
  require(p.angular_halfwidth > 0.0 && p.angular_halfwidth < 3.14159, "packet.angular_halfwidth",
          "must lie in (0, pi)");
  require(p.r_center - p.radial_halfwidth > m.r_min && p.r_center + p.radial_halfwidth < m.r_max, "packet.r_center",
          "packet support leaves the domain");
  require(p.alpha >= 0.0, "packet.alpha", "must be nonnegative");
  require(p.alpha_fraction > 0.0 && p.alpha_fraction <= 1.0, "packet.alpha_fraction", "must lie in (0, 1]");
  require(p.amplitude > 0.0, "packet.amplitude", "must be positive");
  require(p.tail_tolerance > 0.0 && p.tail_tolerance < 1.0, "packet.tail_tolerance", "must lie in (0, 1)");

  const auto& f = c.frequency;
  require(f.omega0 > 0.0, "frequency.omega0", "must be positive");
  require(f.omega_plus > f.omega0, "frequency.omega_plus", "must exceed frequency.omega0");
  require(f.R1 > m.r_min && f.R1 < m.r_max, "frequency.R1", "outside the domain");
  require(f.tau1 >= 0.0, "frequency.tau1", "must be nonnegative");
  require(f.margin >= 0.0, "frequency.margin", "must be nonnegative");
  require(f.sample_every > 0.0, "frequency.sample_every", "must be positive");
  require(f.tail_tolerance > 0.0 && f.tail_tolerance < 1.0, "frequency.tail_tolerance", "must lie in (0, 1)");

  const auto& k = c.carleman;
  require(k.omega_k > 0.0, "carleman.omega_k", "must be positive");
  require(k.delta1 > 0.0 && k.delta1 <= 0.1, "carleman.delta1", "must lie in (0, 0.1]");
  require(k.eps0 > 0.0 && k.eps0 < 1.0 / 9.0, "carleman.eps0", "must lie in (0, 1/9)");
  require(k.delta2 > 0.0 && k.delta2 < 1.0 / 1.75, "carleman.delta2", "must lie in (0, 4/7)");
  require(k.l >= 1.0, "carleman.l", "must be at least 1");
  require(k.gamma >= 0.0, "carleman.gamma", "must be nonnegative");
  require(k.R0 > 1.0, "carleman.R0", "must exceed 1");
  require(k.C1 > 0.0, "carleman.C1", "must be positive");
  for (double d : k.separation) require(d > 0.0, "carleman.separation", "entries must be positive");
  require(k.identity_steps.size() >= 2, "carleman.identity_steps", "needs at least two steps");
  for (size_t i = 0; i < k.identity_steps.size(); ++i) {
    require(k.identity_steps[i] > 0.0, "carleman.identity_steps", "entries must be positive");
    if (i) require(k.identity_steps[i] < k.identity_steps[i - 1], "carleman.identity_steps", "must decrease");
  }

  require(!c.hardy.dims.empty(), "hardy.dims", "must be nonempty");
  for (int d : c.hardy.dims) require(d == 2 || d == 3, "hardy.dims", "entries must be 2 or 3");
  for (double a : c.hardy.a) require(a > 0.0, "hardy.a", "entries must be positive");
  require(c.hardy.count >= 1, "hardy.count", "must be positive");
  require(c.hardy.calibration_count >= 1, "hardy.calibration_count", "must be positive");
  require(c.hardy.N >= 200, "hardy.N", "must be at least 200");

  require(c.geometry.samples >= 1, "geometry.samples", "must be positive");
  require(c.geometry.ergo_grid >= 16, "geometry.ergo_grid", "must be at least 16");
}

}  // namespace ergo
