#include "ergo/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <thread>

#include "ergo/carleman.hpp"
#include "ergo/frequency.hpp"
#include "ergo/hardy.hpp"

namespace ergo {

namespace fs = std::filesystem;

namespace {

// Collects outputs in declaration order; the manifest lists them in that order.
struct Outputs {
  std::string dir;
  std::vector<OutputEntry> entries;

  void text(const std::string& name, const std::string& bytes) {
    write_file((fs::path(dir) / name).string(), bytes);
    entries.push_back({name, sha256_hex(bytes), bytes.size()});
  }
  void json(const std::string& name, const Json& j) { text(name, j.dump(2) + "\n"); }
};

// Indices are claimed in order; each result lands in its own slot.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

Json energy_json(const EnergyReport& r) {
  return {{"t", r.t},         {"E_T_total", r.E_T_total}, {"E_T_ergo", r.E_T_ergo}, {"E_N_total", r.E_N_total},
          {"E_log", r.E_log}, {"flux_in", r.flux_in},     {"flux_out", r.flux_out}};
}

// Finite doubles as numbers, anything else as null.
Json num(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

GridPtr config_grid(const AppConfig& cfg) { return cfg.run.grid(); }

// ------------------------------------------------------------------ simulate

int do_simulate(const AppConfig& cfg, const RunOptions& opt, Outputs& out) {
  const auto init = initial_snapshots(cfg);
  const auto series = evolve(resolved_run(cfg, init), init, opt.threads);
  out.text("diagnostics.csv", diagnostics_csv(series.reports));
  if (!series.probes.empty()) out.text("probes.csv", probes_csv(series.probes));

  Json s;
  s["dt"] = series.dt;
  s["steps"] = series.steps;
  s["ledger_residual"] = series.ledger_residual;
  s["initial"] = energy_json(series.reports.front());
  s["final"] = energy_json(series.reports.back());
  double min_ergo = series.reports.front().E_T_ergo;
  for (const auto& r : series.reports) min_ergo = std::min(min_ergo, r.E_T_ergo);
  s["min_E_T_ergo"] = min_ergo;
  if (series.reports.size() >= 8 && series.reports.back().E_N_total > 0.0) {
    std::vector<double> t, E;
    for (const auto& r : series.reports) {
      t.push_back(r.t);
      E.push_back(r.E_N_total);
    }
    const auto fit = fit_growth_rate(t, E, 0.5 * cfg.run.T_final, cfg.run.T_final);
    s["growth_fit_last_half"] = {{"rate", num(fit.rate)}, {"ci_lo", num(fit.ci_lo)}, {"ci_hi", num(fit.ci_hi)},
                                 {"samples", fit.samples}};
  }
  out.json("summary.json", s);
  return kExitOk;
}

// ----------------------------------------------------------------- make-data

int do_make_data(const AppConfig& cfg, const RunOptions&, Outputs& out) {
  const InitialData d = packet_data(cfg);
  const std::string tmp = (fs::path(out.dir) / "initial_data.bin").string();
  write_initial_data(tmp, d);
  const std::string bytes = read_file(tmp);
  out.entries.push_back({"initial_data.bin", sha256_hex(bytes), bytes.size()});
  Json side = initial_data_sidecar(d);
  side["data_file"] = "initial_data.bin";
  side["model"] = model_key(cfg.run.model.kind);
  out.json("initial_data.json", side);
  return kExitOk;
}

// ------------------------------------------------------------- freq-analyze

int do_freq_analyze(const AppConfig& cfg, const RunOptions& opt, Outputs& out) {
  const auto& fc = cfg.frequency;
  const auto init = initial_snapshots(cfg);
  RunConfig run = resolved_run(cfg, init);
  run.output_every = fc.sample_every;
  run.keep_snapshots = true;
  const auto series = evolve(run, init, opt.threads);
  const MollifierBank bank = make_bank(fc.omega0, fc.omega_plus);

  Json modes = Json::array();
  std::string csv = "m,k,omega_k,norm2,sandwich_ratio,reproducing_xi\n";
  bool ok = true;
  for (size_t mi = 0; mi < run.modes.size(); ++mi) {
    const TimeSeriesField psi = series_from_snapshots(series.snapshots, static_cast<int>(mi));
    const TimeSeriesField psi_c = temporal_cutoff(psi, fc.R1, fc.tau1);
    const TimeSeriesField low = project_component(psi_c, bank, Component::LowPass, 0, fc.tail_tolerance);

    std::vector<TimeSeriesField> bands(bank.n + 1);
    parallel_for(bank.n + 1, opt.threads, [&](int k) {
      bands[k] = project_component(psi_c, bank, Component::Band, k, fc.tail_tolerance);
    });

    // Partition of the low-pass part into bands, over the whole record.
    double defect = 0.0, scale = 0.0;
    for (size_t q = 0; q < low.data.size(); ++q) {
      cd sum = 0.0;
      for (const auto& b : bands) sum += b.data[q];
      defect = std::max(defect, std::abs(sum - low.data[q]));
      scale = std::max(scale, std::abs(low.data[q]));
    }
    const double rel_defect = scale > 0.0 ? defect / scale : defect;
    if (rel_defect > 1e-10) ok = false;

    double max_norm = 0.0;
    std::vector<double> norms(bands.size());
    for (size_t k = 0; k < bands.size(); ++k) {
      norms[k] = spacetime_norm2(bands[k], fc.margin);
      max_norm = std::max(max_norm, norms[k]);
    }
    Json jb = Json::array();
    for (int k = 0; k <= bank.n; ++k) {
      const auto dk = spectral_time_derivative(bands[k]);
      const auto sw = sandwich_check(bands[k], dk, bank, k, {}, fc.margin);
      const auto rp = reproducing_check(bands[k], bank, k, fc.margin);
      // Bands holding less than 1e-6 of the dominant band are window leakage of
      // the dominant one; their ratios are reported but not checked.
      const bool active = max_norm > 0.0 && norms[k] > 1e-6 * max_norm;
      if (active && !sw.within) ok = false;
      csv += std::to_string(run.modes[mi]) + "," + std::to_string(k) + "," + format_double(bank.omega[k]) + "," +
             format_double(norms[k]) + "," + format_double(sw.ratio) + "," + format_double(rp.residual_xi) + "\n";
      jb.push_back({{"k", k},
                    {"omega_k", bank.omega[k]},
                    {"norm2", norms[k]},
                    {"active", active},
                    {"sandwich_ratio", num(sw.ratio)},
                    {"sandwich_within", sw.within},
                    {"reproducing_xi", num(rp.residual_xi)},
                    {"reproducing_xi_tilde", num(rp.residual_xi_tilde)}});
    }
    modes.push_back({{"m", run.modes[mi]},
                     {"samples", psi.nt},
                     {"dt", psi.dt},
                     {"partition_defect", rel_defect},
                     {"parseval_defect", parseval_defect(psi_c)},
                     {"bands", jb}});
  }
  Json j;
  j["bank"] = {{"omega0", bank.omega0}, {"omega_plus", bank.omega_plus}, {"n", bank.n}};
  j["R1"] = fc.R1;
  j["tau1"] = fc.tau1;
  j["margin"] = fc.margin;
  j["modes"] = modes;
  j["passed"] = ok;
  out.text("bands.csv", csv);
  out.json("frequency.json", j);
  return ok ? kExitOk : kExitCheckFailed;
}

// --------------------------------------------------------- carleman-certify

ManufacturedPulse reference_pulse(const SpacetimeModel& model) {
  ManufacturedPulse p;
  if (model.kind == ModelKind::HydroVortex) {
    p.rc = 3.5 * model.C;
    p.sigma = 0.3 * model.C;
    p.m = 2;
  } else {
    p.rc = std::max(6.0, model.r_min + 4.0);
    p.sigma = 0.5;
    p.m = 0;
  }
  return p;
}

int do_carleman(const AppConfig& cfg, const RunOptions&, Outputs& out) {
  const auto& kc = cfg.carleman;
  const SpacetimeModel& model = cfg.run.model;
  if (model.kind != ModelKind::HydroVortex && model.kind != ModelKind::Minkowski)
    throw UnsupportedError("carleman-certify supports the vortex and Minkowski models");
  CarlemanParams base;
  base.l = kc.l;
  base.gamma = kc.gamma;
  base.R0 = kc.R0;
  base.C1 = kc.C1;
  const CarlemanParams params = choose_parameters(kc.omega_k, kc.delta1, kc.eps0, kc.delta2, base);
  const WeightProfile prof = build_wR(model, params);
  const auto bulk = bulk_coefficient(prof);
  const auto seams = seam_residuals(prof);
  const auto br = bridge_report(prof);
  const auto fh = build_f_h(prof);
  bool ok = bulk.all_positive() && fh.f_positive && prof.hessian.critical_set_empty;

  Json j;
  const auto [s_lo, s_hi] = prof.params.s_interval();
  j["parameters"] = {{"omega_k", params.omega_k}, {"delta1", params.delta1},
                     {"delta2", params.delta2},   {"eps0", params.eps0},
                     {"l", params.l},             {"gamma", params.gamma},
                     {"R0", params.R0},           {"C1", params.C1},
                     {"R", params.R},             {"s", params.s},
                     {"s_interval", {s_lo, s_hi}}, {"ratio_parameter", params.ratio_parameter()},
                     {"C2", prof.params.C2},      {"C3", prof.params.C3},
                     {"log_C4", prof.params.log_C4}, {"bridge_end", prof.r_bridge}};
  j["base_weight"] = {{"r_in", prof.base.r_in},
                      {"r_out", prof.base.r_out},
                      {"residual", prof.base.residual},
                      {"closed_form_error", prof.base.closed_form_error},
                      {"min_slope", prof.base.min_slope}};
  j["hessian"] = {{"l", prof.hessian.l},
                  {"min_contraction", prof.hessian.min_contraction},
                  {"grad_on_ergosurface", prof.hessian.grad_on_ergosurface},
                  {"critical_set_empty", prof.hessian.critical_set_empty}};
  Json regions = Json::array();
  for (const auto& r : bulk.regions)
    regions.push_back(
        {{"name", r.name}, {"r_lo", r.r_lo}, {"r_hi", r.r_hi}, {"measured", num(r.measured)}, {"margin", num(r.margin)}});
  j["regions"] = regions;
  j["s4_residual"] = bulk.s4_residual;
  j["envelope_constants"] = {{"third_away", EnvelopeConstants::third_away},
                             {"almost_infinity", EnvelopeConstants::almost_infinity}};
  Json js = Json::array();
  for (const auto& s : seams) js.push_back({{"name", s.name}, {"r", s.r}, {"max_jump", s.max_jump}});
  j["seams"] = js;
  j["bridge"] = {{"min_slope_scaled", br.min_slope_scaled},
                 {"max_slope", br.max_slope},
                 {"max_higher", br.max_higher},
                 {"min_second_scaled", br.min_second_scaled},
                 {"slope_at_bridge_end", br.slope_at_bridge_end},
                 {"expected_slope_at_bridge_end", br.expected_slope_at_bridge_end},
                 {"min_vs_slope_times_s", br.min_vs_slope_times_s},
                 {"argmin_vs_slope", br.argmin_vs_slope}};
  j["f_h"] = {{"f_continuity", fh.f_continuity},
              {"min_h_bracket", fh.min_h_bracket},
              {"max_h_bracket", fh.max_h_bracket},
              {"max_box_h", fh.max_box_h},
              {"f_positive", fh.f_positive}};

  Json sep = Json::array();
  for (double d : kc.separation) {
    if (prof.r_ergo > 0.0) {
      const double c = weight_separation(prof, d);
      if (!(c > 0.0)) ok = false;
      sep.push_back({{"delta", d}, {"c_delta", c}});
    } else {
      sep.push_back({{"delta", d}, {"c_delta", nullptr}});
    }
  }
  j["separation"] = sep;

  const WeightProfile mod = moderate_profile(model, 2.0);
  const ManufacturedPulse pulse = reference_pulse(model);
  const auto conv = identity_convergence(mod, pulse, 0.0, 1.0, kc.identity_steps);
  Json levels = Json::array();
  for (size_t i = 0; i < conv.levels.size(); ++i) {
    const auto& L = conv.levels[i];
    levels.push_back({{"h", L.h},
                      {"bulk", L.bulk},
                      {"source", L.source},
                      {"boundary", L.boundary},
                      {"residual", L.residual},
                      {"order", i == 0 ? Json(nullptr) : num(conv.orders[i - 1])}});
  }
  j["identity"] = {{"pulse", {{"rc", pulse.rc}, {"sigma", pulse.sigma}, {"omega", pulse.omega}, {"m", pulse.m}}},
                   {"levels", levels},
                   {"observed_order", num(conv.observed_order)}};
  if (!(std::fabs(conv.observed_order - 2.0) <= 0.3)) ok = false;
  j["passed"] = ok;
  out.json("certificate.json", j);
  return ok ? kExitOk : kExitCheckFailed;
}

// -------------------------------------------------------------- hardy-check

int do_hardy(const AppConfig& cfg, const RunOptions& opt, Outputs& out) {
  const auto& hc = cfg.hardy;
  struct Job {
    int d;
    double a;  // 0 = logarithmic form
    Calibration cal, fine;
    SuiteReport suite;
  };
  std::vector<Job> jobs;
  for (int d : hc.dims) {
    for (double a : hc.a) jobs.push_back({d, a, {}, {}, {}});
    jobs.push_back({d, 0.0, {}, {}, {}});
  }
  parallel_for(static_cast<int>(jobs.size()), opt.threads, [&](int i) {
    auto& jb = jobs[i];
    const std::uint64_t seed = cfg.seed * 7919u + 101u * static_cast<std::uint64_t>(i);
    if (jb.a > 0.0) {
      jb.cal = calibrate_polynomial(jb.d, jb.a, hc.calibration_count, hc.N, seed);
      jb.fine = calibrate_polynomial(jb.d, jb.a, hc.calibration_count, 2 * hc.N, seed);
      jb.suite = polynomial_suite(jb.d, jb.a, jb.cal.C, hc.count, hc.N, seed + 1);
    } else {
      jb.cal = calibrate_log(jb.d, hc.calibration_count, hc.N, seed);
      jb.fine = calibrate_log(jb.d, hc.calibration_count, 2 * hc.N, seed);
      jb.suite = log_suite(jb.d, jb.cal.C, hc.count, hc.N, seed + 1);
    }
  });
  bool ok = true;
  Json rows = Json::array();
  for (const auto& jb : jobs) {
    const double drift = std::fabs(jb.fine.C / jb.cal.C - 1.0);
    const bool pass = jb.suite.violations == 0 && drift <= 0.1;
    ok = ok && pass;
    rows.push_back({{"d", jb.d},
                    {"form", jb.a > 0.0 ? "polynomial" : "logarithmic"},
                    {"a", jb.a > 0.0 ? Json(jb.a) : Json(nullptr)},
                    {"C", jb.cal.C},
                    {"max_needed", jb.cal.max_needed},
                    {"worst", jb.cal.worst_label},
                    {"C_refined", jb.fine.C},
                    {"refinement_drift", drift},
                    {"count", jb.suite.count},
                    {"violations", jb.suite.violations},
                    {"max_ratio", jb.suite.max_ratio},
                    {"passed", pass}});
  }
  out.json("hardy.json", {{"N", hc.N},
                          {"count", hc.count},
                          {"calibration_count", hc.calibration_count},
                          {"results", rows},
                          {"passed", ok}});
  return ok ? kExitOk : kExitCheckFailed;
}

// ------------------------------------------------------------ geometry-lint

struct LintRow {
  std::string name;
  double inverse_error = 0.0;
  double gNN_dev = 0.0;
  double max_gNN = 0.0;
  Json ergo;
};

LintRow lint_model(const std::string& name, const SpacetimeModel& model, int samples, int ergo_grid,
                   std::uint64_t seed) {
  LintRow row;
  row.name = name;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double lo = model.r_min, hi = model.r_max;
  if (model.kind == ModelKind::AlmostSchwarzschild3D) lo = 2.0 * model.M * 1.01;
  if (model.kind == ModelKind::Minkowski || model.kind == ModelKind::BumpErgoregion3D) lo = std::max(lo, 1e-3);
  for (int i = 0; i < samples; ++i) {
    const double r = lo + (hi - lo) * U(rng);
    const double t = 10.0 * U(rng), ph = 6.283185307179586 * U(rng);
    const ChartPoint p = model.two_plus_one() ? point2(t, r, ph) : point3(t, r, 0.05 + 3.04 * U(rng), ph);
    const MetricData md = metric_at(model, p);
    const Mat4 I = md.g * md.g_inv;
    row.inverse_error = std::max(row.inverse_error, (I - Mat4::Identity(md.dim, md.dim)).cwiseAbs().maxCoeff());
  }
  const auto cert = timelike_observer_N(model);
  row.gNN_dev = cert.max_dev_from_unit;
  row.max_gNN = cert.max_gNN;
  if (model.kind == ModelKind::HydroVortex) {
    const double h = (model.r_max - model.r_min) / ergo_grid;
    double found = std::nan("");
    double prev = ergoregion_indicator(model, point2(0.0, model.r_min, 0.0));
    for (int i = 1; i <= ergo_grid; ++i) {
      const double r = model.r_min + i * h;
      const double cur = ergoregion_indicator(model, point2(0.0, r, 0.0));
      if ((prev > 0.0) != (cur > 0.0)) {
        found = r - 0.5 * h;
        break;
      }
      prev = cur;
    }
    const double bisect = locate_ergosurface(model, model.r_min, model.r_max);
    row.ergo = {{"cells", ergo_grid},
                {"h", h},
                {"cell_midpoint", num(found)},
                {"bisection", bisect},
                {"expected", model.C},
                {"within_one_cell", std::fabs(found - model.C) <= h}};
  }
  return row;
}

int do_geometry_lint(const AppConfig& cfg, const RunOptions& opt, Outputs& out) {
  const auto& gc = cfg.geometry;
  const auto& cm = cfg.run.model;
  std::vector<std::pair<std::string, SpacetimeModel>> models;
  SpacetimeModel vortex = cm.kind == ModelKind::HydroVortex ? cm : make_vortex(1.0, 0.3, InnerBC::Dirichlet, 30.0);
  models.emplace_back("vortex", vortex);
  models.emplace_back("vortex_doubled", make_doubled_vortex(vortex.C, vortex.delta, vortex.r_max));
  models.emplace_back("minkowski", cm.kind == ModelKind::Minkowski ? cm : make_minkowski(0.0, 30.0));
  models.emplace_back("bump", make_bump_flat());
  models.emplace_back("almost_schwarzschild", make_almost_schwarzschild(1.0));

  std::vector<LintRow> rows(models.size());
  parallel_for(static_cast<int>(models.size()), opt.threads, [&](int i) {
    rows[i] = lint_model(models[i].first, models[i].second, gc.samples, gc.ergo_grid, cfg.seed + 31u * i);
  });
  bool ok = true;
  Json jr = Json::array();
  for (const auto& r : rows) {
    const bool vortex_kind = r.name == "vortex" || r.name == "vortex_doubled";
    bool pass = r.inverse_error <= 1e-12 && r.max_gNN < 0.0;
    if (vortex_kind) pass = pass && r.gNN_dev <= 1e-14;
    if (!r.ergo.is_null()) pass = pass && r.ergo["within_one_cell"].get<bool>();
    ok = ok && pass;
    Json j = {{"model", r.name},
              {"samples", gc.samples},
              {"inverse_error", r.inverse_error},
              {"max_g_NN", r.max_gNN},
              {"g_NN_unit_deviation", vortex_kind ? Json(r.gNN_dev) : Json(nullptr)},
              {"passed", pass}};
    if (!r.ergo.is_null()) j["ergosurface"] = r.ergo;
    jr.push_back(j);
  }
  out.json("geometry.json", {{"models", jr}, {"passed", ok}});
  return ok ? kExitOk : kExitCheckFailed;
}

using Handler = int (*)(const AppConfig&, const RunOptions&, Outputs&);

const std::vector<std::pair<std::string, Handler>>& handlers() {
  static const std::vector<std::pair<std::string, Handler>> h = {
      {"simulate", do_simulate},         {"make-data", do_make_data},     {"freq-analyze", do_freq_analyze},
      {"carleman-certify", do_carleman}, {"hardy-check", do_hardy},       {"geometry-lint", do_geometry_lint}};
  return h;
}

}  // namespace

const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, _] : handlers()) n.push_back(k);
    return n;
  }();
  return names;
}

void write_error_json(const std::string& out_dir, int status, const std::string& kind, const std::string& key,
                      const std::string& message) {
  Json j = {{"status", status}, {"kind", kind}, {"key", key.empty() ? Json(nullptr) : Json(key)}, {"message", message}};
  write_json((fs::path(out_dir) / "error.json").string(), j);
}

InitialData packet_data(const AppConfig& cfg) {
  const auto grid = config_grid(cfg);
  if (cfg.data.normalize) return negative_energy_data(cfg.run.model, grid, cfg.packet);
  return build_wave_packet(cfg.run.model, grid, cfg.packet);
}

std::vector<FieldSnapshot> initial_snapshots(const AppConfig& cfg) {
  const auto grid = config_grid(cfg);
  std::vector<FieldSnapshot> out;
  if (cfg.data.source == "zero") {
    for (int m : cfg.run.modes) {
      FieldSnapshot s;
      s.m = m;
      s.grid = grid;
      s.phi.assign(grid->size(), cd(0.0));
      s.dphi_dt.assign(grid->size(), cd(0.0));
      out.push_back(std::move(s));
    }
    return out;
  }
  if (cfg.data.source == "gaussian") {
    const auto& p = cfg.packet;
    for (int m : cfg.run.modes) {
      FieldSnapshot s;
      s.m = m;
      s.grid = grid;
      s.phi.resize(grid->size());
      s.dphi_dt.assign(grid->size(), cd(0.0));
      for (int i = 0; i < grid->size(); ++i) {
        const double x = (grid->r[i] - p.r_center) / p.radial_halfwidth;
        s.phi[i] = p.amplitude * std::exp(-x * x);
      }
      if (cfg.run.model.inner_bc == InnerBC::Dirichlet) s.phi.front() = 0.0;
      out.push_back(std::move(s));
    }
    return out;
  }
  InitialData d;
  if (cfg.data.source == "packet") {
    d = packet_data(cfg);
  } else {
    d = read_initial_data(cfg.data.file);
    const auto& g = *d.modes.front().grid;
    if (g.N != grid->N || g.r_min != grid->r_min || g.r_max != grid->r_max)
      throw ConfigError("data.file", "grid in the data file differs from model/grid settings");
  }
  if (cfg.run.modes.empty()) {
    for (auto& s : d.modes) {
      s.grid = grid;
      out.push_back(std::move(s));
    }
    return out;
  }
  for (int m : cfg.run.modes) {
    FieldSnapshot s = mode_component(d, m);
    s.grid = grid;
    out.push_back(std::move(s));
  }
  return out;
}

RunConfig resolved_run(const AppConfig& cfg, const std::vector<FieldSnapshot>& init) {
  RunConfig run = cfg.run;
  if (run.modes.empty())
    for (const auto& s : init) run.modes.push_back(s.m);
  return run;
}

int run_subcommand(const std::string& name, const AppConfig& cfg_in, const RunOptions& opt) {
  fs::create_directories(opt.out_dir);
  Handler handler = nullptr;
  for (const auto& [k, h] : handlers())
    if (k == name) handler = h;
  if (!handler) {
    write_error_json(opt.out_dir, kExitUsage, "usage", "", "unknown subcommand '" + name + "'");
    return kExitUsage;
  }
  AppConfig cfg = cfg_in;
  if (opt.seed) cfg.seed = *opt.seed;

  const auto start = std::chrono::steady_clock::now();
  RunManifest man;
  man.subcommand = name;
  man.config_echo = serialize_config(cfg);
  man.config_hash = sha256_hex(man.config_echo);
  man.seed = cfg.seed;
  man.threads = opt.threads;

  Outputs out{opt.out_dir, {}};
  const fs::path err_path = fs::path(opt.out_dir) / "error.json";
  int status = kExitOk;
  try {
    if (fs::exists(err_path)) fs::remove(err_path);
    status = handler(cfg, opt, out);
  } catch (const ConfigError& e) {
    status = kExitUsage;
    write_error_json(opt.out_dir, status, "config", e.key, e.what());
  } catch (const NumericalBlowup& e) {
    status = kExitCheckFailed;
    write_error_json(opt.out_dir, status, "numerical_blowup", "", e.what());
  } catch (const ParameterError& e) {
    status = kExitCheckFailed;
    write_error_json(opt.out_dir, status, "parameter", "", e.what());
  } catch (const std::exception& e) {
    status = kExitCheckFailed;
    write_error_json(opt.out_dir, status, "module", "", e.what());
  }
  man.status = status;
  man.outputs = out.entries;
  man.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json((fs::path(opt.out_dir) / RunManifest::file_name(name)).string(), man.to_json());
  return status;
}

int run_with_config_file(const std::string& name, const std::string& config_path, const RunOptions& opt) {
  AppConfig cfg;
  try {
    cfg = parse_config(config_path);
  } catch (const ConfigError& e) {
    fs::create_directories(opt.out_dir);
    write_error_json(opt.out_dir, kExitUsage, "config", e.key, e.what());
    return kExitUsage;
  }
  return run_subcommand(name, cfg, opt);
}

}  // namespace ergo
