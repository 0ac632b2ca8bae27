#include "ergo/evolution.hpp"

#include <algorithm>
#include <atomic>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <thread>

namespace ergo {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
const cd kI(0.0, 1.0);

void require_evolvable(const SpacetimeModel& model) {
  if (model.kind != ModelKind::HydroVortex && model.kind != ModelKind::Minkowski)
    throw UnsupportedError("evolution supports HydroVortex (Dirichlet/Neumann halves) and Minkowski; got " +
                           to_string(model.kind));
}
}  // namespace

std::string to_string(OuterBC b) { return b == OuterBC::Reflecting ? "reflecting" : "sommerfeld"; }

OuterBC outer_bc_from_string(const std::string& s) {
  if (s == "reflecting") return OuterBC::Reflecting;
  if (s == "sommerfeld") return OuterBC::Sommerfeld;
  throw std::invalid_argument("unknown outer boundary condition '" + s + "'");
}

GridPtr RunConfig::grid() const { return RadialGrid::uniform(model.r_min, model.r_max, N); }

void RunConfig::validate() const {
  model.validate();
  require_evolvable(model);
  if (!(cfl > 0.0) || cfl > 0.9) throw std::invalid_argument("cfl must lie in (0, 0.9]");
  if (N < 128) throw std::invalid_argument("N must be at least 128");
  if (model.kind == ModelKind::HydroVortex && model.r_max < 4.0 * model.C)
    throw std::invalid_argument("r_max must be at least 4 C");
  if (!(T_final >= 0.0)) throw std::invalid_argument("T_final must be nonnegative");
  if (!(output_every > 0.0)) throw std::invalid_argument("output_every must be positive");
  if (modes.empty()) throw std::invalid_argument("mode list is empty");
}

double cfl_dt(const RunConfig& config) {
  if (!(config.cfl > 0.0)) throw std::invalid_argument("cfl must be positive");
  const auto g = config.grid();
  double cmax = 0.0;
  for (double r : g->r) {
    if (r == 0.0) continue;
    cmax = std::max(cmax, characteristic_speed(config.model, r));
  }
  return config.cfl * g->h / cmax;
}

std::vector<cd> radial_operator(const RadialGrid& g, int m, const std::vector<cd>& u) {
  const int n = g.size();
  if (static_cast<int>(u.size()) != n) throw std::invalid_argument("radial_operator: length mismatch");
  const double m2 = double(m) * double(m);
  std::vector<cd> y(n);
  for (int i = 0; i < n; ++i) {
    cd flux = 0.0;
    if (i < n - 1) flux += g.rh[i] * (u[i + 1] - u[i]) / g.h;
    if (i > 0) flux -= g.rh[i - 1] * (u[i] - u[i - 1]) / g.h;
    y[i] = flux / g.W[i];
    if (g.r[i] > 0.0) y[i] -= m2 * u[i] / (g.r[i] * g.r[i]);
  }
  return y;
}

ManufacturedField gaussian_manufactured(double omega, double rc, double sigma) {
  auto prof = [=](double r) { return std::exp(-std::pow((r - rc) / sigma, 2)); };
  auto dprof = [=](double r) { return -2.0 * (r - rc) / (sigma * sigma) * prof(r); };
  auto ddprof = [=](double r) {
    const double x = (r - rc) / sigma;
    return (4.0 * x * x - 2.0) / (sigma * sigma) * prof(r);
  };
  ManufacturedField f;
  f.u = [=](double t, double r) { return cd(std::sin(omega * t + 0.3) * prof(r)); };
  f.u_t = [=](double t, double r) { return cd(omega * std::cos(omega * t + 0.3) * prof(r)); };
  f.u_tt = [=](double t, double r) { return cd(-omega * omega * std::sin(omega * t + 0.3) * prof(r)); };
  f.u_r = [=](double t, double r) { return cd(std::sin(omega * t + 0.3) * dprof(r)); };
  f.u_rr = [=](double t, double r) { return cd(std::sin(omega * t + 0.3) * ddprof(r)); };
  return f;
}

ModeSolver::ModeSolver(const SpacetimeModel& model, GridPtr grid, int m, OuterBC outer, double dt)
    : model_(model), grid_(std::move(grid)), m_(m), outer_(outer), dt_(dt) {
  require_evolvable(model_);
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
  const auto& g = *grid_;
  const int n = g.size();
  const double h = g.h;
  const double m2 = double(m) * double(m);
  const bool origin = g.r[0] == 0.0;
  first_ = (model_.inner_bc == InnerBC::Dirichlet || (origin && m != 0)) ? 1 : 0;
  if (origin && model_.inner_bc != InnerBC::Regular && model_.kind != ModelKind::Minkowski)
    throw std::invalid_argument("grid reaches r = 0 on a model with an inner wall");

  u_.assign(n, 0.0);
  pi_.assign(n, 0.0);
  beta_.resize(n);
  B_.resize(n);
  lo_.assign(n, 0.0);
  di_.assign(n, 0.0);
  up_.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    beta_[i] = (g.r[i] > 0.0) ? kI * double(m) * frame_dragging(model_, g.r[i]) : cd(0.0);
    B_[i] = beta_[i];
    if (g.r[i] > 0.0) di_[i] = -m2 / (g.r[i] * g.r[i]);
    if (i > 0) {
      const double c = g.rh[i - 1] / (h * g.W[i]);
      lo_[i] = c;
      di_[i] -= c;
    }
    if (i < n - 1) {
      const double c = g.rh[i] / (h * g.W[i]);
      up_[i] = c;
      di_[i] -= c;
    }
  }
  if (outer_ == OuterBC::Sommerfeld) {
    const int N = n - 1;
    const double rN = g.r[N];
    const double k = rN / g.W[N];
    B_[N] += k;
    di_[N] += k * (beta_[N] - 1.0 / (2.0 * rN));
  }

  // Thomas factorisation of (1 + aB)(1 + a beta) - a^2 L' on indices first_..N
  const double a = 0.5 * dt_;
  cprime_.assign(n, 0.0);
  denom_.assign(n, 0.0);
  for (int i = first_; i < n; ++i) {
    const cd diag = (1.0 + a * B_[i]) * (1.0 + a * beta_[i]) - a * a * di_[i];
    const cd low = (i > first_) ? -a * a * lo_[i] : cd(0.0);
    const cd upp = (i < n - 1) ? -a * a * up_[i] : cd(0.0);
    denom_[i] = diag - ((i > first_) ? low * cprime_[i - 1] : cd(0.0));
    cprime_[i] = upp / denom_[i];
  }
}

void ModeSolver::apply_L(const std::vector<cd>& x, std::vector<cd>& y) const {
  const int n = static_cast<int>(x.size());
  for (int i = 0; i < n; ++i) {
    cd v = di_[i] * x[i];
    if (i > 0) v += lo_[i] * x[i - 1];
    if (i < n - 1) v += up_[i] * x[i + 1];
    y[i] = v;
  }
  for (int i = 0; i < first_; ++i) y[i] = 0.0;
}

void ModeSolver::set_state(const std::vector<cd>& u, const std::vector<cd>& u_t, double t) {
  const int n = grid_->size();
  if (static_cast<int>(u.size()) != n || static_cast<int>(u_t.size()) != n)
    throw std::invalid_argument("state length does not match the grid");
  u_ = u;
  for (int i = 0; i < n; ++i) pi_[i] = u_t[i] + beta_[i] * u_[i];
  for (int i = 0; i < first_; ++i) u_[i] = pi_[i] = 0.0;
  t_ = t;
  outflux_ = 0.0;
}

void ModeSolver::step() {
  const auto& g = *grid_;
  const int n = g.size();
  const double a = 0.5 * dt_;
  std::vector<cd> S(n, 0.0);
  if (source_) {
    for (int i = first_; i < n; ++i)
      S[i] = 0.5 * (source_(t_, g.r[i]) + source_(t_ + dt_, g.r[i]));
  }
  // s = u1 + u0 solves the tridiagonal system; p = pi1 + pi0 follows
  std::vector<cd> s(n, 0.0), p(n, 0.0), Ls(n, 0.0);
  for (int i = first_; i < n; ++i) s[i] = 2.0 * (1.0 + a * B_[i]) * u_[i] + 2.0 * a * pi_[i] + a * dt_ * S[i];
  s[first_] /= denom_[first_];
  for (int i = first_ + 1; i < n; ++i) s[i] = (s[i] - (-a * a * lo_[i]) * s[i - 1]) / denom_[i];
  for (int i = n - 2; i >= first_; --i) s[i] -= cprime_[i] * s[i + 1];
  apply_L(s, Ls);
  for (int i = first_; i < n; ++i) p[i] = (2.0 * pi_[i] + a * Ls[i] + dt_ * S[i]) / (1.0 + a * B_[i]);

  if (outer_ == OuterBC::Sommerfeld) {
    const int N = n - 1;
    const double rN = g.r[N];
    const cd ub = 0.5 * s[N], pb = 0.5 * p[N];
    const cd ut = pb - beta_[N] * ub;
    const cd F = -ut - ub / (2.0 * rN);
    outflux_ -= kTwoPi * dt_ * rN * std::real(ut * std::conj(F));
  }
  for (int i = first_; i < n; ++i) {
    u_[i] = s[i] - u_[i];
    pi_[i] = p[i] - pi_[i];
  }
  t_ += dt_;
}

FieldSnapshot ModeSolver::snapshot() const {
  FieldSnapshot s;
  s.m = m_;
  s.t = t_;
  s.grid = grid_;
  s.phi = u_;
  s.dphi_dt.resize(u_.size());
  for (size_t i = 0; i < u_.size(); ++i) s.dphi_dt[i] = pi_[i] - beta_[i] * u_[i];
  return s;
}

namespace {

struct ModeRun {
  std::vector<StaggeredEnergy> all, ergo;
  std::vector<double> outflux, times;
  std::vector<FieldSnapshot> snaps;
  std::vector<ProbeHistory> probes;
  std::string error;
  double last_good = 0.0;
};

bool finite_state(const std::vector<cd>& u) {
  for (const auto& z : u)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

}  // namespace

DiagnosticsSeries evolve(const RunConfig& config, const std::vector<FieldSnapshot>& initial, int threads) {
  config.validate();
  if (initial.size() != config.modes.size()) throw std::invalid_argument("need one initial snapshot per mode");
  const auto grid = config.grid();
  const double dt0 = cfl_dt(config);
  const int per_out = std::max(1, static_cast<int>(std::ceil(config.output_every / dt0 - 1e-9)));
  const double dt = config.output_every / per_out;
  const int nsteps = static_cast<int>(std::llround(config.T_final / dt));

  std::vector<int> probe_idx;
  for (double r : config.probe_radii) {
    const int i = static_cast<int>(std::llround((r - grid->r_min) / grid->h));
    probe_idx.push_back(std::clamp(i, 0, grid->N));
  }

  const int nm = static_cast<int>(config.modes.size());
  std::vector<ModeRun> runs(nm);
  auto run_mode = [&](int k) {
    ModeRun& out = runs[k];
    try {
      const auto& init = initial[k];
      if (init.m != config.modes[k]) throw std::invalid_argument("initial data mode order does not match config");
      if (init.grid->size() != grid->size()) throw std::invalid_argument("initial data grid does not match config");
      ModeSolver solver(config.model, grid, config.modes[k], config.outer, dt);
      solver.set_state(init.phi, init.dphi_dt, 0.0);
      for (int p : probe_idx) out.probes.push_back({config.modes[k], grid->r[p], {}, {}});
      auto record = [&]() {
        FieldSnapshot s = solver.snapshot();
        out.times.push_back(solver.time());
        out.all.push_back(staggered_energy(config.model, s, Region::all()));
        out.ergo.push_back(staggered_energy(config.model, s, Region::ergoregion(config.ergo_margin)));
        out.outflux.push_back(solver.outflux());
        if (config.keep_snapshots) out.snaps.push_back(std::move(s));
      };
      auto probe = [&]() {
        for (size_t j = 0; j < probe_idx.size(); ++j) {
          out.probes[j].t.push_back(solver.time());
          out.probes[j].u.push_back(solver.u()[probe_idx[j]]);
        }
      };
      record();
      probe();
      for (int n = 1; n <= nsteps; ++n) {
        solver.step();
        probe();
        if (n % per_out == 0 || n == nsteps) {
          if (!finite_state(solver.u()))
            throw NumericalBlowup("non-finite field in mode " + std::to_string(config.modes[k]), out.last_good);
          out.last_good = solver.time();
          if (n % per_out == 0) record();
        }
      }
    } catch (const std::exception& e) {
      out.error = e.what();
    }
  };

  const int nthreads = std::clamp(threads, 1, nm);
  if (nthreads == 1) {
    for (int k = 0; k < nm; ++k) run_mode(k);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&]() {
        for (int k = next++; k < nm; k = next++) run_mode(k);
      });
    for (auto& th : pool) th.join();
  }
  for (const auto& r : runs) {
    if (r.error.empty()) continue;
    if (r.error.rfind("non-finite", 0) == 0) throw NumericalBlowup(r.error, r.last_good);
    throw std::runtime_error(r.error);
  }

  DiagnosticsSeries series;
  series.dt = dt;
  series.steps = nsteps;
  const size_t nrep = runs.front().times.size();
  double ET0 = 0.0, EN0 = 0.0;
  for (size_t j = 0; j < nrep; ++j) {
    EnergyReport rep;
    rep.t = runs.front().times[j];
    for (const auto& r : runs) {
      rep.E_T_total += r.all[j].E_T;
      rep.E_N_total += r.all[j].E_N;
      rep.E_log += r.all[j].E_log;
      rep.E_T_ergo += r.ergo[j].E_T;
      rep.flux_out += r.outflux[j];
    }
    if (j == 0) {
      ET0 = rep.E_T_total;
      EN0 = rep.E_N_total;
    }
    series.reports.push_back(rep);
  }
  const double scale = std::fabs(ET0) > 0.0 ? std::fabs(ET0) : (EN0 > 0.0 ? EN0 : 1.0);
  for (const auto& rep : series.reports)
    series.ledger_residual =
        std::max(series.ledger_residual, std::fabs(rep.E_T_total + rep.flux_out - ET0) / scale);
  if (config.keep_snapshots) {
    series.snapshots.resize(nrep);
    for (size_t j = 0; j < nrep; ++j)
      for (auto& r : runs) series.snapshots[j].push_back(std::move(r.snaps[j]));
  }
  for (auto& r : runs)
    for (auto& p : r.probes) series.probes.push_back(std::move(p));
  return series;
}

GrowthFit fit_growth_rate(const std::vector<double>& t, const std::vector<double>& E, double t_begin, double t_end) {
  if (t.size() != E.size()) throw std::invalid_argument("fit_growth_rate: length mismatch");
  std::vector<double> x, y;
  for (size_t i = 0; i < t.size(); ++i)
    if (t[i] >= t_begin && t[i] <= t_end && E[i] > 0.0) {
      x.push_back(t[i]);
      y.push_back(std::log(E[i]));
    }
  GrowthFit fit;
  fit.t_begin = t_begin;
  fit.t_end = t_end;
  fit.samples = static_cast<int>(x.size());
  if (x.size() < 3) throw std::invalid_argument("fit_growth_rate: fewer than 3 samples in window");
  const double n = double(x.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  fit.rate = sxy / sxx;
  const double icpt = my - fit.rate * mx;
  double sse = 0.0;
  for (size_t i = 0; i < x.size(); ++i) sse += std::pow(y[i] - icpt - fit.rate * x[i], 2);
  fit.stderr_ = std::sqrt(sse / (n - 2.0) / sxx);
  const boost::math::students_t dist(n - 2.0);
  const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
  fit.ci_lo = fit.rate - q * fit.stderr_;
  fit.ci_hi = fit.rate + q * fit.stderr_;
  return fit;
}

ConvergenceReport manufactured_residual(const RunConfig& config, int m, const ManufacturedField& exact, double T,
                                        int levels) {
  require_evolvable(config.model);
  if (levels < 2) throw std::invalid_argument("need at least two levels");
  ConvergenceReport rep;
  const double md = double(m);
  for (int lev = 0; lev < levels; ++lev) {
    RunConfig c = config;
    c.N = config.N << lev;
    const auto grid = c.grid();
    // keep dt / h fixed so the time and space errors shrink together
    const double dt_target = cfl_dt(c);
    const int nsteps = std::max(1, static_cast<int>(std::ceil(T / dt_target)));
    const double dt = T / nsteps;
    ModeSolver solver(c.model, grid, m, c.outer, dt);
    const SpacetimeModel model = c.model;
    solver.set_source([&exact, model, md](double t, double r) {
      const cd beta = kI * md * frame_dragging(model, r);
      const cd u = exact.u(t, r);
      const cd lhs = exact.u_tt(t, r) + 2.0 * beta * exact.u_t(t, r) + beta * beta * u;
      cd lap = exact.u_rr(t, r);
      if (r > 0.0) lap += exact.u_r(t, r) / r - md * md * u / (r * r);
      return lhs - lap;
    });
    std::vector<cd> u0(grid->size()), ut0(grid->size());
    for (int i = 0; i < grid->size(); ++i) {
      u0[i] = exact.u(0.0, grid->r[i]);
      ut0[i] = exact.u_t(0.0, grid->r[i]);
    }
    solver.set_state(u0, ut0, 0.0);
    for (int n = 0; n < nsteps; ++n) solver.step();
    double err = 0.0;
    for (int i = 0; i < grid->size(); ++i) err = std::max(err, std::abs(solver.u()[i] - exact.u(T, grid->r[i])));
    rep.N.push_back(c.N);
    rep.error.push_back(err);
  }
  for (size_t i = 1; i < rep.error.size(); ++i) rep.order.push_back(std::log2(rep.error[i - 1] / rep.error[i]));
  rep.observed_order = rep.order.back();
  if (rep.order.size() >= 2) {
    const double a = rep.order[rep.order.size() - 2], b = rep.order.back();
    rep.pre_asymptotic = std::fabs(a - b) > 0.3 || std::fabs(b - 2.0) > 0.5;
  } else {
    rep.pre_asymptotic = std::fabs(rep.observed_order - 2.0) > 0.5;
  }
  return rep;
}

double zero_crossing_period(const std::vector<double>& t, const std::vector<double>& x) {
  std::vector<double> cross;
  for (size_t i = 1; i < x.size(); ++i)
    if (x[i - 1] < 0.0 && x[i] >= 0.0) {
      const double f = x[i - 1] / (x[i - 1] - x[i]);
      cross.push_back(t[i - 1] + f * (t[i] - t[i - 1]));
    }
  if (cross.size() < 2) throw std::invalid_argument("fewer than two upward zero crossings");
  return (cross.back() - cross.front()) / double(cross.size() - 1);
}

}  // namespace ergo
