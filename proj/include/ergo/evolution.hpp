// Per-mode time evolution of the wave equation on the 2+1 families.
#pragma once

#include <functional>
#include <vector>

#include "ergo/energy.hpp"

namespace ergo {

enum class OuterBC { Reflecting, Sommerfeld };

std::string to_string(OuterBC b);
OuterBC outer_bc_from_string(const std::string& s);

struct RunConfig {
  SpacetimeModel model = make_vortex(1.0, 0.3, InnerBC::Dirichlet, 30.0);
  std::vector<int> modes{2};
  int N = 1024;
  double cfl = 0.5;
  double T_final = 50.0;
  OuterBC outer = OuterBC::Sommerfeld;
  double output_every = 1.0;  // diagnostics cadence in time units
  double ergo_margin = 0.0;
  std::vector<double> probe_radii;
  bool keep_snapshots = false;

  GridPtr grid() const;
  void validate() const;  // throws std::invalid_argument
  bool operator==(const RunConfig&) const = default;
};

// dt = cfl * h / max_r c(r), c the characteristic speed of the per-mode principal part.
double cfl_dt(const RunConfig& config);

// Flux-form radial operator (L_m u)_i on the dual cells with zero flux through both
// ends; the same discrete Laplacian the solver uses away from the boundary rows.
std::vector<cd> radial_operator(const RadialGrid& grid, int m, const std::vector<cd>& u);

// Closed-form field used for manufactured-solution tests.
struct ManufacturedField {
  std::function<cd(double, double)> u, u_t, u_tt, u_r, u_rr;
};

// u = sin(omega t + 0.3) exp(-((r - rc)/sigma)^2)
ManufacturedField gaussian_manufactured(double omega, double rc, double sigma);

// Implicit-midpoint (Crank-Nicolson) integrator for one azimuthal mode. Unknowns
// are u and pi = u_t + beta u with beta = i m Omega(r):
//   u' = pi - beta u,   pi' = L_m u - beta pi (+ source)
// L_m is the flux-form radial Laplacian on the dual cells of the grid, so the
// staggered T-energy is conserved exactly up to the outgoing boundary flux.
class ModeSolver {
 public:
  ModeSolver(const SpacetimeModel& model, GridPtr grid, int m, OuterBC outer, double dt);

  void set_state(const std::vector<cd>& u, const std::vector<cd>& u_t, double t = 0.0);
  // Source S(t, r) added to the pi equation (optional).
  void set_source(std::function<cd(double, double)> source) { source_ = std::move(source); }
  void step();

  FieldSnapshot snapshot() const;
  double time() const { return t_; }
  double dt() const { return dt_; }
  int m() const { return m_; }
  const std::vector<cd>& u() const { return u_; }
  // Cumulative T-energy that left through the outer boundary (2 pi included).
  double outflux() const { return outflux_; }

 private:
  void apply_L(const std::vector<cd>& x, std::vector<cd>& y) const;

  SpacetimeModel model_;
  GridPtr grid_;
  int m_;
  OuterBC outer_;
  double dt_;
  double t_ = 0.0;
  double outflux_ = 0.0;
  int first_ = 0;  // first unknown (1 with a Dirichlet wall)
  std::vector<cd> u_, pi_, beta_, B_;
  std::vector<cd> lo_, di_, up_;  // L'
  std::vector<cd> cprime_, denom_;  // Thomas factorisation of the step matrix
  std::function<cd(double, double)> source_;
};

struct ProbeHistory {
  int m = 0;
  double r = 0.0;
  std::vector<double> t;
  std::vector<cd> u;
};

struct DiagnosticsSeries {
  std::vector<EnergyReport> reports;
  std::vector<std::vector<FieldSnapshot>> snapshots;  // when keep_snapshots
  std::vector<ProbeHistory> probes;
  double dt = 0.0;
  int steps = 0;
  double ledger_residual = 0.0;  // max |E_T + outflux - E_T(0)| / max(|E_T(0)|, tiny)
};

struct NumericalBlowup : std::runtime_error {
  double last_good_time;
  NumericalBlowup(const std::string& msg, double t) : std::runtime_error(msg), last_good_time(t) {}
};

// Runs every mode to T_final (one worker per mode, at most `threads` at once) and
// merges the reports in mode order. initial holds one snapshot per configured mode.
DiagnosticsSeries evolve(const RunConfig& config, const std::vector<FieldSnapshot>& initial, int threads = 1);

struct GrowthFit {
  double rate = 0.0;  // d log E / dt
  double stderr_ = 0.0;
  double ci_lo = 0.0, ci_hi = 0.0;  // 95 %
  double t_begin = 0.0, t_end = 0.0;
  int samples = 0;
};

// Least-squares fit of log E against t over [t_begin, t_end].
GrowthFit fit_growth_rate(const std::vector<double>& t, const std::vector<double>& E, double t_begin, double t_end);

struct ConvergenceReport {
  std::vector<int> N;
  std::vector<double> error;  // max-norm error at the final time
  std::vector<double> order;  // between consecutive levels
  double observed_order = 0.0;
  bool pre_asymptotic = false;
};

// Evolves the manufactured field with its source on N, 2N, 4N, ... and measures
// the error against the closed form at time T.
ConvergenceReport manufactured_residual(const RunConfig& config, int m, const ManufacturedField& exact, double T,
                                        int levels = 3);

// Average period from upward zero crossings of a real signal (linear interpolation).
double zero_crossing_period(const std::vector<double>& t, const std::vector<double>& x);

}  // namespace ergo
