// Energy-momentum tensor, vector-field currents and slice energies of per-mode fields.
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "ergo/geometry.hpp"

namespace ergo {

// Uniform radial grid r_i = r_min + i h, i = 0..N. W_i is the exact area of the
// dual cell divided by 2 pi; rh holds the edge midpoints.
struct RadialGrid {
  double r_min = 0.0, r_max = 1.0;
  int N = 0;
  double h = 0.0;
  std::vector<double> r, rh, W;

  static std::shared_ptr<const RadialGrid> uniform(double r_min, double r_max, int N);
  int size() const { return N + 1; }
};

using GridPtr = std::shared_ptr<const RadialGrid>;

// One azimuthal mode phi(t, r) e^{i m phi} on a radial grid.
struct FieldSnapshot {
  int m = 0;
  double t = 0.0;
  GridPtr grid;
  std::vector<cd> phi;
  std::vector<cd> dphi_dt;

  std::vector<cd> dphi_dr() const;  // centred differences, one-sided at the ends
  // Checks array sizes and the inner boundary condition to tolerance tol.
  void validate(InnerBC bc, double tol = 1e-10) const;
};

struct EnergyReport {
  double t = 0.0;
  double E_T_total = 0.0;
  double E_T_ergo = 0.0;
  double E_N_total = 0.0;
  double E_log = 0.0;
  double flux_in = 0.0;
  double flux_out = 0.0;
};

struct Region {
  enum class Kind { All, Ergoregion, Annulus } kind = Kind::All;
  double a = 0.0, b = 0.0;  // annulus bounds, or the ergoregion margin in a
  static Region all() { return {}; }
  static Region ergoregion(double margin) { return {Kind::Ergoregion, margin, 0.0}; }
  static Region annulus(double a, double b) { return {Kind::Annulus, a, b}; }
  bool contains(const SpacetimeModel& model, double r) const;
};

// Q_{mu nu} = Re(d_mu psi d_nu psi*) - 1/2 g_{mu nu} g^{ab} d_a psi d_b psi*
Mat4 q_tensor(const MetricData& metric, const CVec4& grad);

// J^X_mu = Q_{mu nu} X^nu
Vec4 current_J(const Mat4& Q, const Vec4& X);

using VectorField = std::function<Vec4(const ChartPoint&)>;

// K^X = Q_{mu nu} grad^mu X^nu, evaluated as 1/2 Q^{mu nu} (L_X g)_{mu nu}.
double current_K(const SpacetimeModel& model, const ChartPoint& p, const CVec4& grad, const VectorField& X,
                 double step = 1e-5);

VectorField field_T(const SpacetimeModel& model);
VectorField field_N(const SpacetimeModel& model);

// Gradient (d_t, d_r, d_phi) of u e^{i m phi} at phi = 0.
CVec4 mode_gradient(cd u, cd u_t, cd u_r, int m);

// Integral over the slice region of J^X_mu n^mu with trapezoid weights and
// centred radial differences. Sum over the supplied modes; includes the 2 pi.
double slice_flux(const SpacetimeModel& model, const std::vector<FieldSnapshot>& modes, const VectorField& X,
                  const Region& region);

// Staggered quadrature (node terms with dual-cell weights, gradient term on
// edges). This is the quadratic form the evolution scheme conserves.
struct StaggeredEnergy {
  double E_T = 0.0;
  double E_N = 0.0;
  double E_log = 0.0;  // E_N plus the (log(2+r))^3-weighted N-energy
};

StaggeredEnergy staggered_energy(const SpacetimeModel& model, const FieldSnapshot& s, const Region& region);

EnergyReport energy_report(const SpacetimeModel& model, const std::vector<FieldSnapshot>& modes, double ergo_margin);

// Weighted energy E_log: E_N + int (log(2+r))^3 J^N n.
double weighted_energy_log(const SpacetimeModel& model, const std::vector<FieldSnapshot>& modes);

// Symmetric bilinear form whose diagonal is the staggered T-energy.
double t_inner_product(const SpacetimeModel& model, const FieldSnapshot& a, const FieldSnapshot& b);

// Pointwise K^T on every node of a snapshot, integrated with trapezoid weights.
double killing_residual(const SpacetimeModel& model, const std::vector<FieldSnapshot>& modes);

struct DyadicReport {
  double max_ratio = 0.0;    // worst LHS / RHS over times and shells
  double worst_time = 0.0;
  int shells = 0;
  bool flagged = false;      // max_ratio > C_a
};

// Finite-speed weighted boundedness: for each later snapshot tau, compares
//   int_{r >= R + c|tau - tau1|} w(r) e_T   against   F(tau - tau1) int_{r >= R} w(r) e_T(tau1)
// with w = r^a, F = (1+|dt|)^a (polynomial) or w = (log r)^a, F = (log(2+|dt|))^{a+1}.
DyadicReport dyadic_weighted_bound_check(const SpacetimeModel& model,
                                         const std::vector<std::vector<FieldSnapshot>>& series, double a, double R,
                                         bool logarithmic, double C_a, double speed);

}  // namespace ergo
