// Radial Carleman weights, the zeroth-order bulk coefficient of the weighted
// multiplier and the numerical certificates attached to them.
//
// Scope: radially symmetric models with g_rr = 1 and no dr cross terms
// (hydrodynamic vortex, Minkowski annulus). For radial f the Hessian is
//   H_rr = f'',  H_ab = 1/2 d_r g_ab f'  (a, b in {t, phi}),
// which is all the Christoffel data the construction needs.
#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include "ergo/frequency.hpp"
#include "ergo/geometry.hpp"

namespace ergo {

struct ParameterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Value and derivatives 1..5 of a radial function.
using Jet6 = std::array<double, 6>;

struct CarlemanParams {
  double s = 0.0;
  double R = 0.0;
  double eps0 = 0.05;
  double delta0 = 0.1, delta1 = 0.1, delta2 = 0.1;
  double l = 2.0;           // w = e^{l wbar}
  double gamma = 0.05;      // source in the base elliptic problem
  double R0 = 8.0;
  double r0 = 0.0;          // inner wall of the base problem; 0 = taken from the model
  double C1 = 1.0;          // slope of the intermediate power law
  double C_rule = 10.0;     // large constant in the R and s selection rules
  double threshold = 10.0;  // lower bound for eps0 s R^{-9 eps0}
  double omega_k = 1.0;

  // Filled by build_wR. C4 = e^{log_C4}; f(R) = C4^{2s}.
  double C2 = 0.0, C3 = 0.0, log_C4 = 0.0;

  double ratio_parameter() const;  // eps0 s R^{-9 eps0}
  // Throws ParameterError naming the first violated constraint.
  void validate() const;
  // Bounds of the admissible s interval for this R and omega_k.
  std::pair<double, double> s_interval() const;
};

// Smallest R on a log grid (ratio 1.01) satisfying the lower bound on R, the
// bridge constraint R^{eps0} >= R_bridge, a nonempty s interval and the
// threshold; s is the geometric midpoint of the interval.
CarlemanParams choose_parameters(double omega_k, double delta1, double eps0, double delta2,
                                 const CarlemanParams& base = {});

// Radius from which the intermediate power law satisfies the second
// derivative bound: eps0 >= 4 r^{-1/2}, with a factor 2 of slack.
double bridge_radius(double eps0);

// wbar on [r_in, r_out] with Delta wbar = gamma, wbar(r_in) = 1, wbar(r_out) = 2.
struct BaseWeight {
  int d = 2;
  double gamma = 0.0;
  double r_in = 0.0, r_out = 0.0;
  double A = 0.0, B = 0.0;  // wbar = A + B G(r) + gamma r^2 / (2d)

  std::vector<double> r, value;      // tridiagonal solution
  double residual = 0.0;             // max discrete residual
  double closed_form_error = 0.0;    // max |discrete - closed form|
  double min_slope = 0.0;            // min d_r wbar on [r_in, r_out]

  Jet6 jet(double r) const;  // closed form, extended beyond the interval
};

// Inner radius of the base problem: the ergosurface for the vortex, the inner
// boundary (or params.r0) otherwise.
double base_inner_radius(const SpacetimeModel& model, const CarlemanParams& p);

BaseWeight solve_base_weight(const SpacetimeModel& model, const CarlemanParams& p, int N = 4000);

struct HessianCertificate {
  double l = 0.0;
  double min_contraction = 0.0;  // min of w'' w'^2 on [r_in, R0]
  double grad_on_ergosurface = 0.0;  // w'^2 at r_in
  bool critical_set_empty = true;
};

HessianCertificate build_w(const BaseWeight& base, double l, double R0);

// Pieces and seams of w_R, stored as w_R = w0 + w1 / s with both parts s-independent.
struct WeightProfile {
  SpacetimeModel model;
  CarlemanParams params;
  BaseWeight base;
  HessianCertificate hessian;
  double r_ergo = 0.0;   // boundary of the ergoregion (0 when empty)
  double r_bridge = 0.0; // R^{eps0}

  // Bridge tables in rho = log r; lambda = d_rho log(r d_r w_R).
  double rho0 = 0.0, rho1 = 0.0, eta_in = 0.0, eta_out = 0.0;
  double K_decay = 4.0, mu = 0.0;
  std::array<double, 5> taylor{};  // derivatives 1..4 of log(r w_near') at rho0
  double logq0 = 0.0, wR0 = 0.0;
  std::vector<double> rho_tab, logq_tab, w_tab;

  double mollify_width = 0.0;  // delta1 / 10
  double bump_norm = 0.0;

  std::vector<double> seams;

  // Pieces of w_R(r) as a split jet.
  void wR(double r, Jet6& w0, Jet6& w1) const;
  // Same with derivative k multiplied by r^k (no under/overflow at large r).
  void wR_scaled(double r, Jet6& w0, Jet6& w1) const;
  // v_s(x) split the same way (x = r / R).
  void vs(double x, Jet6& v0, Jet6& v1) const;
  // F = log f = 2 s w_R (r <= R), 2 s log C4 + log(x - 0.9 log x) beyond.
  Jet6 logf(double r, double s) const;
  double log_fR() const { return 2.0 * params.s * params.log_C4; }

  double lambda(double rho, int order) const;
};

// The base weight and Hessian certificate are computed here as well.
WeightProfile build_wR(const SpacetimeModel& model, CarlemanParams params);

struct BridgeReport {
  double min_slope_scaled = 0.0;  // min d_r w_R R^{3 eps0} on [R0, R^{eps0}]
  double max_slope = 0.0;
  double max_higher = 0.0;        // max |d^k w_R|, k = 2..4
  double min_second_scaled = 0.0; // min (w'' + w'/r - |r^{-1/2} w''| - |r^{-3/2} w'|) R^{3 eps0}
  double slope_at_bridge_end = 0.0;
  double expected_slope_at_bridge_end = 0.0;  // C1 R^{-2 eps0 + eps0^2}
  double min_vs_slope_times_s = 0.0;          // min over [1/2, 1] of s dv_s/dx
  double argmin_vs_slope = 0.0;
};

BridgeReport bridge_report(const WeightProfile& prof, int samples = 4000);

struct SeamResidual {
  double r = 0.0;
  std::string name;
  double max_jump = 0.0;  // max_k |left^{(k)} - right^{(k)}| / scale_k, k = 0..4
};

std::vector<SeamResidual> seam_residuals(const WeightProfile& prof);

// r^{2+j} d^j (h / f), j = 0..2, for the given s.
std::array<double, 3> h_over_f(const WeightProfile& prof, double r, double s);

struct FHReport {
  double f_continuity = 0.0;     // |log f| and d_r log f mismatch at R
  double min_h_bracket = 0.0;    // min (h / f(R)) r^2 on (4R/3, R / delta2)
  double max_h_bracket = 0.0;    // max (h / f(R)) R^2 on the same range
  double max_box_h = 0.0;        // max (-Delta h) R^4 / f(R) on [R, R / delta2]
  bool f_positive = true;
};

FHReport build_f_h(const WeightProfile& prof, int samples = 4000);

struct RegionMargin {
  std::string name;
  double r_lo = 0.0, r_hi = 0.0;
  double measured = 0.0;  // normalised min (or required constant for envelope regions)
  double margin = 0.0;    // > 0 means the bound holds
};

struct BulkCoefficient {
  std::vector<double> r;
  std::vector<double> value;           // r^4 A / f
  std::vector<double> a3, a2, a1, a0;  // coefficients of s^3..s^0 in r^4 A / f
  double s4_residual = 0.0;         // max |s^4 coefficient| / |s^3 scale| before removal
  std::vector<RegionMargin> regions;
  bool all_positive() const;
};

// Coefficients of s^0..s^3 in r^4 A / f (the s^4 term cancels analytically).
std::array<double, 4> bulk_poly(const WeightProfile& prof, double r, double* s4 = nullptr);
// Plain double evaluation of r^4 A / f at a given s (only sound for moderate s).
double bulk_direct(const WeightProfile& prof, double r, double s);

BulkCoefficient bulk_coefficient(const WeightProfile& prof, int samples_per_region = 1500);

// Frozen envelope constants for the regions where the bulk coefficient may be
// negative (calibrated on the omega_k = 1 reference parameters).
struct EnvelopeConstants {
  static constexpr double third_away = 8000.0;     // A >= -C R^{-4} (|v_s'| s^3 + s^2 + s) f
  static constexpr double almost_infinity = 25.0; // A >= -C R^{-4} f(R)
  static constexpr double inequality = 1.0;     // Carleman estimate right-hand side
};

// (inf_{r >= r_ergo + 2 delta} w_R - max_{r <= r_ergo + delta} w_R) R^{3 eps0}
double weight_separation(const WeightProfile& prof, double delta, int samples = 4000);

// phi = u(t, r) e^{i m phi}, u = e^{-i omega t} (1 + a t^2) exp(-((r - rc) / sigma)^2)
struct ManufacturedPulse {
  double rc = 4.0, sigma = 0.4;
  double omega = 1.0, growth = 0.2;
  int m = 0;
  double support = 8.0;  // integration window rc +- support sigma
};

struct IdentityReport {
  double h = 0.0;
  double bulk = 0.0, source = 0.0, boundary = 0.0;
  double residual = 0.0;
};

IdentityReport multiplier_identity_residual(const WeightProfile& prof, const ManufacturedPulse& pulse, double tau1,
                                            double tau2, double h);

struct IdentityConvergence {
  std::vector<IdentityReport> levels;
  std::vector<double> orders;
  double observed_order = 0.0;  // from the two finest levels
};

IdentityConvergence identity_convergence(const WeightProfile& prof, const ManufacturedPulse& pulse, double tau1,
                                         double tau2, const std::vector<double>& steps);

// Profile with moderate parameters so that f can be exponentiated (identity tests).
WeightProfile moderate_profile(const SpacetimeModel& model, double s = 0.5);

struct InequalityReport {
  double lhs = 0.0;          // int int (J^N.N + |psi|^2) over {r_ergo + 2 delta1 <= r <= R1}
  double ergo_mass = 0.0;    // same integrand over {r <= r_ergo + delta1}
  double envelope = 0.0;     // (1 + w^-10) log(2 + tau2)^4 e^{max(w, w^-eps0, -log delta2)} E_log
  double rhs = 0.0;          // delta2 ergo_mass + K envelope
  double ratio = 0.0;
  double required_constant = 0.0;  // smallest K making the inequality hold
  bool holds = false;
};

InequalityReport carleman_inequality_check(const SpacetimeModel& model, const TimeSeriesField& psi_k,
                                           const TimeSeriesField& dt_psi_k, const CarlemanParams& params,
                                           double delta1, double tau1, double tau2, double R1, double E_log);

}  // namespace ergo
