// Stationary metric families with an ergoregion, frames and per-mode wave operators.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <complex>
#include <stdexcept>
#include <string>

namespace ergo {

using cd = std::complex<double>;
using Mat4 = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4>;
using Vec4 = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 4, 1>;
using CVec4 = Eigen::Matrix<cd, Eigen::Dynamic, 1, 0, 4, 1>;

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct SignatureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ModelKind { HydroVortex, HydroVortexDoubled, BumpErgoregion3D, AlmostSchwarzschild3D, Minkowski };
enum class InnerBC { Dirichlet, Neumann, Doubled, Regular };

std::string to_string(ModelKind k);
std::string to_string(InnerBC b);
ModelKind model_kind_from_string(const std::string& s);
InnerBC inner_bc_from_string(const std::string& s);

struct SpacetimeModel {
  ModelKind kind = ModelKind::HydroVortex;
  double C = 1.0;      // circulation
  double delta = 0.3;  // inner radius
  double M = 1.0;      // mass (AlmostSchwarzschild3D)
  // g_tt = -(1 - A (theta_r theta_vartheta)^2) in the bump example
  double bump_amplitude = 2.0;
  InnerBC inner_bc = InnerBC::Dirichlet;
  double r_min = 0.3;
  double r_max = 40.0;

  int dim() const;            // spacetime dimension (3 or 4)
  bool two_plus_one() const;  // (t, r, phi) chart
  void validate() const;      // throws std::invalid_argument
  bool operator==(const SpacetimeModel&) const = default;
};

SpacetimeModel make_vortex(double C, double delta, InnerBC bc, double r_max);
SpacetimeModel make_doubled_vortex(double C, double delta, double r_max);
SpacetimeModel make_minkowski(double r_min, double r_max);
SpacetimeModel make_bump_flat(double amplitude = 2.0, double r_max = 20.0);
SpacetimeModel make_almost_schwarzschild(double M, double r_max = 40.0);

// (t, r, phi) or (t, r, vartheta, phi)
struct ChartPoint {
  std::array<double, 4> x{};
  double t() const { return x[0]; }
  double r() const { return x[1]; }
};

ChartPoint point2(double t, double r, double phi);
ChartPoint point3(double t, double r, double th, double phi);

struct MetricData {
  int dim = 3;
  Mat4 g;
  Mat4 g_inv;
  double det = 0.0;
  double sqrt_abs_det = 0.0;
  double gTT = 0.0;
  Mat4 g_ref;  // dt^2 + induced metric on t = const
};

MetricData metric_at(const SpacetimeModel& model, const ChartPoint& p);

// Metric components only, no validation (used by finite-difference helpers).
Mat4 metric_components(const SpacetimeModel& model, const ChartPoint& p);

// Partial derivative of the components along coordinate a (central differences).
Mat4 metric_derivative(const SpacetimeModel& model, const ChartPoint& p, int a, double step = 1e-5);

double ergoregion_indicator(const SpacetimeModel& model, const ChartPoint& p);

struct FrameFields {
  Vec4 T, N, Phi;
};

// Frame at a point. N = d_t - (g_tphi/g_phiphi) d_phi, which is the unit normal
// direction of t = const and equals d_t wherever g_tphi vanishes.
FrameFields frame_at(const SpacetimeModel& model, const ChartPoint& p);

struct ObserverCertificate {
  double max_gNN = 0.0;       // largest g(N,N) on the scan
  double max_dev_from_unit = 0.0;  // max |g(N,N) + 1| (vortex kinds)
  double max_gNN_radius = 0.0;
  int samples = 0;
};

// Scans g(N,N) on a grid; throws ConstructionError if it is ever >= 0.
ObserverCertificate timelike_observer_N(const SpacetimeModel& model, int samples = 4096);

// Per-mode radial coefficients for box_g(u(t,r) e^{i m phi}) =
//   [a_tt u_tt + a_tr u_tr + a_rr u_rr + a_t u_t + a_r u_r + a_0 u] e^{i m phi}.
struct ModeCoefficients {
  cd a_tt, a_tr, a_rr, a_t, a_r, a_0;
};

ModeCoefficients wave_operator_coefficients(const SpacetimeModel& model, int m, double r);

// Angular velocity Omega(r) = -g^{t phi}/g^{tt}, i.e. N = d_t + Omega d_phi (2+1 kinds).
double frame_dragging(const SpacetimeModel& model, double r);

// Characteristic speed bound of the per-mode principal part: radial light speed
// plus the azimuthal dragging speed.
double characteristic_speed(const SpacetimeModel& model, double r);

// Areal radius rho(r) used by the 2+1 families (|r - delta| + delta for the double).
double areal_radius(const SpacetimeModel& model, double r);

// Bisection on g(T,T) = 0 between a and b along the equatorial ray.
double locate_ergosurface(const SpacetimeModel& model, double a, double b, double tol = 1e-14);

}  // namespace ergo
