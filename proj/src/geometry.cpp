#include "ergo/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "ergo/cutoff.hpp"

namespace ergo {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::HydroVortex: return "HydroVortex";
    case ModelKind::HydroVortexDoubled: return "HydroVortexDoubled";
    case ModelKind::BumpErgoregion3D: return "BumpErgoregion3D";
    case ModelKind::AlmostSchwarzschild3D: return "AlmostSchwarzschild3D";
    case ModelKind::Minkowski: return "Minkowski";
  }
  return "?";
}

std::string to_string(InnerBC b) {
  switch (b) {
    case InnerBC::Dirichlet: return "dirichlet";
    case InnerBC::Neumann: return "neumann";
    case InnerBC::Doubled: return "doubled";
    case InnerBC::Regular: return "regular";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
  for (auto k : {ModelKind::HydroVortex, ModelKind::HydroVortexDoubled, ModelKind::BumpErgoregion3D,
                 ModelKind::AlmostSchwarzschild3D, ModelKind::Minkowski})
    if (to_string(k) == s) return k;
  throw std::invalid_argument("unknown model kind '" + s + "'");
}

InnerBC inner_bc_from_string(const std::string& s) {
  for (auto b : {InnerBC::Dirichlet, InnerBC::Neumann, InnerBC::Doubled, InnerBC::Regular})
    if (to_string(b) == s) return b;
  throw std::invalid_argument("unknown inner boundary condition '" + s + "'");
}

int SpacetimeModel::dim() const { return two_plus_one() ? 3 : 4; }

bool SpacetimeModel::two_plus_one() const {
  return kind == ModelKind::HydroVortex || kind == ModelKind::HydroVortexDoubled || kind == ModelKind::Minkowski;
}

void SpacetimeModel::validate() const {
  if (kind == ModelKind::HydroVortex || kind == ModelKind::HydroVortexDoubled) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    if (!(C > delta)) throw std::invalid_argument("circulation C must exceed delta");
  }
  if (kind == ModelKind::AlmostSchwarzschild3D && !(M > 0.0)) throw std::invalid_argument("M must be positive");
  if (!(r_max > r_min)) throw std::invalid_argument("r_max must exceed r_min");
  if (kind == ModelKind::HydroVortex && r_min < delta) throw std::invalid_argument("r_min below the vortex wall");
  if (kind == ModelKind::Minkowski && r_min < 0.0) throw std::invalid_argument("r_min must be >= 0");
}

SpacetimeModel make_vortex(double C, double delta, InnerBC bc, double r_max) {
  SpacetimeModel m;
  m.kind = ModelKind::HydroVortex;
  m.C = C;
  m.delta = delta;
  m.inner_bc = bc;
  m.r_min = delta;
  m.r_max = r_max;
  m.validate();
  return m;
}

SpacetimeModel make_doubled_vortex(double C, double delta, double r_max) {
  SpacetimeModel m;
  m.kind = ModelKind::HydroVortexDoubled;
  m.C = C;
  m.delta = delta;
  m.inner_bc = InnerBC::Doubled;
  m.r_min = 2.0 * delta - r_max;
  m.r_max = r_max;
  m.validate();
  return m;
}

SpacetimeModel make_minkowski(double r_min, double r_max) {
  SpacetimeModel m;
  m.kind = ModelKind::Minkowski;
  m.C = 0.0;
  m.delta = 0.0;
  m.inner_bc = r_min == 0.0 ? InnerBC::Regular : InnerBC::Dirichlet;
  m.r_min = r_min;
  m.r_max = r_max;
  m.validate();
  return m;
}

SpacetimeModel make_bump_flat(double amplitude, double r_max) {
  SpacetimeModel m;
  m.kind = ModelKind::BumpErgoregion3D;
  m.C = 0.0;
  m.delta = 0.0;
  m.bump_amplitude = amplitude;
  m.inner_bc = InnerBC::Regular;
  m.r_min = 0.0;
  m.r_max = r_max;
  m.validate();
  return m;
}

SpacetimeModel make_almost_schwarzschild(double M, double r_max) {
  SpacetimeModel m;
  m.kind = ModelKind::AlmostSchwarzschild3D;
  m.M = M;
  m.C = 0.0;
  m.delta = 0.0;
  m.inner_bc = InnerBC::Regular;
  m.r_min = 2.0 * M;
  m.r_max = r_max;
  m.validate();
  return m;
}

ChartPoint point2(double t, double r, double phi) { return ChartPoint{{t, r, phi, 0.0}}; }
ChartPoint point3(double t, double r, double th, double phi) { return ChartPoint{{t, r, th, phi}}; }

double areal_radius(const SpacetimeModel& model, double r) {
  if (model.kind == ModelKind::HydroVortexDoubled) return std::fabs(r - model.delta) + model.delta;
  return r;
}

Mat4 metric_components(const SpacetimeModel& model, const ChartPoint& p) {
  const int n = model.dim();
  Mat4 g = Mat4::Zero(n, n);
  const double r = p.x[1];
  switch (model.kind) {
    case ModelKind::HydroVortex:
    case ModelKind::HydroVortexDoubled: {
      const double rho = areal_radius(model, r);
      const double C = model.C;
      g(0, 0) = -(1.0 - C * C / (rho * rho));
      g(0, 2) = g(2, 0) = -C;
      g(1, 1) = 1.0;
      g(2, 2) = rho * rho;
      break;
    }
    case ModelKind::Minkowski:
      g(0, 0) = -1.0;
      g(1, 1) = 1.0;
      g(2, 2) = r * r;
      break;
    case ModelKind::BumpErgoregion3D: {
      const double th = p.x[2];
      const double b = theta_rbar(r) * theta_vartheta(th);
      const double s = std::sin(th);
      g(0, 0) = -(1.0 - model.bump_amplitude * b * b);
      g(0, 3) = g(3, 0) = -500.0 * b;
      g(1, 1) = 1.0;
      g(2, 2) = r * r;
      g(3, 3) = r * r * s * s;
      break;
    }
    case ModelKind::AlmostSchwarzschild3D: {
      const double th = p.x[2];
      const double M = model.M;
      const double b = theta_rbar(r / M) * theta_vartheta(th);
      const double s = std::sin(th);
      const double f = 1.0 - 2.0 * M / r;
      g(0, 0) = -(f - b * b);
      g(0, 3) = g(3, 0) = -500.0 * M * b;
      g(1, 1) = 1.0 / f;
      g(2, 2) = r * r;
      g(3, 3) = r * r * s * s;
      break;
    }
  }
  return g;
}

namespace {

void check_chart(const SpacetimeModel& model, const ChartPoint& p) {
  const double r = p.x[1];
  for (int a = 0; a < model.dim(); ++a)
    if (!std::isfinite(p.x[a])) throw DomainError("non-finite chart coordinate");
  if (r < model.r_min || r > model.r_max)
    throw DomainError("radius " + std::to_string(r) + " outside chart [" + std::to_string(model.r_min) + ", " +
                      std::to_string(model.r_max) + "]");
  if (model.kind == ModelKind::AlmostSchwarzschild3D && r <= 2.0 * model.M)
    throw DomainError("radius inside the Schwarzschild horizon");
  if (!model.two_plus_one()) {
    const double th = p.x[2];
    if (th <= 0.0 || th >= kPi) throw DomainError("polar angle outside (0, pi)");
  }
}

}  // namespace

MetricData metric_at(const SpacetimeModel& model, const ChartPoint& p) {
  check_chart(model, p);
  MetricData d;
  d.dim = model.dim();
  d.g = metric_components(model, p);
  d.det = d.g.determinant();
  if (std::fabs(d.det) < 1e-14) throw SignatureError("degenerate metric determinant");
  d.g_inv = d.g.inverse();
  d.sqrt_abs_det = std::sqrt(std::fabs(d.det));
  d.gTT = d.g(0, 0);
  Eigen::SelfAdjointEigenSolver<Mat4> es(d.g, Eigen::EigenvaluesOnly);
  int neg = 0;
  for (int i = 0; i < d.dim; ++i) neg += es.eigenvalues()(i) < 0.0 ? 1 : 0;
  if (neg != 1) throw SignatureError("metric is not Lorentzian");
  d.g_ref = Mat4::Zero(d.dim, d.dim);
  d.g_ref(0, 0) = 1.0;
  d.g_ref.bottomRightCorner(d.dim - 1, d.dim - 1) = d.g.bottomRightCorner(d.dim - 1, d.dim - 1);
  return d;
}

Mat4 metric_derivative(const SpacetimeModel& model, const ChartPoint& p, int a, double step) {
  if (a == 0 || (a == model.dim() - 1)) return Mat4::Zero(model.dim(), model.dim());  // stationary, axisymmetric
  ChartPoint pp = p, pm = p;
  pp.x[a] += step;
  pm.x[a] -= step;
  return (metric_components(model, pp) - metric_components(model, pm)) / (2.0 * step);
}

double ergoregion_indicator(const SpacetimeModel& model, const ChartPoint& p) {
  return metric_at(model, p).gTT;
}

FrameFields frame_at(const SpacetimeModel& model, const ChartPoint& p) {
  const MetricData md = metric_at(model, p);
  const int n = md.dim;
  const int phi = n - 1;
  FrameFields f;
  f.T = Vec4::Zero(n);
  f.T(0) = 1.0;
  f.Phi = Vec4::Zero(n);
  f.Phi(phi) = 1.0;
  f.N = f.T;
  f.N(phi) = -md.g(0, phi) / md.g(phi, phi);
  return f;
}

ObserverCertificate timelike_observer_N(const SpacetimeModel& model, int samples) {
  ObserverCertificate c;
  c.max_gNN = -std::numeric_limits<double>::infinity();
  const bool vortex = model.kind == ModelKind::HydroVortex || model.kind == ModelKind::HydroVortexDoubled;
  const int n_th = model.two_plus_one() ? 1 : 64;
  for (int i = 0; i < samples; ++i) {
    const double r = model.r_min + (model.r_max - model.r_min) * (i + 0.5) / samples;
    for (int j = 0; j < n_th; ++j) {
      const ChartPoint p = model.two_plus_one() ? point2(0.0, r, 0.0) : point3(0.0, r, kPi * (j + 0.5) / n_th, 0.0);
      const MetricData md = metric_at(model, p);
      const Vec4 N = frame_at(model, p).N;
      const double gNN = N.dot(md.g * N);
      if (gNN > c.max_gNN) {
        c.max_gNN = gNN;
        c.max_gNN_radius = r;
      }
      if (vortex) c.max_dev_from_unit = std::max(c.max_dev_from_unit, std::fabs(gNN + 1.0));
      ++c.samples;
    }
  }
  if (c.max_gNN >= 0.0)
    throw ConstructionError("N fails to be timelike near r = " + std::to_string(c.max_gNN_radius));
  return c;
}

ModeCoefficients wave_operator_coefficients(const SpacetimeModel& model, int m, double r) {
  if (!model.two_plus_one())
    throw UnsupportedError("per-mode radial reduction needs a 2+1 axisymmetric model");
  const MetricData md = metric_at(model, point2(0.0, r, 0.0));
  const double rho = areal_radius(model, r);
  double drho = 1.0;
  if (model.kind == ModelKind::HydroVortexDoubled) drho = r >= model.delta ? 1.0 : -1.0;
  const cd I(0.0, 1.0);
  ModeCoefficients c;
  c.a_tt = md.g_inv(0, 0);
  c.a_tr = 2.0 * md.g_inv(0, 1);
  c.a_rr = md.g_inv(1, 1);
  c.a_t = 2.0 * I * double(m) * md.g_inv(0, 2);
  // sqrt|g| = rho and g^rr = 1 for every 2+1 family here
  c.a_r = drho / rho;
  c.a_0 = -double(m) * double(m) * md.g_inv(2, 2);
  return c;
}

double frame_dragging(const SpacetimeModel& model, double r) {
  if (model.kind == ModelKind::Minkowski) return 0.0;
  if (!model.two_plus_one()) throw UnsupportedError("frame_dragging is defined for 2+1 families");
  const double rho = areal_radius(model, r);
  return model.C / (rho * rho);
}

double characteristic_speed(const SpacetimeModel& model, double r) {
  const MetricData md = metric_at(model, point2(0.0, r, 0.0));
  const double gtt = md.g_inv(0, 0);
  if (!(gtt < 0.0)) throw ConstructionError("principal part is not hyperbolic at r = " + std::to_string(r));
  const double radial = std::sqrt(md.g_inv(1, 1) / -gtt);
  const double drag = std::fabs(md.g_inv(0, 2) / gtt) * std::sqrt(md.g(2, 2));
  return radial + drag;
}

double locate_ergosurface(const SpacetimeModel& model, double a, double b, double tol) {
  auto f = [&](double r) {
    if (model.two_plus_one()) return ergoregion_indicator(model, point2(0.0, r, 0.0));
    return ergoregion_indicator(model, point3(0.0, r, kPi / 2, 0.0));
  };
  double fa = f(a), fb = f(b);
  if (fa * fb > 0.0) throw DomainError("no sign change of g(T,T) in the bracket");
  for (int it = 0; it < 200 && b - a > tol; ++it) {
    const double c = 0.5 * (a + b);
    const double fc = f(c);
    if (fc == 0.0) return c;
    if ((fa < 0.0) == (fc < 0.0)) {
      a = c;
      fa = fc;
    } else {
      b = c;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace ergo
