#include "ergo/energy.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ergo {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
const cd kI(0.0, 1.0);

double log3w(double r) {
  const double l = std::log(2.0 + r);
  return l * l * l;
}
}  // namespace

std::shared_ptr<const RadialGrid> RadialGrid::uniform(double r_min, double r_max, int N) {
  if (N < 2) throw std::invalid_argument("radial grid needs at least 2 intervals");
  if (!(r_max > r_min) || r_min < 0.0) throw std::invalid_argument("bad radial interval");
  auto g = std::make_shared<RadialGrid>();
  g->r_min = r_min;
  g->r_max = r_max;
  g->N = N;
  g->h = (r_max - r_min) / N;
  g->r.resize(N + 1);
  g->W.resize(N + 1);
  g->rh.resize(N);
  for (int i = 0; i <= N; ++i) g->r[i] = r_min + i * g->h;
  g->r[N] = r_max;
  for (int i = 0; i < N; ++i) g->rh[i] = r_min + (i + 0.5) * g->h;
  for (int i = 1; i < N; ++i) g->W[i] = g->r[i] * g->h;
  g->W[0] = 0.5 * g->h * (g->r[0] + 0.25 * g->h);
  g->W[N] = 0.5 * g->h * (g->r[N] - 0.25 * g->h);
  return g;
}

std::vector<cd> FieldSnapshot::dphi_dr() const {
  const int n = static_cast<int>(phi.size());
  const double h = grid->h;
  std::vector<cd> d(n);
  for (int i = 1; i < n - 1; ++i) d[i] = (phi[i + 1] - phi[i - 1]) / (2.0 * h);
  d[0] = (-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * h);
  d[n - 1] = (3.0 * phi[n - 1] - 4.0 * phi[n - 2] + phi[n - 3]) / (2.0 * h);
  return d;
}

void FieldSnapshot::validate(InnerBC bc, double tol) const {
  if (!grid) throw std::invalid_argument("snapshot without grid");
  if (static_cast<int>(phi.size()) != grid->size() || phi.size() != dphi_dt.size())
    throw std::invalid_argument("snapshot array length mismatch");
  if (bc == InnerBC::Dirichlet && std::abs(phi[0]) > tol)
    throw std::invalid_argument("Dirichlet snapshot has nonzero wall value");
  // second-order one-sided difference at the wall
  if (bc == InnerBC::Neumann && std::abs(-3.0 * phi[0] + 4.0 * phi[1] - phi[2]) / (2.0 * grid->h) > tol)
    throw std::invalid_argument("Neumann snapshot has nonzero wall derivative");
}

bool Region::contains(const SpacetimeModel& model, double r) const {
  switch (kind) {
    case Kind::All: return true;
    case Kind::Annulus: return r >= a && r <= b;
    case Kind::Ergoregion: return areal_radius(model, r) <= model.C + a;
  }
  return false;
}

Mat4 q_tensor(const MetricData& metric, const CVec4& grad) {
  const int n = metric.dim;
  cd contr = 0.0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) contr += metric.g_inv(a, b) * grad(a) * std::conj(grad(b));
  Mat4 Q(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) Q(a, b) = std::real(grad(a) * std::conj(grad(b))) - 0.5 * metric.g(a, b) * contr.real();
  // symmetrise against rounding in Re(x y*) vs Re(y x*)
  return 0.5 * (Q + Q.transpose());
}

Vec4 current_J(const Mat4& Q, const Vec4& X) { return Q * X; }

double current_K(const SpacetimeModel& model, const ChartPoint& p, const CVec4& grad, const VectorField& X,
                 double step) {
  const MetricData md = metric_at(model, p);
  const int n = md.dim;
  const Mat4 Q = q_tensor(md, grad);
  const Mat4 Qup = md.g_inv * Q * md.g_inv;
  const Vec4 X0 = X(p);
  // dX(a, alpha) = d_a X^alpha
  Mat4 dX = Mat4::Zero(n, n);
  std::vector<Mat4> dg(n);
  for (int a = 0; a < n; ++a) {
    dg[a] = metric_derivative(model, p, a, step);
    ChartPoint pp = p, pm = p;
    pp.x[a] += step;
    pm.x[a] -= step;
    const Vec4 d = (X(pp) - X(pm)) / (2.0 * step);
    for (int al = 0; al < n; ++al) dX(a, al) = d(al);
  }
  double K = 0.0;
  for (int mu = 0; mu < n; ++mu)
    for (int nu = 0; nu < n; ++nu) {
      double L = 0.0;
      for (int al = 0; al < n; ++al) {
        L += X0(al) * dg[al](mu, nu);
        L += md.g(al, nu) * dX(mu, al) + md.g(mu, al) * dX(nu, al);
      }
      K += 0.5 * Qup(mu, nu) * L;
    }
  return K;
}

VectorField field_T(const SpacetimeModel& model) {
  const int n = model.dim();
  return [n](const ChartPoint&) {
    Vec4 v = Vec4::Zero(n);
    v(0) = 1.0;
    return v;
  };
}

VectorField field_N(const SpacetimeModel& model) {
  return [model](const ChartPoint& p) { return frame_at(model, p).N; };
}

CVec4 mode_gradient(cd u, cd u_t, cd u_r, int m) {
  CVec4 g(3);
  g << u_t, u_r, kI * double(m) * u;
  return g;
}

double slice_flux(const SpacetimeModel& model, const std::vector<FieldSnapshot>& modes, const VectorField& X,
                  const Region& region) {
  if (!model.two_plus_one()) throw UnsupportedError("slice_flux works on 2+1 families");
  double total = 0.0;
  for (const auto& s : modes) {
    const auto& gr = *s.grid;
    const auto ur = s.dphi_dr();
    double acc = 0.0;
    for (int i = 0; i <= gr.N; ++i) {
      const double r = gr.r[i];
      if (!region.contains(model, r)) continue;
      if (r == 0.0) continue;  // regular origin carries zero area weight in the continuum density
      const ChartPoint p = point2(s.t, r, 0.0);
      const MetricData md = metric_at(model, p);
      const Mat4 Q = q_tensor(md, mode_gradient(s.phi[i], s.dphi_dt[i], ur[i], s.m));
      // unit normal n^mu = -g^{mu t} / sqrt(-g^{tt})
      Vec4 nvec(md.dim);
      const double lapse_inv = 1.0 / std::sqrt(-md.g_inv(0, 0));
      for (int a = 0; a < md.dim; ++a) nvec(a) = -md.g_inv(a, 0) * lapse_inv;
      const double dens = current_J(Q, X(p)).dot(nvec);
      // induced volume sqrt(det g_Sigma) dr dphi
      const double vol = std::sqrt(md.g(1, 1) * md.g(2, 2) - md.g(1, 2) * md.g(1, 2));
      double wq = gr.h;
      if (i == 0 || i == gr.N) wq *= 0.5;
      acc += wq * vol * dens;
    }
    total += kTwoPi * acc;
  }
  return total;
}

StaggeredEnergy staggered_energy(const SpacetimeModel& model, const FieldSnapshot& s, const Region& region) {
  const auto& gr = *s.grid;
  const double m2 = double(s.m) * double(s.m);
  StaggeredEnergy e;
  std::vector<char> in(gr.size());
  for (int i = 0; i <= gr.N; ++i) in[i] = region.contains(model, gr.r[i]) ? 1 : 0;
  double eT = 0.0, eN = 0.0, eL = 0.0;
  for (int i = 0; i <= gr.N; ++i) {
    if (!in[i]) continue;
    const double r = gr.r[i];
    const cd beta = kI * double(s.m) * frame_dragging(model, r);
    const cd pi = s.dphi_dt[i] + beta * s.phi[i];
    const double ang = (r > 0.0) ? 0.5 * m2 * std::norm(s.phi[i]) / (r * r) : 0.0;
    const double node_N = 0.5 * std::norm(pi) + ang;
    const double node_T = node_N - std::real(beta * s.phi[i] * std::conj(pi));
    eN += gr.W[i] * node_N;
    eT += gr.W[i] * node_T;
    eL += gr.W[i] * node_N * log3w(r);
  }
  for (int i = 0; i < gr.N; ++i) {
    if (!(in[i] && in[i + 1])) continue;
    const double edge = 0.5 * gr.h * gr.rh[i] * std::norm((s.phi[i + 1] - s.phi[i]) / gr.h);
    eN += edge;
    eT += edge;
    eL += edge * log3w(gr.rh[i]);
  }
  e.E_T = kTwoPi * eT;
  e.E_N = kTwoPi * eN;
  e.E_log = kTwoPi * (eN + eL);
  return e;
}

EnergyReport energy_report(const SpacetimeModel& model, const std::vector<FieldSnapshot>& modes, double ergo_margin) {
  EnergyReport rep;
  if (!modes.empty()) rep.t = modes.front().t;
  for (const auto& s : modes) {
    const auto all = staggered_energy(model, s, Region::all());
    const auto ergo = staggered_energy(model, s, Region::ergoregion(ergo_margin));
    rep.E_T_total += all.E_T;
    rep.E_N_total += all.E_N;
    rep.E_log += all.E_log;
    rep.E_T_ergo += ergo.E_T;
  }
  return rep;
}

double weighted_energy_log(const SpacetimeModel& model, const std::vector<FieldSnapshot>& modes) {
  double acc = 0.0;
  for (const auto& s : modes) acc += staggered_energy(model, s, Region::all()).E_log;
  return acc;
}

double t_inner_product(const SpacetimeModel& model, const FieldSnapshot& a, const FieldSnapshot& b) {
  if (a.grid != b.grid && (a.grid->N != b.grid->N || a.grid->r_min != b.grid->r_min || a.grid->r_max != b.grid->r_max))
    throw std::invalid_argument("t_inner_product: grid mismatch");
  if (a.m != b.m) return 0.0;  // distinct modes are orthogonal after the angular integral
  const auto& gr = *a.grid;
  const double m2 = double(a.m) * double(a.m);
  double acc = 0.0;
  for (int i = 0; i <= gr.N; ++i) {
    const double r = gr.r[i];
    const cd beta = kI * double(a.m) * frame_dragging(model, r);
    const cd pa = a.dphi_dt[i] + beta * a.phi[i];
    const cd pb = b.dphi_dt[i] + beta * b.phi[i];
    double v = 0.5 * std::real(pa * std::conj(pb));
    if (r > 0.0) v += 0.5 * m2 * std::real(a.phi[i] * std::conj(b.phi[i])) / (r * r);
    v -= 0.5 * std::real(beta * a.phi[i] * std::conj(pb) + beta * b.phi[i] * std::conj(pa));
    acc += gr.W[i] * v;
  }
  for (int i = 0; i < gr.N; ++i) {
    const cd da = (a.phi[i + 1] - a.phi[i]) / gr.h;
    const cd db = (b.phi[i + 1] - b.phi[i]) / gr.h;
    acc += 0.5 * gr.h * gr.rh[i] * std::real(da * std::conj(db));
  }
  return kTwoPi * acc;
}

double killing_residual(const SpacetimeModel& model, const std::vector<FieldSnapshot>& modes) {
  const auto T = field_T(model);
  double acc = 0.0;
  for (const auto& s : modes) {
    const auto ur = s.dphi_dr();
    const auto& gr = *s.grid;
    for (int i = 0; i <= gr.N; ++i) {
      if (gr.r[i] == 0.0) continue;
      const double K = current_K(model, point2(s.t, gr.r[i], 0.0), mode_gradient(s.phi[i], s.dphi_dt[i], ur[i], s.m), T);
      acc += gr.W[i] * std::fabs(K);
    }
  }
  return kTwoPi * acc;
}

DyadicReport dyadic_weighted_bound_check(const SpacetimeModel& model,
                                         const std::vector<std::vector<FieldSnapshot>>& series, double a, double R,
                                         bool logarithmic, double C_a, double speed) {
  if (series.empty()) throw std::invalid_argument("empty series");
  auto weighted = [&](const std::vector<FieldSnapshot>& modes, double r_lo) {
    double acc = 0.0;
    for (const auto& s : modes) {
      const auto& gr = *s.grid;
      // T-energy density per node with the staggered gradient split evenly to neighbours
      const double m2 = double(s.m) * double(s.m);
      for (int i = 0; i <= gr.N; ++i) {
        const double r = gr.r[i];
        if (r < r_lo) continue;
        const cd beta = kI * double(s.m) * frame_dragging(model, r);
        const cd pi = s.dphi_dt[i] + beta * s.phi[i];
        double e = 0.5 * std::norm(pi) - std::real(beta * s.phi[i] * std::conj(pi));
        if (r > 0.0) e += 0.5 * m2 * std::norm(s.phi[i]) / (r * r);
        double grad = 0.0;
        if (i > 0) grad += 0.25 * std::norm((s.phi[i] - s.phi[i - 1]) / gr.h);
        if (i < gr.N) grad += 0.25 * std::norm((s.phi[i + 1] - s.phi[i]) / gr.h);
        const double w = logarithmic ? std::pow(std::log(r), a) : std::pow(r, a);
        acc += gr.W[i] * (e + grad) * w;
      }
    }
    return kTwoPi * acc;
  };
  DyadicReport rep;
  const double t1 = series.front().front().t;
  const double base = weighted(series.front(), R);
  for (const auto& snap : series) {
    const double dt = std::fabs(snap.front().t - t1);
    const double lhs = weighted(snap, R + speed * dt);
    const double F = logarithmic ? std::pow(std::log(2.0 + dt), a + 1.0) : std::pow(1.0 + dt, a);
    const double ratio = base > 0.0 ? lhs / (F * base) : (lhs > 0.0 ? INFINITY : 0.0);
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.worst_time = snap.front().t;
    }
  }
  const double rmax = series.front().front().grid->r_max;
  for (double lo = R; lo * 2.0 <= rmax; lo *= 2.0) ++rep.shells;
  rep.flagged = rep.max_ratio > C_a;
  return rep;
}

}  // namespace ergo
