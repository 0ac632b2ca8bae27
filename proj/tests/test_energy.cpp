#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>

#include "ergo/energy.hpp"
#include "ergo/evolution.hpp"
#include "ergo/initial_data.hpp"

using namespace ergo;

namespace {

using Profile = std::function<cd(double)>;

FieldSnapshot make_snapshot(GridPtr g, int m, const Profile& phi, const Profile& dphi_dt, double t = 0.0) {
  FieldSnapshot s;
  s.m = m;
  s.t = t;
  s.grid = g;
  for (double r : g->r) {
    s.phi.push_back(phi(r));
    s.dphi_dt.push_back(dphi_dt(r));
  }
  return s;
}

Profile bump(double rc, double w, cd amp) {
  return [=](double r) {
    const double x = (r - rc) / w;
    return std::fabs(x) < 1.0 ? amp * std::pow(1.0 - x * x, 4) : cd(0.0);
  };
}

CVec4 random_grad(std::mt19937_64& rng) {
  std::normal_distribution<double> G;
  CVec4 v(3);
  for (int a = 0; a < 3; ++a) v(a) = cd(G(rng), G(rng));
  return v;
}

// Q from the defining formula, written out component by component
double q_oracle(const MetricData& md, const CVec4& d, int a, int b) {
  double contr = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) contr += md.g_inv(i, j) * (d(i).real() * d(j).real() + d(i).imag() * d(j).imag());
  const double re = d(a).real() * d(b).real() + d(a).imag() * d(b).imag();
  return re - 0.5 * md.g(a, b) * contr;
}

Vec4 radial_field(const ChartPoint& p) {
  Vec4 X = Vec4::Zero(3);
  X(1) = p.r();
  return X;
}

// psi = u(t, r) e^{i m phi}, u = e^{0.9 i t} exp(-(r - 1.5)^2)
struct Mode {
  int m = 2;
  cd u(double t, double r) const { return std::exp(cd(0.0, 0.9 * t)) * std::exp(-(r - 1.5) * (r - 1.5)); }
  CVec4 grad(double t, double r, double ph) const {
    const cd e = std::exp(cd(0.0, m * ph));
    CVec4 d(3);
    d(0) = cd(0.0, 0.9) * u(t, r) * e;
    d(1) = -2.0 * (r - 1.5) * u(t, r) * e;
    d(2) = cd(0.0, m) * u(t, r) * e;
    return d;
  }
  cd box(const SpacetimeModel& M, double t, double r) const {
    const auto c = wave_operator_coefficients(M, m, r);
    const cd v = u(t, r), vr = -2.0 * (r - 1.5) * v;
    const double x = r - 1.5;
    return c.a_tt * (-0.81 * v) + c.a_tr * (cd(0.0, 0.9) * vr) + c.a_rr * ((4.0 * x * x - 2.0) * v) +
           c.a_t * (cd(0.0, 0.9) * v) + c.a_r * vr + c.a_0 * v;
  }
};

}  // namespace

TEST_CASE("null plane wave") {
  const auto F = make_minkowski(0.0, 10.0);
  const MetricData md = metric_at(F, point2(0.0, 2.0, 0.0));
  // psi = e^{i(t - r)} along phi = 0, where r plays the role of x
  CVec4 d(3);
  d << cd(0.0, 1.0), cd(0.0, -1.0), 0.0;
  const Mat4 Q = q_tensor(md, d);
  CHECK(Q(0, 0) == doctest::Approx(1.0));
  CHECK(Q(0, 1) == doctest::Approx(-1.0));
  CHECK(Q(1, 1) == doctest::Approx(1.0));
  CHECK(std::fabs(Q(2, 2)) < 1e-15);
  CHECK(q_tensor(md, CVec4::Zero(3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Q against an independent evaluation, trace relation and dominant energy") {
  const auto V = make_vortex(1.0, 0.3, InnerBC::Dirichlet, 10.0);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> U(0.31, 9.0);
  for (int n = 0; n < 300; ++n) {
    const ChartPoint p = point2(0.0, U(rng), 1.1);
    const MetricData md = metric_at(V, p);
    const CVec4 d = random_grad(rng);
    const Mat4 Q = q_tensor(md, d);
    double scale = d.squaredNorm();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) REQUIRE(std::fabs(Q(a, b) - q_oracle(md, d, a, b)) < 1e-12 * scale * 10);
    REQUIRE(Q.isApprox(Q.transpose(), 0.0));
    // trace: (1 - 3/2) g^{ab} d_a psi d_b psi*
    double contr = 0.0, trace = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) {
        contr += md.g_inv(a, b) * std::real(d(a) * std::conj(d(b)));
        trace += md.g_inv(a, b) * Q(a, b);
      }
    REQUIRE(std::fabs(trace + 0.5 * contr) < 1e-12 * scale * 10);
    // J^N . n with n the future unit normal
    Vec4 nvec(3);
    for (int a = 0; a < 3; ++a) nvec(a) = -md.g_inv(a, 0) / std::sqrt(-md.g_inv(0, 0));
    REQUIRE(current_J(Q, field_N(V)(p)).dot(nvec) > 0.0);
  }
}

TEST_CASE("K^T vanishes and the radial virial current matches the flat oracle") {
  const auto V = make_vortex(1.0, 0.3, InnerBC::Dirichlet, 10.0);
  const auto F = make_minkowski(0.0, 10.0);
  std::mt19937_64 rng(3);
  for (int n = 0; n < 50; ++n) {
    const CVec4 d = random_grad(rng);
    CHECK(std::fabs(current_K(V, point2(0.3, 0.5 + 0.1 * n, 0.0), d, field_T(V))) < 1e-10);
  }
  CVec4 d(3);
  d << cd(0.0, 1.0), cd(0.0, -1.0), 0.0;
  CHECK(current_K(F, point2(0.0, 2.0, 0.0), d, radial_field) == doctest::Approx(1.0).epsilon(1e-8));
  // general gradient: grad X = diag(1, 1) on (r, phi), so K = Q_rr + Q_phiphi / r^2
  for (int n = 0; n < 20; ++n) {
    const double r = 0.5 + 0.3 * n;
    const CVec4 g = random_grad(rng);
    const MetricData md = metric_at(F, point2(0.0, r, 0.0));
    const double oracle = q_oracle(md, g, 1, 1) + q_oracle(md, g, 2, 2) / (r * r);
    CHECK(current_K(F, point2(0.0, r, 0.0), g, radial_field) == doctest::Approx(oracle).epsilon(1e-7));
  }
}

TEST_CASE("divergence identity for the currents") {
  const auto V = make_vortex(1.0, 0.3, InnerBC::Dirichlet, 10.0);
  const Mode f;
  const std::vector<std::pair<std::string, VectorField>> fields = {
      {"T", field_T(V)}, {"N", field_N(V)}, {"r d_r", radial_field}};
  for (const auto& [name, X] : fields) {
    CAPTURE(name);
    for (double r : {0.8, 1.4, 2.3}) {
      auto flux = [&](int mu, double t, double rr, double ph) {
        const ChartPoint p = point2(t, rr, ph);
        const MetricData md = metric_at(V, p);
        const Vec4 J = current_J(q_tensor(md, f.grad(t, rr, ph)), X(p));
        double acc = 0.0;
        for (int nu = 0; nu < 3; ++nu) acc += md.g_inv(mu, nu) * J(nu);
        return md.sqrt_abs_det * acc;
      };
      auto divergence = [&](double h) {
        double d = (flux(0, 0.2 + h, r, 0.0) - flux(0, 0.2 - h, r, 0.0)) / (2.0 * h);
        d += (flux(1, 0.2, r + h, 0.0) - flux(1, 0.2, r - h, 0.0)) / (2.0 * h);
        d += (flux(2, 0.2, r, h) - flux(2, 0.2, r, -h)) / (2.0 * h);
        return d / metric_at(V, point2(0.2, r, 0.0)).sqrt_abs_det;
      };
      const ChartPoint p = point2(0.2, r, 0.0);
      const CVec4 g = f.grad(0.2, r, 0.0);
      const Vec4 Xp = X(p);
      cd Xpsi = 0.0;
      for (int a = 0; a < 3; ++a) Xpsi += Xp(a) * std::conj(g(a));
      const double rhs = current_K(V, p, g, X) + std::real(f.box(V, 0.2, r) * Xpsi);
      const double e1 = std::fabs(divergence(1e-2) - rhs), e2 = std::fabs(divergence(5e-3) - rhs);
      const double e3 = std::fabs(divergence(2.5e-3) - rhs);
      CHECK(e3 < 1e-4 * std::max(1.0, std::fabs(rhs)));
      CHECK(e2 < 0.3 * e1 + 1e-9);
      CHECK(e3 < 0.3 * e2 + 1e-9);
    }
  }
}

TEST_CASE("slice flux and staggered energy of zero data") {
  const auto V = make_vortex(1.0, 0.3, InnerBC::Dirichlet, 10.0);
  auto g = RadialGrid::uniform(0.3, 10.0, 256);
  const auto zero = make_snapshot(g, 2, [](double) { return cd(0.0); }, [](double) { return cd(0.0); });
  CHECK(slice_flux(V, {zero}, field_T(V), Region::all()) == 0.0);
  CHECK(weighted_energy_log(V, {zero}) == 0.0);
  CHECK(killing_residual(V, {zero}) == 0.0);
  const auto e = energy_report(V, {zero}, 0.0);
  CHECK(e.E_T_total == 0.0);
  CHECK(e.E_N_total == 0.0);
}

TEST_CASE("staggered energies converge to the slice flux at second order") {
  const auto V = make_vortex(1.0, 0.3, InnerBC::Dirichlet, 6.0);
  std::vector<double> dT, dN;
  for (int N : {400, 800, 1600}) {
    auto g = RadialGrid::uniform(0.3, 6.0, N);
    const auto s = make_snapshot(g, 2, bump(1.5, 0.8, cd(1.0, 0.5)), bump(1.7, 0.7, cd(-0.4, 2.0)));
    const double fT = slice_flux(V, {s}, field_T(V), Region::all());
    const double fN = slice_flux(V, {s}, field_N(V), Region::all());
    const auto st = staggered_energy(V, s, Region::all());
    dT.push_back(std::fabs(st.E_T - fT) / std::fabs(fT));
    dN.push_back(std::fabs(st.E_N - fN) / std::fabs(fN));
    CHECK(t_inner_product(V, s, s) == doctest::Approx(st.E_T).epsilon(1e-12));
    CHECK(st.E_N > 0.0);
  }
  CHECK(dT[2] < 1e-4);
  CHECK(dN[2] < 1e-4);
  CHECK(std::log2(dT[1] / dT[2]) == doctest::Approx(2.0).epsilon(0.15));
  CHECK(std::log2(dN[1] / dN[2]) == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("log-weighted energy") {
  const auto V = make_vortex(1.0, 0.3, InnerBC::Dirichlet, 8.0);
  auto g = RadialGrid::uniform(0.3, 8.0, 2000);
  // support inside [1, 3]
  const auto s = make_snapshot(g, 1, bump(2.0, 1.0, cd(0.7, -0.2)), bump(2.0, 0.9, cd(0.3, 1.0)));
  const double EN = staggered_energy(V, s, Region::all()).E_N;
  const double EL = weighted_energy_log(V, {s});
  const double lo = 1.0 + std::pow(std::log(3.0), 3), hi = 1.0 + std::pow(std::log(5.0), 3);
  CHECK(EL / EN >= lo);
  CHECK(EL / EN <= hi);

  // brute-force reweighted quadrature of J^N n with centred differences
  const auto ur = s.dphi_dr();
  const auto N = field_N(V);
  double acc = 0.0;
  for (int i = 0; i <= g->N; ++i) {
    const double r = g->r[i];
    const ChartPoint p = point2(0.0, r, 0.0);
    const MetricData md = metric_at(V, p);
    const Mat4 Q = q_tensor(md, mode_gradient(s.phi[i], s.dphi_dt[i], ur[i], s.m));
    Vec4 nvec(3);
    for (int a = 0; a < 3; ++a) nvec(a) = -md.g_inv(a, 0) / std::sqrt(-md.g_inv(0, 0));
    const double w = (i == 0 || i == g->N) ? 0.5 * g->h : g->h;
    acc += w * r * current_J(Q, N(p)).dot(nvec) * (1.0 + std::pow(std::log(2.0 + r), 3));
  }
  CHECK(EL == doctest::Approx(2.0 * M_PI * acc).epsilon(1e-4));
}

TEST_CASE("T inner product") {
  const auto V = make_vortex(1.0, 0.3, InnerBC::Dirichlet, 6.0);
  auto g = RadialGrid::uniform(0.3, 6.0, 600);
  const auto a = make_snapshot(g, 2, bump(1.5, 0.8, cd(1.0, 0.5)), bump(1.2, 0.5, cd(0.0, 1.0)));
  const auto b = make_snapshot(g, 2, bump(2.5, 1.0, cd(-0.3, 0.5)), bump(2.0, 0.7, cd(1.0, 0.2)));
  const auto z = make_snapshot(g, 2, [](double) { return cd(0.0); }, [](double) { return cd(0.0); });
  CHECK(t_inner_product(V, a, b) == doctest::Approx(t_inner_product(V, b, a)).epsilon(1e-13));
  CHECK(t_inner_product(V, a, z) == 0.0);
  // polarisation of the quadratic form
  auto sum = a;
  for (size_t i = 0; i < sum.phi.size(); ++i) {
    sum.phi[i] += b.phi[i];
    sum.dphi_dt[i] += b.dphi_dt[i];
  }
  const double pol = 0.5 * (t_inner_product(V, sum, sum) - t_inner_product(V, a, a) - t_inner_product(V, b, b));
  CHECK(pol == doctest::Approx(t_inner_product(V, a, b)).epsilon(1e-10));
  auto other = RadialGrid::uniform(0.3, 6.0, 300);
  const auto c = make_snapshot(other, 2, bump(1.5, 0.8, 1.0), bump(1.5, 0.8, 1.0));
  CHECK_THROWS_AS(t_inner_product(V, a, c), std::invalid_argument);
}

TEST_CASE("T inner product of two evolved solutions is conserved") {
  RunConfig cfg;
  cfg.model = make_vortex(1.0, 0.3, InnerBC::Dirichlet, 6.0);
  cfg.N = 600;
  cfg.outer = OuterBC::Reflecting;
  cfg.T_final = 8.0;
  auto g = cfg.grid();
  auto s1 = make_snapshot(g, 2, bump(1.5, 0.8, cd(1.0, 0.5)), bump(1.2, 0.5, cd(0.0, 1.0)));
  auto s2 = make_snapshot(g, 2, bump(2.5, 1.0, cd(-0.3, 0.5)), bump(2.0, 0.7, cd(1.0, 0.2)));
  const double dt = cfl_dt(cfg);
  ModeSolver a(cfg.model, g, 2, cfg.outer, dt), b(cfg.model, g, 2, cfg.outer, dt);
  a.set_state(s1.phi, s1.dphi_dt);
  b.set_state(s2.phi, s2.dphi_dt);
  const double before = t_inner_product(cfg.model, a.snapshot(), b.snapshot());
  while (a.time() < cfg.T_final) {
    a.step();
    b.step();
  }
  const double after = t_inner_product(cfg.model, a.snapshot(), b.snapshot());
  CHECK(std::fabs(after - before) <= 1e-3 * std::fabs(before));
}

TEST_CASE("Killing residual on a smooth snapshot") {
  const auto V = make_vortex(1.0, 0.3, InnerBC::Dirichlet, 6.0);
  auto g = RadialGrid::uniform(0.3, 6.0, 500);
  const auto s = make_snapshot(g, 3, bump(1.5, 0.8, cd(1.0, 0.5)), bump(1.2, 0.5, cd(0.0, 1.0)));
  CHECK(killing_residual(V, {s}) < 1e-10);
}

TEST_CASE("normalised packet data has T-energy -1 by either quadrature") {
  const auto V = make_vortex(1.0, 0.3, InnerBC::Dirichlet, 4.0);
  auto g = RadialGrid::uniform(0.3, 4.0, 32768);
  WavePacketSpec sp;
  sp.l = 10.0;
  const auto data = negative_energy_data(V, g, sp);
  double stag = 0.0;
  for (const auto& s : data.modes) stag += staggered_energy(V, s, Region::all()).E_T;
  CHECK(stag == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(slice_flux(V, data.modes, field_T(V), Region::all()) == doctest::Approx(-1.0).epsilon(1e-3));
}

TEST_CASE("weighted boundedness across dyadic shells") {
  const auto F = make_minkowski(0.0, 40.0);
  auto g = RadialGrid::uniform(0.0, 40.0, 2000);
  const auto s = make_snapshot(g, 0, bump(8.0, 7.5, 1.0), [](double) { return cd(0.0); });
  // static series: the region only shrinks and the weight factor only grows
  std::vector<std::vector<FieldSnapshot>> stat;
  for (int j = 0; j < 5; ++j) {
    auto c = s;
    c.t = j;
    stat.push_back({c});
  }
  for (double a : {0.5, 1.0, 2.0}) {
    CHECK(dyadic_weighted_bound_check(F, stat, a, 2.0, false, 1.0, 1.0).max_ratio <= 1.0);
    CHECK(dyadic_weighted_bound_check(F, {{s}}, a, 2.0, false, 1.0, 1.0).max_ratio <= 1.0 + 1e-15);
    // the logarithmic factor at tau = tau1 is log(2)^{a+1} < 1, so equality sits at its inverse
    CHECK(dyadic_weighted_bound_check(F, stat, a, 2.0, true, 1.0, 1.0).max_ratio ==
          doctest::Approx(std::pow(std::log(2.0), -(a + 1.0))).epsilon(1e-12));
  }

  // a spreading pulse, checked from five dyadic shells
  RunConfig cfg;
  cfg.model = F;
  cfg.model.inner_bc = InnerBC::Regular;
  cfg.modes = {0};
  cfg.N = 2000;
  cfg.T_final = 16.0;
  cfg.output_every = 2.0;
  cfg.keep_snapshots = true;
  const auto series = evolve(cfg, {s}).snapshots;
  for (double R : {0.75, 1.5, 3.0, 6.0, 12.0}) {
    const auto rep = dyadic_weighted_bound_check(F, series, 1.0, R, false, 1.05, 1.0);
    CAPTURE(R);
    CHECK(std::isfinite(rep.max_ratio));
    CHECK_FALSE(rep.flagged);
  }
}
