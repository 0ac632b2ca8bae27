#include "doctest.h"

#include <cmath>
#include <random>

#include "ergo/evolution.hpp"
#include "ergo/frequency.hpp"

using namespace ergo;

namespace {

const cd kI(0.0, 1.0);
const MollifierBank kBank = make_bank(0.5, 8.0);
constexpr double kDt = 0.05;
constexpr int kNt = 16000;
constexpr double kMargin = 150.0;

// a few radial points carrying sum_a c_a e^{i w_a t}
TimeSeriesField tones(const std::vector<double>& w, const std::vector<double>& c = {}) {
  TimeSeriesField f;
  f.dt = kDt;
  f.nt = kNt;
  f.r = {1.0, 1.5, 2.0};
  f.data.assign(static_cast<size_t>(f.nt) * f.r.size(), cd(0.0));
  for (int j = 0; j < f.nt; ++j)
    for (int i = 0; i < f.nr(); ++i)
      for (size_t a = 0; a < w.size(); ++a)
        f.at(j, i) += (c.empty() ? 1.0 : c[a]) * (1.0 + 0.5 * i) * std::exp(kI * w[a] * f.time(j));
  f.cutoff_applied = true;
  return f;
}

// max relative interior difference
double interior_diff(const TimeSeriesField& a, const TimeSeriesField& b) {
  const int j0 = int(kMargin / a.dt), j1 = a.nt - j0;
  double num = 0.0, den = 0.0;
  for (int j = j0; j < j1; ++j)
    for (int i = 0; i < a.nr(); ++i) {
      num = std::max(num, std::abs(a.at(j, i) - b.at(j, i)));
      den = std::max(den, std::abs(b.at(j, i)));
    }
  return den > 0.0 ? num / den : num;
}

double interior_max(const TimeSeriesField& a) {
  const int j0 = int(kMargin / a.dt), j1 = a.nt - j0;
  double m = 0.0;
  for (int j = j0; j < j1; ++j)
    for (int i = 0; i < a.nr(); ++i) m = std::max(m, std::abs(a.at(j, i)));
  return m;
}

}  // namespace

TEST_CASE("bank layout") {
  CHECK(kBank.n == 4);
  REQUIRE(kBank.omega.size() == 5u);
  for (int k = 0; k <= 4; ++k) CHECK(kBank.omega[k] == std::ldexp(0.5, k));
  CHECK(make_bank(0.5, 9.0).n == 5);
  CHECK_THROWS(make_bank(0.0, 8.0));
  CHECK_THROWS(make_bank(2.0, 1.0));
}

TEST_CASE("band symbols sum to the low-pass symbol and stay in their bands") {
  for (int s = -4000; s <= 4000; ++s) {
    const double w = s * 0.01;
    double sum = 0.0;
    for (int k = 0; k <= kBank.n; ++k) {
      const double z = kBank.zeta_hat(k, w);
      sum += z;
      REQUIRE(z >= -1e-15);
      REQUIRE(z <= 1.0 + 1e-15);
      REQUIRE(kBank.zeta_hat(k, -w) == z);
      const double lo = k == 0 ? 0.0 : kBank.omega[k - 1];
      if (std::fabs(w) < lo - 1e-12 || std::fabs(w) > 2.0 * kBank.omega[k] + 1e-12) REQUIRE(z == 0.0);
      if (z != 0.0) REQUIRE(kBank.xi_hat(k, w) * z == doctest::Approx(z).epsilon(1e-14));
      if (k >= 1 && w != 0.0 && z != 0.0)
        REQUIRE(std::abs(kBank.xi_tilde_hat(k, w) * (kI * w) - kBank.xi_hat(k, w)) < 1e-12);
    }
    REQUIRE(std::fabs(sum - kBank.zeta_le_hat(w)) < 1e-12);
  }
  CHECK(kBank.zeta_le_hat(0.0) == 1.0);
  CHECK(kBank.zeta_le_hat(2.0 * kBank.omega[kBank.n] + 0.01) == 0.0);
  // each tone omega_k lies on the plateau of its own band only
  for (int k = 0; k <= kBank.n; ++k)
    for (int j = 0; j <= kBank.n; ++j) CHECK(kBank.zeta_hat(j, kBank.omega[k]) == (j == k ? 1.0 : 0.0));
}

TEST_CASE("band kernels decay faster than a fixed power") {
  const int P = 1 << 14;
  for (int k = 0; k <= kBank.n; ++k) {
    const auto ker = kBank.zeta_kernel(k, kDt, P);
    double peak = 0.0;
    for (double v : ker) peak = std::max(peak, std::fabs(v));
    // |zeta_k(t)| (1 + omega_k |t|)^4 stays bounded by a modest multiple of the peak
    double worst = 0.0;
    for (int j = 0; j < P; ++j) {
      const double t = (j - P / 2) * kDt;
      worst = std::max(worst, std::fabs(ker[j]) * std::pow(1.0 + kBank.omega[k] * std::fabs(t), 4));
    }
    CAPTURE(k);
    CHECK(worst / peak < 1e4);
    CHECK(kernel_tail_fraction(kBank, Component::Band, k, 400.0, kDt) <
          kernel_tail_fraction(kBank, Component::Band, k, 40.0, kDt));
  }
}

TEST_CASE("distorted time") {
  const double R1 = 10.0;
  CHECK(distorted_time(3.0, 0.5 * R1, R1) == 3.0);
  CHECK(distorted_time(0.0, R1 + 2.0, R1) == doctest::Approx(1.0).epsilon(1e-14));
  double worst = 0.0;
  for (int i = 0; i <= 4000; ++i) {
    const double r = 0.01 * i;
    worst = std::max(worst, std::fabs(distorted_time_dr(r, R1)));
    const double h = 1e-5;
    REQUIRE(distorted_time_dr(r, R1) ==
            doctest::Approx((distorted_time(0, r + h, R1) - distorted_time(0, r - h, R1)) / (2 * h)).epsilon(1e-6));
  }
  // level sets of t_- stay spacelike: |d_r t_-| < 1
  CHECK(worst < 1.0);
  CHECK(worst >= 0.5);
}

TEST_CASE("temporal cut-off") {
  TimeSeriesField f;
  f.dt = 0.1;
  f.nt = 200;
  f.r = {0.5, 1.0, 1.5};
  f.data.assign(f.nt * 3, cd(1.0, -2.0));
  const double R1 = 10.0;
  // the record starts before t_- = 0 and ends after t_- = 1
  f.t0 = -3.0;
  const auto c = temporal_cutoff(f, R1, 0.0);
  CHECK(c.cutoff_applied);
  for (int j = 0; j < f.nt; ++j)
    for (int i = 0; i < 3; ++i) {
      const double s = distorted_time(f.time(j), f.r[i], R1);
      if (s <= 0.0) REQUIRE(c.at(j, i) == cd(0.0));
      if (s >= 1.0) REQUIRE(c.at(j, i) == f.at(j, i));
    }
  // entirely after the transition: unchanged
  f.t0 = 5.0;
  const auto u = temporal_cutoff(f, R1, 0.0);
  CHECK(u.data == f.data);
  // a record that never completes the transition cannot be cut off
  f.t0 = -50.0;
  f.nt = 100;
  f.data.resize(f.nt * 3);
  CHECK_THROWS_WITH(temporal_cutoff(f, R1, 0.0), doctest::Contains("insufficient recorded span"));
  // transition-band mass matches a direct quadrature of theta_2^2
  f.t0 = -1.0;
  f.nt = 3001;
  f.dt = 1e-3;
  f.data.assign(f.nt * 3, cd(1.0));
  const auto m = temporal_cutoff(f, R1, 0.0);
  double mass = 0.0;
  for (int j = 0; j < f.nt; ++j) mass += std::norm(m.at(j, 0)) * f.dt;
  // int_{-1}^{2} theta_2(t)^2 dt = 1 + int_0^1 theta_2^2, with theta_2^2 + theta_2(1-t)^2 symmetric about 1/2
  CHECK(mass > 1.0);
  CHECK(mass < 2.0);
  double sym = 0.0;
  for (int j = 0; j <= 1000; ++j) {
    sym = std::max(sym, std::fabs(m.at(1000 + j, 0).real() + m.at(1000 + (1000 - j), 0).real() - 1.0));
  }
  CHECK(sym < 1e-12);
}

TEST_CASE("single tones are recovered by their own band only") {
  for (int k = 0; k <= kBank.n; ++k) {
    const auto f = tones({kBank.omega[k]});
    for (int j = 0; j <= kBank.n; ++j) {
      const auto p = project_component(f, kBank, Component::Band, j);
      CAPTURE(k);
      CAPTURE(j);
      if (j == k) CHECK(interior_diff(p, f) < 1e-6);
      else CHECK(interior_max(p) < 1e-6);
    }
  }
  const auto dc = tones({0.0});
  CHECK(interior_diff(project_component(dc, kBank, Component::Band, 0), dc) < 1e-6);
  for (int j = 1; j <= kBank.n; ++j) CHECK(interior_max(project_component(dc, kBank, Component::Band, j)) < 1e-6);
}

TEST_CASE("bands add up to the low-pass part and the high-pass part is the rest") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> nd;
  TimeSeriesField f;
  f.dt = kDt;
  f.nt = kNt;
  f.r = {1.0, 2.0};
  for (int n = 0; n < f.nt * 2; ++n) f.data.emplace_back(nd(rng), nd(rng));
  const auto low = project_component(f, kBank, Component::LowPass);
  TimeSeriesField sum = low;
  std::fill(sum.data.begin(), sum.data.end(), cd(0.0));
  for (int k = 0; k <= kBank.n; ++k) {
    const auto b = project_component(f, kBank, Component::Band, k);
    for (size_t n = 0; n < sum.data.size(); ++n) sum.data[n] += b.data[n];
  }
  double num = 0.0, den = 0.0;
  for (size_t n = 0; n < sum.data.size(); ++n) {
    num = std::max(num, std::abs(sum.data[n] - low.data[n]));
    den = std::max(den, std::abs(low.data[n]));
  }
  CHECK(num / den < 1e-10);
  const auto high = project_component(f, kBank, Component::HighPass);
  double hp = 0.0;
  for (size_t n = 0; n < f.data.size(); ++n) hp = std::max(hp, std::abs(high.data[n] + low.data[n] - f.data[n]));
  CHECK(hp < 1e-10);
  CHECK(parseval_defect(f) < 1e-10);
  // time derivative of a tone
  // spectral derivative of a modulated Gaussian
  TimeSeriesField g = f;
  TimeSeriesField expect = f;
  const double tc = 0.5 * kNt * kDt, sg = 20.0, w0 = 1.3;
  for (int j = 0; j < g.nt; ++j) {
    const double t = g.time(j) - tc;
    const cd v = std::exp(-t * t / (sg * sg)) * std::exp(kI * w0 * t);
    for (int i = 0; i < g.nr(); ++i) {
      g.at(j, i) = v;
      expect.at(j, i) = v * (kI * w0 - 2.0 * t / (sg * sg));
    }
  }
  const auto dg = spectral_time_derivative(g);
  double err = 0.0;
  for (size_t n = 0; n < dg.data.size(); ++n) err = std::max(err, std::abs(dg.data[n] - expect.data[n]));
  CHECK(err < 1e-10);
}

TEST_CASE("sandwich ratios") {
  for (int k = 1; k <= kBank.n; ++k) {
    CAPTURE(k);
    const auto at = project_component(tones({kBank.omega[k]}), kBank, Component::Band, k);
    const auto r0 = sandwich_check(at, spectral_time_derivative(at), kBank, k, {}, kMargin);
    CHECK(r0.ratio == doctest::Approx(1.0).epsilon(0.05));
    CHECK(r0.within);
    const double we = 1.9 * kBank.omega[k];
    const auto ed = project_component(tones({we}), kBank, Component::Band, k);
    const auto r1 = sandwich_check(ed, spectral_time_derivative(ed), kBank, k, {}, kMargin);
    // near the upper edge the ratio approaches 4
    CHECK(r1.ratio >= 1.9 * 1.9 * 0.95);
    CHECK(r1.ratio <= 4.2);
    // broadband content across the band
    std::vector<double> w, c;
    for (int a = 0; a < 12; ++a) {
      w.push_back(kBank.omega[k] * (0.55 + 0.12 * a));
      c.push_back(1.0 + 0.1 * a);
    }
    const auto bb = project_component(tones(w, c), kBank, Component::Band, k);
    const auto r2 = sandwich_check(bb, spectral_time_derivative(bb), kBank, k, {}, kMargin);
    CHECK(r2.ratio >= 0.225);
    CHECK(r2.ratio <= 4.4);
  }
  TimeSeriesField z = tones({1.0});
  std::fill(z.data.begin(), z.data.end(), cd(0.0));
  CHECK_THROWS(sandwich_check(z, z, kBank, 1, {}, kMargin));
}

TEST_CASE("reproducing kernels and leakage") {
  for (int k = 0; k <= kBank.n; ++k) {
    CAPTURE(k);
    const auto f = tones({0.8 * kBank.omega[k] + (k == 0 ? 0.1 : 0.0), 1.3 * kBank.omega[k]});
    const auto p = project_component(f, kBank, Component::Band, k);
    const auto rep = reproducing_check(p, kBank, k, kMargin);
    CHECK(rep.residual_xi < 1e-6);
    if (k >= 1) CHECK(rep.residual_xi_tilde < 1e-6);
    CHECK(band_leakage(f, kBank, k) < 1e-8);
  }
  TimeSeriesField z = tones({1.0});
  std::fill(z.data.begin(), z.data.end(), cd(0.0));
  const auto rz = reproducing_check(z, kBank, 2, kMargin);
  CHECK(rz.residual_xi == 0.0);
  CHECK(rz.residual_xi_tilde == 0.0);
}

TEST_CASE("short windows are refused with the span they need") {
  TimeSeriesField f = tones({1.0});
  f.nt = 200;
  f.data.resize(200 * f.r.size());
  CHECK_THROWS_WITH(project_component(f, kBank, Component::Band, 0), doctest::Contains("window too short"));
}

TEST_CASE("recorded evolution: finite speed tails and the cut-off source") {
  RunConfig rc;
  rc.model = make_minkowski(0.5, 40.0);
  const auto& M = rc.model;
  rc.modes = {0};
  rc.N = 1600;
  rc.T_final = 10.0;
  rc.output_every = 0.05;
  rc.outer = OuterBC::Sommerfeld;
  rc.keep_snapshots = true;
  const auto g = rc.grid();
  FieldSnapshot s;
  s.grid = g;
  s.m = 0;
  s.phi.resize(g->size());
  s.dphi_dt.assign(g->size(), cd(0.0));
  for (int i = 0; i < g->size(); ++i) s.phi[i] = std::exp(-std::pow((g->r[i] - 5.0) / 0.5, 2));
  const auto res = evolve(rc, {s});
  const auto psi = series_from_snapshots(res.snapshots, 0);
  const auto dpsi = series_from_snapshots(res.snapshots, 0, true);
  CHECK(psi.nt == 201);
  CHECK(psi.dt == doctest::Approx(0.05));
  // nothing beyond the light cone of the initial support
  const auto tail = tail_decay_check(psi, psi.nt - 1, {2.5, 20.0});
  CHECK(tail.shell_energy[0] > 1e-6);
  CHECK(tail.shell_energy[1] < 1e-10);
  const auto early = tail_decay_check(psi, 0, {6.0, 12.0, 24.0});
  for (bool mono : early.monotone) CHECK(mono);
  CHECK_THROWS_AS(tail_decay_check(psi, psi.nt, {1.0}), std::out_of_range);

  const double R1 = 20.0, tau1 = 2.0;
  const auto F = cutoff_source(M, psi, dpsi, R1, tau1);
  const auto rep = source_term_bound_check(M, psi, dpsi, kBank, 2, 4.0, 2.0, R1, tau1, 1.0);
  CHECK(rep.band_leak == 0.0);
  CHECK(rep.finite);
  double inside = 0.0;
  for (int j = 0; j < F.nt; ++j)
    for (int i = 0; i < F.nr(); ++i) inside = std::max(inside, std::abs(F.at(j, i)));
  CHECK(inside > 0.0);
  TimeSeriesField zero = psi;
  std::fill(zero.data.begin(), zero.data.end(), cd(0.0));
  const auto Fz = cutoff_source(M, zero, zero, R1, tau1);
  for (auto v : Fz.data) REQUIRE(v == cd(0.0));
}
