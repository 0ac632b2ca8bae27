#include "ergo/carleman.hpp"

#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <thread>

#include "ergo/cutoff.hpp"

namespace ergo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------- jets

constexpr double kS9[10] = {0, 0, 0, 0, 0, 126, -420, 540, -315, 70};

// Order-9 smoothstep with five derivatives.
Jet6 s9(double x) {
  Jet6 j{};
  if (x <= 0.0) return j;
  if (x >= 1.0) {
    j[0] = 1.0;
    return j;
  }
  for (int k = 0; k < 6; ++k) {
    double acc = 0.0;
    for (int p = 9; p >= k; --p) {
      double c = kS9[p];
      for (int q = 0; q < k; ++q) c *= (p - q);
      acc = acc * x + c;
    }
    j[k] = acc;
  }
  return j;
}

// S((x - x0) / w) as a jet in x.
Jet6 step_jet(double x, double x0, double w) {
  Jet6 j = s9((x - x0) / w);
  double f = 1.0;
  for (int k = 1; k < 6; ++k) {
    f /= w;
    j[k] *= f;
  }
  return j;
}

Jet6 jconst(double c) {
  Jet6 j{};
  j[0] = c;
  return j;
}

Jet6 jadd(const Jet6& a, const Jet6& b) {
  Jet6 c;
  for (int k = 0; k < 6; ++k) c[k] = a[k] + b[k];
  return c;
}

Jet6 jsub(const Jet6& a, const Jet6& b) {
  Jet6 c;
  for (int k = 0; k < 6; ++k) c[k] = a[k] - b[k];
  return c;
}

Jet6 jscale(const Jet6& a, double s) {
  Jet6 c;
  for (int k = 0; k < 6; ++k) c[k] = a[k] * s;
  return c;
}

constexpr double kBinom[6][6] = {{1, 0, 0, 0, 0, 0},  {1, 1, 0, 0, 0, 0},   {1, 2, 1, 0, 0, 0},
                                 {1, 3, 3, 1, 0, 0},  {1, 4, 6, 4, 1, 0},   {1, 5, 10, 10, 5, 1}};

Jet6 jmul(const Jet6& a, const Jet6& b) {
  Jet6 c{};
  for (int n = 0; n < 6; ++n)
    for (int k = 0; k <= n; ++k) c[n] += kBinom[n][k] * a[k] * b[n - k];
  return c;
}

// (g o a) given the derivatives of g at a[0] (Faa di Bruno to order 5).
Jet6 compose(const Jet6& g, const Jet6& a) {
  const double a1 = a[1], a2 = a[2], a3 = a[3], a4 = a[4], a5 = a[5];
  Jet6 c;
  c[0] = g[0];
  c[1] = g[1] * a1;
  c[2] = g[2] * a1 * a1 + g[1] * a2;
  c[3] = g[3] * a1 * a1 * a1 + 3 * g[2] * a1 * a2 + g[1] * a3;
  c[4] = g[4] * std::pow(a1, 4) + 6 * g[3] * a1 * a1 * a2 + g[2] * (4 * a1 * a3 + 3 * a2 * a2) + g[1] * a4;
  c[5] = g[5] * std::pow(a1, 5) + 10 * g[4] * a1 * a1 * a1 * a2 + g[3] * (15 * a1 * a2 * a2 + 10 * a1 * a1 * a3) +
         g[2] * (5 * a1 * a4 + 10 * a2 * a3) + g[1] * a5;
  return c;
}

Jet6 jexp(const Jet6& a) {
  Jet6 g;
  g.fill(std::exp(a[0]));
  return compose(g, a);
}

Jet6 jlog(const Jet6& a) {
  const double x = a[0];
  const Jet6 g = {std::log(x), 1 / x, -1 / (x * x), 2 / std::pow(x, 3), -6 / std::pow(x, 4), 24 / std::pow(x, 5)};
  return compose(g, a);
}

Jet6 jvar(double x) { return {x, 1, 0, 0, 0, 0}; }

// x^p as a jet in x
Jet6 jpow(double x, double p) {
  Jet6 j;
  double c = 1.0;
  for (int k = 0; k < 6; ++k) {
    j[k] = c * std::pow(x, p - k);
    c *= (p - k);
  }
  return j;
}

// Jet of g(x(r)) with x = r / R given the jet of g in x.
Jet6 rescale_jet(const Jet6& gx, double R) {
  Jet6 j = gx;
  double f = 1.0;
  for (int k = 1; k < 6; ++k) {
    f /= R;
    j[k] *= f;
  }
  return j;
}

// r-jet -> rho-jet (r = e^rho) and back.
Jet6 to_rho(const Jet6& g_r, double r) {
  Jet6 inner;
  inner.fill(r);
  return compose(g_r, inner);
}

Jet6 to_r(const Jet6& g_rho, double r) {
  const Jet6 inner = {std::log(r), 1 / r, -1 / (r * r), 2 / std::pow(r, 3), -6 / std::pow(r, 4), 24 / std::pow(r, 5)};
  return compose(g_rho, inner);
}

Jet6 shift(const Jet6& a) { return {a[1], a[2], a[3], a[4], a[5], 0.0}; }

// p(x) = x - 0.9 log x
Jet6 p_jet(double x) {
  return {x - 0.9 * std::log(x), 1 - 0.9 / x, 0.9 / (x * x), -1.8 / std::pow(x, 3), 5.4 / std::pow(x, 4),
          -21.6 / std::pow(x, 5)};
}

// ---------------------------------------------------------------- quadrature

const gsl_integration_glfixed_table* gl_table(int n) {
  static const std::unique_ptr<gsl_integration_glfixed_table, void (*)(gsl_integration_glfixed_table*)> t8(
      gsl_integration_glfixed_table_alloc(8), gsl_integration_glfixed_table_free);
  static const std::unique_ptr<gsl_integration_glfixed_table, void (*)(gsl_integration_glfixed_table*)> t32(
      gsl_integration_glfixed_table_alloc(32), gsl_integration_glfixed_table_free);
  return n == 8 ? t8.get() : t32.get();
}

template <class Fn>
double gauss(double a, double b, Fn fn, int n = 8) {
  if (b == a) return 0.0;
  const auto* t = gl_table(n);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double xi, wi;
    gsl_integration_glfixed_point(a, b, static_cast<size_t>(i), &xi, &wi, t);
    acc += wi * fn(xi);
  }
  return acc;
}

template <class Fn>
void parallel_index(int n, Fn fn) {
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const int nt = std::min({hw, 8, std::max(1, n / 64)});
  if (nt <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int w = 0; w < nt; ++w)
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += nt) fn(i);
    });
  for (auto& t : pool) t.join();
}

// ---------------------------------------------------------------- polynomials in s

struct SPoly {
  std::array<double, 5> c{};
};

SPoly operator+(SPoly a, const SPoly& b) {
  for (int k = 0; k < 5; ++k) a.c[k] += b.c[k];
  return a;
}
SPoly operator-(SPoly a, const SPoly& b) {
  for (int k = 0; k < 5; ++k) a.c[k] -= b.c[k];
  return a;
}
SPoly operator*(double s, SPoly a) {
  for (auto& v : a.c) v *= s;
  return a;
}
SPoly operator*(const SPoly& a, const SPoly& b) {
  SPoly r;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; i + j < 5; ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

struct PolyField {
  SPoly lift(double c0, double c1) const {
    SPoly p;
    p.c[0] = c0;
    p.c[1] = c1;
    return p;
  }
};

struct DoubleField {
  double s;
  double lift(double c0, double c1) const { return c0 + c1 * s; }
};

// Leibniz to order 2 for a scalar jet times a field jet.
template <class P>
std::array<P, 3> smul(const std::array<double, 3>& a, const std::array<P, 3>& b) {
  return {a[0] * b[0], a[1] * b[0] + a[0] * b[1], a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2]};
}

template <class P>
std::array<P, 3> padd(const std::array<P, 3>& a, const std::array<P, 3>& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}

// theta_4 composed with u(r), orders 0..2
std::array<double, 3> theta4_of(double u, double du, double ddu) {
  const double t0 = theta4(u, 0), t1 = theta4(u, 1), t2 = theta4(u, 2);
  return {t0, t1 * du, t2 * du * du + t1 * ddu};
}

struct Cutoffs {
  std::array<double, 3> theta_a;  // theta_4(R0 / (2r))
  std::array<double, 3> Theta0;   // theta_4(r / R0)
  std::array<double, 3> theta_R;  // theta_4(R / r)
};

// Derivative k is multiplied by r^k (dimensionless jets).
Cutoffs cutoffs(const CarlemanParams& p, double r) {
  Cutoffs c;
  const double a = p.R0 / (2.0 * r), b = p.R / r;
  c.theta_a = theta4_of(a, -a, 2 * a);
  c.Theta0 = theta4_of(r / p.R0, r / p.R0, 0.0);
  c.theta_R = theta4_of(b, -b, 2 * b);
  return c;
}

constexpr double kHBlendLo = 1.45, kHBlendHi = 1.75;

// r^{2+j} d^j (h / f), j = 0..2, given the scaled F^{(0..4)}.
template <class P, class Field>
std::array<P, 3> k_jets(const WeightProfile& prof, double r, const Field& fld, const Jet6& w0, const Jet6& w1,
                        const P* F) {
  const auto& p = prof.params;
  const double x = r / p.R;
  std::array<P, 3> k1{}, k2{};
  if (x < kHBlendHi) {
    const Cutoffs c = cutoffs(p, r);
    const std::array<P, 3> sw = {fld.lift(w1[2], w0[2]), fld.lift(w1[3], w0[3]), fld.lift(w1[4], w0[4])};
    const double q = 1 / std::sqrt(r);
    const std::array<double, 3> g = {1 - q, -1 + 1.5 * q, 2 - 3.75 * q};  // r^{1+j} d^j (1/r - r^{-3/2})
    const std::array<double, 3> ta = {-p.delta1 * c.theta_a[0], -p.delta1 * c.theta_a[1], -p.delta1 * c.theta_a[2]};
    const std::array<double, 3> Tg = {c.Theta0[0] * g[0], c.Theta0[1] * g[0] + c.Theta0[0] * g[1],
                                      c.Theta0[2] * g[0] + 2 * c.Theta0[1] * g[1] + c.Theta0[0] * g[2]};
    const std::array<P, 3> dF = {F[1], F[2], F[3]};
    k1 = padd(smul(ta, sw), smul(Tg, dF));
  }
  if (x > kHBlendLo) {
    k2 = {0.5 * (F[2] + F[1] * F[1]), 0.5 * (F[3] + 2.0 * F[1] * F[2]),
          0.5 * (F[4] + 2.0 * F[2] * F[2] + 2.0 * F[1] * F[3])};
  }
  if (x <= kHBlendLo) return k1;
  if (x >= kHBlendHi) return k2;
  const double z = r / ((kHBlendHi - kHBlendLo) * p.R);
  Jet6 sg = s9((x - kHBlendLo) / (kHBlendHi - kHBlendLo));
  sg[1] *= z;
  sg[2] *= z * z;
  const std::array<double, 3> a = {1 - sg[0], -sg[1], -sg[2]};
  const std::array<double, 3> b = {sg[0], sg[1], sg[2]};
  return padd(smul(a, k1), smul(b, k2));
}

// r^4 A / f. Every jet is dimensionless (derivative k times r^k), so 1/r becomes 1.
template <class P, class Field>
P assemble_bulk(const WeightProfile& prof, double r, const Field& fld) {
  const auto& p = prof.params;
  Jet6 w0, w1;
  prof.wR_scaled(r, w0, w1);
  P F[5];
  for (int j = 0; j < 5; ++j) F[j] = fld.lift(2 * w1[j], 2 * w0[j]);
  const std::array<P, 3> k = k_jets<P>(prof, r, fld, w0, w1, F);

  const double D = 1.0;
  const Cutoffs c = cutoffs(p, r);
  const double thR = c.theta_R[0], dthR = c.theta_R[1];
  const double Th = c.Theta0[0] * thR, dTh = c.Theta0[1] * thR + c.Theta0[0] * dthR;
  const double ir = 1.0, ir2 = 1.0, ir3 = 1.0;

  const P F1 = F[1], F2 = F[2], F3 = F[3], F4 = F[4];
  const P F1s = F1 * F1;
  const P Q = F2 + F1s + (D * ir) * F1;
  const P Q1 = F3 + 2.0 * (F1 * F2) + D * (ir * F2 - ir2 * F1);
  const P Q2 = F4 + 2.0 * (F2 * F2) + 2.0 * (F1 * F3) + D * (ir * F3 - 2.0 * ir2 * F2 + 2.0 * ir3 * F1);

  const P T1 = k[2] + 2.0 * (F1 * k[1]) + (F2 + F1s) * k[0] + (D * ir) * (k[1] + F1 * k[0]);
  const P T2 = F3 * F1 + F2 * F2 + 4.0 * (F1s * F2) + F1s * F1s + (D * ir) * (F2 * F1 + F1s * F1);
  const P T3 = -0.5 * (F2 * F1s) - 0.5 * (F1s * F1s);
  const P T4 = -0.5 * (Q2 + 2.0 * (F1 * Q1) + (D * ir) * Q1 + Q * Q);
  const P T57 = Th * (ir2 * F1s - ir * (F1s * F1) - 2.0 * ir * (F1 * F2) - D * ir2 * F1s + 0.5 * ir * (F1s * F1));
  const P T8 = dthR * ((F2 + F1s) * F1);
  const P T9 = -dTh * ir * F1s;
  return T1 + thR * (T2 + T3) + T4 + T57 + T8 + T9;
}

// ---------------------------------------------------------------- pieces of w_R

Jet6 G_jet(int d, double r) {
  if (d == 2) return {std::log(r), 1 / r, -1 / (r * r), 2 / std::pow(r, 3), -6 / std::pow(r, 4), 24 / std::pow(r, 5)};
  return {-1 / r, 1 / (r * r), -2 / std::pow(r, 3), 6 / std::pow(r, 4), -24 / std::pow(r, 5), 120 / std::pow(r, 6)};
}

Jet6 near_jet(const WeightProfile& prof, double r) {
  const auto& p = prof.params;
  Jet6 a = jscale(prof.base.jet(r), p.l);
  a[0] -= 3 * p.eps0 * std::log(p.R);
  return jexp(a);
}

Jet6 lambda_jet(const WeightProfile& prof, double rho) {
  const double d = rho - prof.rho0;
  Jet6 l1{};
  for (int j = 0; j < 4; ++j) {
    double acc = 0.0, fact = 1.0;
    for (int k = j; k < 4; ++k) {
      acc += prof.taylor[k] * std::pow(d, k - j) / fact;
      fact *= (k - j + 1);
    }
    l1[j] = acc;
  }
  const Jet6 S1 = step_jet(rho, prof.rho0, prof.eta_in);
  const Jet6 S2 = step_jet(rho, prof.rho1 - prof.eta_out, prof.eta_out);
  Jet6 E;
  double c = prof.K_decay * std::exp(-rho / 2);
  for (int k = 0; k < 6; ++k, c *= -0.5) E[k] = c;
  E[0] += prof.mu;
  const Jet6 mid = jadd(jconst(prof.params.eps0), jmul(E, jsub(jconst(1.0), S2)));
  return jadd(jmul(jsub(jconst(1.0), S1), l1), jmul(S1, mid));
}

struct BridgeEval {
  const WeightProfile& prof;
  int M() const { return static_cast<int>(prof.rho_tab.size()) - 1; }
  int panel(double rho) const {
    const double h = (prof.rho1 - prof.rho0) / M();
    return std::clamp(static_cast<int>(std::floor((rho - prof.rho0) / h)), 0, M() - 1);
  }
  double logq(double rho) const {
    const int j = panel(rho);
    return prof.logq_tab[j] + gauss(prof.rho_tab[j], rho, [&](double x) { return lambda_jet(prof, x)[0]; });
  }
  double w(double rho) const {
    const int j = panel(rho);
    return prof.w_tab[j] + gauss(prof.rho_tab[j], rho, [&](double x) { return std::exp(logq(x)); });
  }
};

Jet6 bridge_jet(const WeightProfile& prof, double r) {
  const double rho = std::log(r);
  BridgeEval be{prof};
  const Jet6 lam = lambda_jet(prof, rho);
  const Jet6 Lq = {be.logq(rho), lam[0], lam[1], lam[2], lam[3], lam[4]};
  const Jet6 q_r = to_r(jexp(Lq), r);
  const Jet6 inv_r = {1 / r, -1 / (r * r), 2 / std::pow(r, 3), -6 / std::pow(r, 4), 24 / std::pow(r, 5),
                      -120 / std::pow(r, 6)};
  const Jet6 dw = jmul(q_r, inv_r);
  return {be.w(rho), dw[0], dw[1], dw[2], dw[3], dw[4]};
}

// C1 eps0^{-1} (r / R)^{eps0} + C2
Jet6 inter_jet(const CarlemanParams& p, double r) {
  Jet6 j = jscale(jpow(r, p.eps0), p.C1 / p.eps0 * std::pow(p.R, -p.eps0));
  j[0] += p.C2;
  return j;
}

// The same with derivative k times r^k.
Jet6 inter_jet_scaled(const CarlemanParams& p, double r) {
  const double v = p.C1 / p.eps0 * std::pow(r / p.R, p.eps0);
  Jet6 j;
  double c = 1.0;
  for (int k = 0; k < 6; ++k) {
    j[k] = c * v;
    c *= (p.eps0 - k);
  }
  j[0] += p.C2;
  return j;
}

constexpr double kX1 = 11.0 / 20, kX2 = 23.0 / 40, kX3 = 3.0 / 5, kX4 = 7.0 / 10, kX5 = 3.0 / 4;

// Pieces of the unmollified v_s (v0 + v1 / s) in x.
void vs_piece(const CarlemanParams& p, int idx, double x, Jet6& v0, Jet6& v1) {
  auto A = [&] {
    Jet6 j = jscale(jpow(x, p.eps0), p.C1 / p.eps0);
    j[0] += p.C2 - p.C3;
    return j;
  };
  auto B0 = [&] {
    const double y = x - kX3;
    return Jet6{-p.delta1 * std::pow(y, 6), -6 * p.delta1 * std::pow(y, 5), -30 * p.delta1 * std::pow(y, 4),
                -120 * p.delta1 * std::pow(y, 3), -360 * p.delta1 * y * y, -720 * p.delta1 * y};
  };
  auto B1 = [&] {
    const double y = x - 1;
    return Jet6{-0.5 * (y * y + 10), -y, -1, 0, 0, 0};
  };
  auto L1 = [&] { return jscale(jlog(p_jet(x)), 0.5); };
  const Jet6 zero{};
  switch (idx) {
    case 0:
      v0 = A();
      v1 = zero;
      return;
    case 1: {
      const Jet6 S = step_jet(x, kX1, kX2 - kX1);
      v0 = jadd(jmul(jsub(jconst(1), S), A()), jmul(S, B0()));
      v1 = jmul(S, B1());
      return;
    }
    case 2:
      v0 = B0();
      v1 = B1();
      return;
    case 3:
      v0 = zero;
      v1 = B1();
      return;
    case 4: {
      const Jet6 S = step_jet(x, kX4, kX5 - kX4);
      v0 = zero;
      v1 = jadd(jmul(jsub(jconst(1), S), B1()), jmul(S, L1()));
      return;
    }
    default:
      v0 = zero;
      v1 = L1();
  }
}

int vs_index(double x) {
  if (x <= kX1) return 0;
  if (x <= kX2) return 1;
  if (x < kX3) return 2;
  if (x <= kX4) return 3;
  if (x <= kX5) return 4;
  return 5;
}

void vs_raw(const CarlemanParams& p, double x, Jet6& v0, Jet6& v1) { vs_piece(p, vs_index(x), x, v0, v1); }

// Smooth indicator of |x - 3/5| <= eps, switching off by 1.5 eps.
Jet6 chi_jet(double x, double eps) {
  const double a = 2.0 / eps;
  const double y = std::fabs(x - kX3) * a - 2.0;
  Jet6 j = s9(y);
  j[0] = 1.0 - j[0];
  double f = 1.0;
  for (int k = 1; k < 6; ++k) {
    f *= a;
    j[k] *= -f;
    if (x < kX3 && (k % 2 == 1)) j[k] = -j[k];
  }
  return j;
}

double bump(double y) { return std::fabs(y) >= 1 ? 0.0 : std::exp(-1.0 / (1.0 - y * y)); }

}  // namespace

// ---------------------------------------------------------------- parameters

double CarlemanParams::ratio_parameter() const { return eps0 * s * std::pow(R, -9 * eps0); }

std::pair<double, double> CarlemanParams::s_interval() const {
  const double c3 = std::cbrt(C_rule);
  const double lo = c3 * std::max((1 + omega_k) * std::pow(R, 9 * eps0), -std::log(delta2));
  const double hi = R * omega_k / c3;
  return {lo, hi};
}

void CarlemanParams::validate() const {
  auto fail = [](const std::string& m) { throw ParameterError(m); };
  if (!(eps0 > 0 && eps0 < 1.0 / 9)) fail("eps0 must lie in (0, 1/9)");
  for (double d : {delta0, delta1, delta2})
    if (!(d > 0 && d < 1)) fail("delta parameters must lie in (0, 1)");
  if (!(l > 0) || !(R0 > 0) || !(C1 > 0) || !(C_rule > 0)) fail("l, R0, C1 and C_rule must be positive");
  if (!(omega_k > 0)) fail("omega_k must be positive");
  const double e = 1.0 / (1 - 9 * eps0);
  const double Rmin = C_rule * std::max({1.0, std::pow(omega_k, -e), std::pow(-std::log(delta2), e)});
  if (!(R >= Rmin)) fail("lower bound on R violated: R < " + std::to_string(Rmin));
  const auto [lo, hi] = s_interval();
  if (!(lo <= hi)) fail("s interval is empty for this R and omega_k");
  if (!(s >= lo && s <= hi)) fail("s outside the admissible interval");
  if (!(ratio_parameter() >= threshold)) fail("eps0 s R^{-9 eps0} below the configured threshold");
}

double bridge_radius(double eps0) { return 16.0 / (eps0 * eps0); }

CarlemanParams choose_parameters(double omega_k, double delta1, double eps0, double delta2,
                                 const CarlemanParams& base) {
  CarlemanParams p = base;
  p.omega_k = omega_k;
  p.delta1 = delta1;
  p.eps0 = eps0;
  p.delta2 = delta2;
  if (!(eps0 > 0 && eps0 < 1.0 / 9)) throw ParameterError("eps0 must lie in (0, 1/9)");
  if (!(omega_k > 0)) throw ParameterError("omega_k must be positive");
  if (!(delta2 > 0 && delta2 < 1)) throw ParameterError("delta2 must lie in (0, 1)");
  const double e = 1.0 / (1 - 9 * eps0);
  const double Rmin = p.C_rule * std::max({1.0, std::pow(omega_k, -e), std::pow(-std::log(delta2), e)});
  const double r_need = std::max(2 * p.R0, bridge_radius(eps0));
  std::string binding = "lower bound on R";
  for (double logR = std::log(Rmin); logR < 700.0; logR += std::log(1.01)) {
    p.R = std::exp(logR);
    if (std::pow(p.R, eps0) < r_need) {
      binding = "bridge radius R^{eps0} >= " + std::to_string(r_need);
      continue;
    }
    const auto [lo, hi] = p.s_interval();
    if (lo > hi) {
      binding = "s interval";
      continue;
    }
    p.s = std::sqrt(lo * hi);
    if (p.ratio_parameter() < p.threshold) {
      binding = "threshold on eps0 s R^{-9 eps0}";
      continue;
    }
    return p;
  }
  throw ParameterError("no admissible R below 1e304; binding constraint: " + binding);
}

// ---------------------------------------------------------------- base weight

Jet6 BaseWeight::jet(double r) const {
  const Jet6 g = G_jet(d, r);
  const double c = gamma / (2.0 * d);
  Jet6 j = jscale(g, B);
  j[0] += A + c * r * r;
  j[1] += 2 * c * r;
  j[2] += 2 * c;
  return j;
}

double base_inner_radius(const SpacetimeModel& model, const CarlemanParams& p) {
  if (model.kind == ModelKind::HydroVortex) return model.C;
  if (model.kind == ModelKind::Minkowski) {
    if (p.r0 > 0) return p.r0;
    return model.r_min > 0 ? model.r_min : 0.5;
  }
  throw UnsupportedError("the Carleman pipeline handles the vortex and Minkowski families only");
}

BaseWeight solve_base_weight(const SpacetimeModel& model, const CarlemanParams& p, int N) {
  BaseWeight b;
  b.d = model.dim() - 1;
  b.gamma = p.gamma;
  b.r_in = base_inner_radius(model, p);
  b.r_out = p.R0 / 4;
  if (!(b.r_in > 0 && b.r_in < b.r_out)) throw ParameterError("base weight needs 0 < inner radius < R0 / 4");
  const double c = p.gamma / (2.0 * b.d);
  const double Gi = G_jet(b.d, b.r_in)[0], Go = G_jet(b.d, b.r_out)[0];
  b.B = (1.0 - c * (b.r_out * b.r_out - b.r_in * b.r_in)) / (Go - Gi);
  b.A = 1.0 - b.B * Gi - c * b.r_in * b.r_in;

  // w_rr + (d - 2) w_r = gamma e^{2 rho} on a uniform rho grid
  const double r0 = std::log(b.r_in), r1 = std::log(b.r_out), h = (r1 - r0) / N;
  const int n = N - 1;
  std::vector<double> lo(n), di(n), up(n), rhs(n);
  const double cm = 1 / (h * h) - (b.d - 2) / (2 * h), cp = 1 / (h * h) + (b.d - 2) / (2 * h), cd0 = -2 / (h * h);
  for (int i = 0; i < n; ++i) {
    const double rho = r0 + (i + 1) * h;
    lo[i] = cm;
    di[i] = cd0;
    up[i] = cp;
    rhs[i] = p.gamma * std::exp(2 * rho);
  }
  rhs[0] -= cm * 1.0;
  rhs[n - 1] -= cp * 2.0;
  std::vector<double> cprime(n), dprime(n);
  cprime[0] = up[0] / di[0];
  dprime[0] = rhs[0] / di[0];
  for (int i = 1; i < n; ++i) {
    const double m = di[i] - lo[i] * cprime[i - 1];
    cprime[i] = up[i] / m;
    dprime[i] = (rhs[i] - lo[i] * dprime[i - 1]) / m;
  }
  b.value.assign(N + 1, 0.0);
  b.r.resize(N + 1);
  b.value[0] = 1.0;
  b.value[N] = 2.0;
  b.value[n] = dprime[n - 1];
  for (int i = n - 2; i >= 0; --i) b.value[i + 1] = dprime[i] - cprime[i] * b.value[i + 2];
  double res = 0.0, err = 0.0, slope = kInf;
  for (int i = 0; i <= N; ++i) {
    b.r[i] = std::exp(r0 + i * h);
    err = std::max(err, std::fabs(b.value[i] - b.jet(b.r[i])[0]));
    slope = std::min(slope, b.jet(b.r[i])[1]);
    if (i > 0 && i < N) {
      const double rho = r0 + i * h;
      const double lhs = cm * b.value[i - 1] + cd0 * b.value[i] + cp * b.value[i + 1];
      res = std::max(res, std::fabs(lhs - p.gamma * std::exp(2 * rho)) * h * h);
    }
  }
  b.residual = res;
  b.closed_form_error = err;
  b.min_slope = slope;
  if (!(slope > 0))
    throw std::runtime_error("maximum-principle certificate failed: d_r wbar <= 0 on the base interval");
  return b;
}

HessianCertificate build_w(const BaseWeight& base, double l, double R0) {
  HessianCertificate h;
  h.l = l;
  double mn = kInf;
  const int n = 4000;
  for (int i = 0; i <= n; ++i) {
    const double r = base.r_in * std::pow(R0 / base.r_in, double(i) / n);
    const Jet6 wb = base.jet(r);
    const double c = std::exp(3 * l * wb[0]) * l * l * l * wb[1] * wb[1] * (l * wb[1] * wb[1] + wb[2]);
    mn = std::min(mn, c);
  }
  h.min_contraction = mn;
  const Jet6 wb = base.jet(base.r_in);
  h.grad_on_ergosurface = std::pow(l * wb[1] * std::exp(l * wb[0]), 2);
  if (!(mn > 0))
    throw ParameterError("Hessian certificate fails at l = " + std::to_string(l) + "; increase l");
  return h;
}

// ---------------------------------------------------------------- w_R

double WeightProfile::lambda(double rho, int order) const { return lambda_jet(*this, rho)[order]; }

void WeightProfile::vs(double x, Jet6& v0, Jet6& v1) const {
  vs_raw(params, x, v0, v1);
  const double eps = mollify_width;
  // only the s-independent part carries the finite-order seam at 3/5
  if (std::fabs(x - kX3) >= 1.5 * eps) return;
  Jet6 c0{};
  const auto* t = gl_table(32);
  for (int i = 0; i < 32; ++i) {
    double yi, wi;
    gsl_integration_glfixed_point(-eps, eps, static_cast<size_t>(i), &yi, &wi, t);
    const double wt = wi * bump(yi / eps) / bump_norm;
    Jet6 a0, a1;
    vs_raw(params, x - yi, a0, a1);
    for (int k = 0; k < 6; ++k) c0[k] += wt * a0[k];
  }
  const Jet6 chi = chi_jet(x, eps);
  v0 = jadd(v0, jmul(chi, jsub(c0, v0)));
}

void WeightProfile::wR(double r, Jet6& w0, Jet6& w1) const {
  wR_scaled(r, w0, w1);
  double f = 1.0;
  for (int k = 1; k < 6; ++k) {
    f /= r;
    w0[k] *= f;
    w1[k] *= f;
  }
}

void WeightProfile::wR_scaled(double r, Jet6& w0, Jet6& w1) const {
  auto times_rk = [](Jet6& j, double r) {
    double f = 1.0;
    for (int k = 1; k < 6; ++k) {
      f *= r;
      j[k] *= f;
    }
  };
  const auto& p = params;
  w1 = Jet6{};
  if (r <= p.R0) {
    w0 = near_jet(*this, r);
    times_rk(w0, r);
    return;
  }
  if (r <= r_bridge) {
    w0 = bridge_jet(*this, r);
    times_rk(w0, r);
    return;
  }
  const double x = r / p.R;
  if (x <= 0.5) {
    w0 = inter_jet_scaled(p, r);
    return;
  }
  if (x <= 1.0) {
    vs(x, w0, w1);
    times_rk(w0, x);
    times_rk(w1, x);
    w0[0] += p.C3;
    return;
  }
  w0 = jconst(p.C3);
  w1 = jscale(jlog(p_jet(x)), 0.5);
  times_rk(w1, x);
}

Jet6 WeightProfile::logf(double r, double s) const {
  Jet6 w0, w1;
  wR(r, w0, w1);
  return jadd(jscale(w0, 2 * s), jscale(w1, 2.0));
}

WeightProfile build_wR(const SpacetimeModel& model, CarlemanParams p) {
  if (!(model.kind == ModelKind::HydroVortex || model.kind == ModelKind::Minkowski))
    throw UnsupportedError("the Carleman pipeline handles the vortex and Minkowski families only");
  if (!(p.s > 0 && p.R > 0)) throw ParameterError("s and R must be positive");
  if (!(p.eps0 > 0 && p.eps0 < 1)) throw ParameterError("eps0 must lie in (0, 1)");
  // the mollifier reaches 2.5 delta1 / 10 around 3/5 and must stay clear of the blend ending at 23/40
  if (!(p.delta1 > 0 && p.delta1 <= 0.1)) throw ParameterError("delta1 must lie in (0, 0.1] (mollifier window)");
  WeightProfile prof;
  prof.model = model;
  prof.base = solve_base_weight(model, p);
  prof.hessian = build_w(prof.base, p.l, p.R0);
  prof.r_ergo = model.kind == ModelKind::HydroVortex ? model.C : 0.0;
  prof.r_bridge = std::pow(p.R, p.eps0);
  const double need = std::max(2 * p.R0, bridge_radius(p.eps0));
  if (prof.r_bridge < need)
    throw ParameterError("bridge infeasible: R^{eps0} = " + std::to_string(prof.r_bridge) + " below " +
                         std::to_string(need) + " (second derivative bound at the end of the bridge)");
  if (prof.r_bridge > 0.25 * p.R) throw ParameterError("bridge infeasible: R^{eps0} must stay below R / 4");
  prof.params = p;

  // log(r w_near') as a rho-jet at R0
  prof.rho0 = std::log(p.R0);
  prof.rho1 = std::log(prof.r_bridge);
  const Jet6 wn = near_jet(prof, p.R0);
  const Jet6 q_r = jmul(jvar(p.R0), shift(wn));
  Jet6 q_rho = to_rho(q_r, p.R0);
  q_rho[5] = 0.0;
  const Jet6 Ln = jlog(q_rho);
  for (int k = 0; k < 4; ++k) prof.taylor[k] = Ln[k + 1];
  prof.logq0 = Ln[0];
  prof.wR0 = wn[0];
  const double span = prof.rho1 - prof.rho0;
  prof.eta_in = std::min(0.25, span / 4);
  prof.eta_out = std::min(1.0, span / 4);

  // mu fixes q(rho1) = C1 R^{-eps0 + eps0^2}
  const int M = 2000;
  const double h = span / M;
  prof.mu = 0.0;
  double I0 = 0.0, I1 = 0.0;
  for (int j = 0; j < M; ++j) {
    const double a = prof.rho0 + j * h, b = a + h;
    I0 += gauss(a, b, [&](double x) { return lambda_jet(prof, x)[0]; });
    I1 += gauss(a, b, [&](double x) {
      return step_jet(x, prof.rho0, prof.eta_in)[0] * (1 - step_jet(x, prof.rho1 - prof.eta_out, prof.eta_out)[0]);
    });
  }
  const double target = std::log(p.C1) + (p.eps0 * p.eps0 - p.eps0) * std::log(p.R);
  prof.mu = (target - prof.logq0 - I0) / I1;
  if (!(prof.mu >= 0))
    throw ParameterError("bridge infeasible: slope C1 R^{-2 eps0 + eps0^2} at R^{eps0} is below the growth forced "
                         "by the lower bound on the second derivative (increase C1)");

  prof.rho_tab.resize(M + 1);
  prof.logq_tab.resize(M + 1);
  prof.w_tab.resize(M + 1);
  prof.rho_tab[0] = prof.rho0;
  prof.logq_tab[0] = prof.logq0;
  prof.w_tab[0] = prof.wR0;
  for (int j = 0; j < M; ++j) {
    const double a = prof.rho0 + j * h, b = a + h;
    prof.rho_tab[j + 1] = b;
    auto lq = [&](double x) { return prof.logq_tab[j] + gauss(a, x, [&](double y) { return lambda_jet(prof, y)[0]; }); };
    prof.logq_tab[j + 1] = lq(b);
    prof.w_tab[j + 1] = prof.w_tab[j] + gauss(a, b, [&](double x) { return std::exp(lq(x)); });
  }
  prof.rho_tab[M] = prof.rho1;

  auto& q = prof.params;
  q.C2 = prof.w_tab[M] - q.C1 / q.eps0 * std::exp(q.eps0 * (q.eps0 - 1) * std::log(q.R));
  q.C3 = q.C1 / q.eps0 * std::pow(kX2, q.eps0) + q.C2;
  q.log_C4 = q.C3;

  prof.mollify_width = q.delta1 / 10;
  prof.bump_norm = 0.0;
  {
    const auto* t = gl_table(32);
    for (int i = 0; i < 32; ++i) {
      double yi, wi;
      gsl_integration_glfixed_point(-1, 1, static_cast<size_t>(i), &yi, &wi, t);
      prof.bump_norm += wi * bump(yi);
    }
    prof.bump_norm *= prof.mollify_width;
  }
  prof.seams = {q.R0, prof.r_bridge, kX1 * q.R, kX2 * q.R, kX3 * q.R, kX4 * q.R, kX5 * q.R, q.R};
  return prof;
}

BridgeReport bridge_report(const WeightProfile& prof, int samples) {
  const auto& p = prof.params;
  BridgeReport rep;
  const double scale = std::pow(p.R, 3 * p.eps0);
  std::vector<Jet6> jets(samples + 1);
  std::vector<double> rs(samples + 1);
  for (int i = 0; i <= samples; ++i) rs[i] = std::exp(prof.rho0 + (prof.rho1 - prof.rho0) * i / samples);
  parallel_index(samples + 1, [&](int i) {
    Jet6 w0, w1;
    prof.wR(rs[i], w0, w1);
    jets[i] = w0;
  });
  rep.min_slope_scaled = rep.min_second_scaled = kInf;
  for (int i = 0; i <= samples; ++i) {
    const double r = rs[i];
    const Jet6& w = jets[i];
    rep.min_slope_scaled = std::min(rep.min_slope_scaled, w[1] * scale);
    rep.max_slope = std::max(rep.max_slope, w[1]);
    rep.max_higher = std::max({rep.max_higher, std::fabs(w[2]), std::fabs(w[3]), std::fabs(w[4])});
    const double v = w[2] + w[1] / r - std::fabs(w[2]) / std::sqrt(r) - std::fabs(w[1]) * std::pow(r, -1.5);
    rep.min_second_scaled = std::min(rep.min_second_scaled, v * scale);
  }
  rep.slope_at_bridge_end = jets[samples][1];
  rep.expected_slope_at_bridge_end = p.C1 * std::pow(p.R, -2 * p.eps0 + p.eps0 * p.eps0);
  rep.min_vs_slope_times_s = kInf;
  for (int i = 0; i <= samples; ++i) {
    const double x = 0.5 + 0.5 * i / samples;
    Jet6 v0, v1;
    prof.vs(x, v0, v1);
    const double v = p.s * v0[1] + v1[1];
    if (v < rep.min_vs_slope_times_s) {
      rep.min_vs_slope_times_s = v;
      rep.argmin_vs_slope = x;
    }
  }
  return rep;
}

std::vector<SeamResidual> seam_residuals(const WeightProfile& prof) {
  const auto& p = prof.params;
  std::vector<SeamResidual> out;
  auto jump = [](const Jet6& a, const Jet6& b, double x) {
    double m = 0.0;
    for (int k = 0; k < 5; ++k) {
      const double sc = std::max({std::fabs(a[k]), std::fabs(b[k]), std::fabs(a[0]) * std::pow(x, -k), 1e-300});
      m = std::max(m, std::fabs(a[k] - b[k]) / sc);
    }
    return m;
  };
  out.push_back({p.R0, "near/bridge", jump(near_jet(prof, p.R0), bridge_jet(prof, p.R0), p.R0)});
  out.push_back({prof.r_bridge, "bridge/intermediate",
                 jump(bridge_jet(prof, prof.r_bridge), inter_jet(p, prof.r_bridge), prof.r_bridge)});
  const double xs[5] = {kX1, kX2, kX3, kX4, kX5};
  const char* names[5] = {"intermediate/blend", "blend/sextic", "sextic/quadratic", "quadratic/blend", "blend/log"};
  for (int i = 0; i < 5; ++i) {
    Jet6 a0, a1, b0, b1;
    vs_piece(p, i, xs[i], a0, a1);
    vs_piece(p, i + 1, xs[i], b0, b1);
    // compare the s-weighted sums v0 + v1 / s and the parts separately
    const double m = std::max(jump(a0, b0, xs[i]), jump(a1, b1, xs[i]));
    out.push_back({xs[i] * p.R, names[i], m});
  }
  {
    Jet6 v0, v1;
    prof.vs(1.0, v0, v1);
    Jet6 F_in = jadd(jscale(rescale_jet(v0, p.R), 2 * p.s), jscale(rescale_jet(v1, p.R), 2.0));
    F_in[0] += 2 * p.s * p.C3;
    Jet6 F_out = jlog(p_jet(1.0));
    F_out = rescale_jet(F_out, p.R);
    F_out[0] += 2 * p.s * p.log_C4;
    out.push_back({p.R, "profile/far", jump(F_in, F_out, p.R)});
  }
  return out;
}

std::array<double, 3> h_over_f(const WeightProfile& prof, double r, double s) {
  Jet6 w0, w1;
  prof.wR_scaled(r, w0, w1);
  DoubleField fld{s};
  double F[5];
  for (int j = 0; j < 5; ++j) F[j] = fld.lift(2 * w1[j], 2 * w0[j]);
  return k_jets<double>(prof, r, fld, w0, w1, F);
}

FHReport build_f_h(const WeightProfile& prof, int samples) {
  const auto& p = prof.params;
  if (p.delta2 * kHBlendHi >= 1.0)
    throw ParameterError("h bracketing infeasible: R / delta2 must exceed the end of the h blend at 1.75 R");
  FHReport rep;
  {
    Jet6 v0, v1;
    prof.vs(1.0, v0, v1);
    const double Fin = 2 * p.s * (v0[0] + p.C3) + 2 * v1[0];
    const double dFin = (2 * p.s * v0[1] + 2 * v1[1]) / p.R;
    const double Fout = 2 * p.s * p.log_C4 + std::log(p_jet(1.0)[0]);
    const double dFout = p_jet(1.0)[1] / p_jet(1.0)[0] / p.R;
    rep.f_continuity = std::max(std::fabs(Fin - Fout) / std::max(1.0, std::fabs(Fout)),
                                std::fabs(dFin - dFout) * p.R);
  }
  rep.min_h_bracket = kInf;
  rep.max_h_bracket = -kInf;
  rep.max_box_h = -kInf;
  const double lo = p.R, hi = p.R / p.delta2;
  for (int i = 0; i <= samples; ++i) {
    const double r = lo * std::pow(hi / lo, double(i) / samples);
    const double x = r / p.R;
    // scaled jets: r^{2+j} d^j (h / f) and x^j d^j p / dx^j
    const auto k = h_over_f(prof, r, p.s);
    Jet6 P = p_jet(x);
    P[1] *= x;
    P[2] *= x * x;
    if (!std::isfinite(prof.logf(r, p.s)[0])) rep.f_positive = false;
    const double H0 = P[0] * k[0], H1 = P[1] * k[0] + P[0] * k[1], H2 = P[2] * k[0] + 2 * P[1] * k[1] + P[0] * k[2];
    if (x > 4.0 / 3) {
      rep.min_h_bracket = std::min(rep.min_h_bracket, H0);
      rep.max_h_bracket = std::max(rep.max_h_bracket, H0 / (x * x));
    }
    rep.max_box_h = std::max(rep.max_box_h, -(H2 + H1) / std::pow(x, 4));
  }
  return rep;
}

// ---------------------------------------------------------------- bulk coefficient

std::array<double, 4> bulk_poly(const WeightProfile& prof, double r, double* s4) {
  const SPoly a = assemble_bulk<SPoly>(prof, r, PolyField{});
  if (s4) *s4 = a.c[4];
  return {a.c[0], a.c[1], a.c[2], a.c[3]};
}

double bulk_direct(const WeightProfile& prof, double r, double s) {
  return assemble_bulk<double>(prof, r, DoubleField{s});
}

bool BulkCoefficient::all_positive() const {
  return std::all_of(regions.begin(), regions.end(), [](const RegionMargin& m) { return m.margin > 0; });
}

BulkCoefficient bulk_coefficient(const WeightProfile& prof, int n) {
  const auto& p = prof.params;
  const double s = p.s;
  BulkCoefficient out;
  struct Span {
    std::string name;
    double lo, hi;
    bool log;
  };
  const double r_start = prof.r_ergo > 0 ? prof.r_ergo + p.delta1 : prof.base.r_in;
  const double Rfar = p.R / p.delta2;
  const std::vector<Span> spans = {{"near", r_start, p.R0, false},
                                   {"bridge", p.R0, prof.r_bridge, true},
                                   {"intermediate", prof.r_bridge, p.R / 2, true},
                                   {"third_away", p.R / 2, p.R, false},
                                   {"almost_infinity", p.R, Rfar, true},
                                   {"near_infinity", Rfar, 100 * Rfar, true}};
  const double d = 2.0;
  for (const auto& sp : spans) {
    std::vector<double> rs(n + 1);
    for (int i = 0; i <= n; ++i) {
      const double t = double(i) / n;
      rs[i] = sp.log ? sp.lo * std::pow(sp.hi / sp.lo, t) : sp.lo + (sp.hi - sp.lo) * t;
    }
    std::vector<std::array<double, 4>> c(n + 1);
    std::vector<double> s4(n + 1), scale4(n + 1);
    parallel_index(n + 1, [&](int i) {
      c[i] = bulk_poly(prof, rs[i], &s4[i]);
      Jet6 w0, w1;
      prof.wR_scaled(rs[i], w0, w1);
      scale4[i] = std::pow(2 * w0[1], 4);
    });
    RegionMargin m;
    m.name = sp.name;
    m.r_lo = sp.lo;
    m.r_hi = sp.hi;
    double best = (sp.name == "third_away" || sp.name == "almost_infinity") ? -kInf : kInf;
    for (int i = 0; i <= n; ++i) {
      const double r = rs[i];
      const double val = ((c[i][3] * s + c[i][2]) * s + c[i][1]) * s + c[i][0];
      out.r.push_back(r);
      out.value.push_back(val);
      out.a3.push_back(c[i][3]);
      out.a2.push_back(c[i][2]);
      out.a1.push_back(c[i][1]);
      out.a0.push_back(c[i][0]);
      if (scale4[i] > 0) out.s4_residual = std::max(out.s4_residual, std::fabs(s4[i]) / scale4[i]);
      const double x = r / p.R;
      if (sp.name == "near" || sp.name == "bridge") {
        best = std::min(best, val / (s * s * s * std::pow(p.R, -9 * p.eps0) * std::pow(r, 4)));
      } else if (sp.name == "intermediate") {
        best = std::min(best, val / (p.eps0 * std::pow(r / p.R, 3 * p.eps0) * s * s * s));
      } else if (sp.name == "third_away") {
        Jet6 v0, v1;
        prof.vs(x, v0, v1);
        const double dv = v0[1] + v1[1] / s;
        const double env = std::pow(x, 4) * (std::fabs(dv) * s * s * s + s * s + s);
        best = std::max(best, -val / env);
      } else if (sp.name == "almost_infinity") {
        const double rel = val * p_jet(x)[0];  // r^4 A / f(R)
        best = std::max(best, -rel / std::pow(x, 4));
      } else {
        const double rel = val * p_jet(x)[0];
        best = std::min(best, rel - 0.5 * (d - 1) * (d - 3) * x);
      }
    }
    m.measured = best;
    if (sp.name == "third_away")
      m.margin = EnvelopeConstants::third_away - best;
    else if (sp.name == "almost_infinity")
      m.margin = EnvelopeConstants::almost_infinity - best;
    else
      m.margin = best;
    out.regions.push_back(m);
  }
  return out;
}

double weight_separation(const WeightProfile& prof, double delta, int samples) {
  if (!(prof.r_ergo > 0)) throw UnsupportedError("weight separation needs a nonempty ergoregion");
  const auto& p = prof.params;
  auto wr = [&](double r) {
    Jet6 w0, w1;
    prof.wR(r, w0, w1);
    return w0[0] + w1[0] / p.s;
  };
  double inner = -kInf, outer = kInf;
  const double a = prof.model.r_min, b = prof.r_ergo + delta;
  for (int i = 0; i <= samples; ++i) inner = std::max(inner, wr(a + (b - a) * i / samples));
  const double c = prof.r_ergo + 2 * delta;
  for (int i = 0; i <= samples; ++i) outer = std::min(outer, wr(c * std::pow(p.R / c, double(i) / samples)));
  return (outer - inner) * std::pow(p.R, 3 * p.eps0);
}

// ---------------------------------------------------------------- multiplier identity

namespace {

struct Column {
  double r, f, f1, f2, h, boxf, A, thR, Th;
  double gtt_inv, gtp_inv, gpp_inv;
  double Htt, Htp, Hpp;
};

Column column(const WeightProfile& prof, double r) {
  const auto& p = prof.params;
  Column c;
  c.r = r;
  const Jet6 f = jexp(prof.logf(r, p.s));
  c.f = f[0];
  c.f1 = f[1];
  c.f2 = f[2];
  const auto k = h_over_f(prof, r, p.s);
  c.h = f[0] * k[0] / (r * r);
  c.boxf = f[2] + f[1] / r;
  c.A = f[0] * bulk_direct(prof, r, p.s) / std::pow(r, 4);
  const Cutoffs cu = cutoffs(p, r);
  c.thR = cu.theta_R[0];
  c.Th = cu.Theta0[0] * cu.theta_R[0];
  const double C = prof.model.kind == ModelKind::HydroVortex ? prof.model.C : 0.0;
  c.gtt_inv = -1.0;
  c.gtp_inv = -C / (r * r);
  c.gpp_inv = (r * r - C * C) / std::pow(r, 4);
  // H_ab = 1/2 d_r g_ab f'
  c.Htt = 0.5 * (-2 * C * C / std::pow(r, 3)) * f[1];
  c.Htp = 0.0;
  c.Hpp = 0.5 * (2 * r) * f[1];
  return c;
}

struct PulseEval {
  const ManufacturedPulse& p;
  cd u(double t, double r) const {
    const double y = (r - p.rc) / p.sigma;
    return std::exp(cd(0, -p.omega * t)) * (1 + p.growth * t * t) * std::exp(-y * y);
  }
  cd ut(double t, double r) const {
    const double y = (r - p.rc) / p.sigma;
    return std::exp(cd(0, -p.omega * t)) * (cd(0, -p.omega) * (1 + p.growth * t * t) + 2 * p.growth * t) *
           std::exp(-y * y);
  }
  cd ur(double t, double r) const { return u(t, r) * (-2 * (r - p.rc) / (p.sigma * p.sigma)); }
};

// H(X, conj X) for a covector X = (X_t, X_r, X_phi)
double hess(const Column& c, cd Xt, cd Xr, cd Xp) {
  const cd Ut = c.gtt_inv * Xt + c.gtp_inv * Xp;
  const cd Up = c.gtp_inv * Xt + c.gpp_inv * Xp;
  return c.f2 * std::norm(Xr) + c.Htt * std::norm(Ut) + 2 * c.Htp * std::real(Ut * std::conj(Up)) +
         c.Hpp * std::norm(Up);
}

double grad2(const Column& c, cd Xt, cd Xr, cd Xp) {
  return c.gtt_inv * std::norm(Xt) + 2 * c.gtp_inv * std::real(Xt * std::conj(Xp)) + c.gpp_inv * std::norm(Xp) +
         std::norm(Xr);
}

}  // namespace

IdentityReport multiplier_identity_residual(const WeightProfile& prof, const ManufacturedPulse& pulse, double tau1,
                                            double tau2, double h) {
  const double a = pulse.rc - pulse.support * pulse.sigma, b = pulse.rc + pulse.support * pulse.sigma;
  if (a - h <= prof.model.r_min || b + h >= prof.model.r_max)
    throw DomainError("pulse support touches the domain boundary");
  if (!(tau2 > tau1) || !(h > 0)) throw std::invalid_argument("need tau2 > tau1 and h > 0");
  const int nr = std::max(2, static_cast<int>(std::lround((b - a) / h)));
  const int nt = std::max(2, static_cast<int>(std::lround((tau2 - tau1) / h)));
  const double hr = (b - a) / nr, ht = (tau2 - tau1) / nt;
  const double m = pulse.m;
  PulseEval pe{pulse};
  const double twopi = 2 * std::acos(-1.0);

  std::vector<Column> cols(nr + 1);
  parallel_index(nr + 1, [&](int i) { cols[i] = column(prof, a + i * hr); });

  std::vector<double> bulk_i(nr + 1), src_i(nr + 1);
  parallel_index(nr + 1, [&](int i) {
    const Column& c = cols[i];
    const double r = c.r;
    double bulk = 0.0, src = 0.0;
    for (int j = 0; j <= nt; ++j) {
      const double t = tau1 + j * ht;
      const double wt = (j == 0 || j == nt) ? 0.5 : 1.0;
      const cd u = pe.u(t, r), ut = pe.ut(t, r), ur = pe.ur(t, r);
      const cd up = cd(0, m) * u;
      const double sf = std::sqrt(c.f);
      const cd vr = sf * ur + 0.5 / sf * c.f1 * u;
      double I = c.thR * 2.0 / c.f * hess(c, sf * ut, vr, sf * up);
      I += -2 * c.Th / r / c.f * c.f1 * std::norm(vr);
      I += 2 * (1 - c.thR) * hess(c, ut, ur, up);
      I += 2 * c.Th / r * c.f1 * std::norm(ur);
      I += -2 * c.h * grad2(c, ut, ur, up);
      I += c.A * std::norm(u);
      // G = box phi by central differences
      const cd u_tt = (pe.u(t + ht, r) - 2.0 * u + pe.u(t - ht, r)) / (ht * ht);
      const cd u_t = (pe.u(t + ht, r) - pe.u(t - ht, r)) / (2 * ht);
      const cd u_rr = (pe.u(t, r + hr) - 2.0 * u + pe.u(t, r - hr)) / (hr * hr);
      const cd u_r = (pe.u(t, r + hr) - pe.u(t, r - hr)) / (2 * hr);
      const cd G = c.gtt_inv * u_tt + 2.0 * cd(0, m) * c.gtp_inv * u_t - m * m * c.gpp_inv * u + u_rr + u_r / r;
      const cd M = 2 * c.f1 * ur + (c.boxf - 2 * c.h) * u;
      bulk += wt * I;
      src += wt * std::real(G * std::conj(M));
    }
    bulk_i[i] = bulk * ht * r;
    src_i[i] = src * ht * r;
  });
  auto Jt = [&](double t) {
    double acc = 0.0;
    for (int i = 0; i <= nr; ++i) {
      const Column& c = cols[i];
      const double r = c.r;
      const cd u = pe.u(t, r), ut = pe.ut(t, r), ur = pe.ur(t, r);
      const cd M = 2 * c.f1 * ur + (c.boxf - 2 * c.h) * u;
      const double J = std::real(std::conj(M) * (c.gtt_inv * ut + c.gtp_inv * cd(0, m) * u));
      acc += ((i == 0 || i == nr) ? 0.5 : 1.0) * J * r;
    }
    return acc * hr;
  };
  IdentityReport rep;
  rep.h = h;
  for (int i = 0; i <= nr; ++i) {
    const double w = (i == 0 || i == nr) ? 0.5 : 1.0;
    rep.bulk += w * bulk_i[i] * hr;
    rep.source += w * src_i[i] * hr;
  }
  rep.bulk *= twopi;
  rep.source *= twopi;
  rep.boundary = twopi * (Jt(tau2) - Jt(tau1));
  const double scale = std::max({std::fabs(rep.bulk), std::fabs(rep.source), std::fabs(rep.boundary), 1e-300});
  rep.residual = std::fabs(rep.bulk + rep.source - rep.boundary) / scale;
  if (scale == 1e-300) rep.residual = 0.0;
  return rep;
}

IdentityConvergence identity_convergence(const WeightProfile& prof, const ManufacturedPulse& pulse, double tau1,
                                         double tau2, const std::vector<double>& steps) {
  IdentityConvergence out;
  for (double h : steps) out.levels.push_back(multiplier_identity_residual(prof, pulse, tau1, tau2, h));
  for (size_t i = 1; i < out.levels.size(); ++i)
    out.orders.push_back(std::log(out.levels[i - 1].residual / out.levels[i].residual) /
                         std::log(out.levels[i - 1].h / out.levels[i].h));
  if (!out.orders.empty()) out.observed_order = out.orders.back();
  return out;
}

WeightProfile moderate_profile(const SpacetimeModel& model, double s) {
  CarlemanParams p;
  p.eps0 = 0.5;
  p.R = 4096.0;
  p.s = s;
  p.l = 2.0;
  p.C1 = 1000.0;
  return build_wR(model, p);
}

// ---------------------------------------------------------------- inequality

InequalityReport carleman_inequality_check(const SpacetimeModel& model, const TimeSeriesField& psi,
                                           const TimeSeriesField& dpsi, const CarlemanParams& params, double delta1,
                                           double tau1, double tau2, double R1, double E_log) {
  params.validate();
  psi.validate();
  if (dpsi.nt != psi.nt || dpsi.r.size() != psi.r.size()) throw std::invalid_argument("series shapes differ");
  if (!(tau2 > tau1)) throw std::invalid_argument("need tau2 > tau1");
  const double C = model.kind == ModelKind::HydroVortex ? model.C : 0.0;
  const int nr = psi.nr();
  const double m = psi.m;
  InequalityReport rep;
  for (int j = 0; j < psi.nt; ++j) {
    const double t = psi.time(j);
    if (t < tau1 - 1e-12 || t > tau2 + 1e-12) continue;
    const double wt = (std::fabs(t - tau1) < 1e-12 || std::fabs(t - tau2) < 1e-12) ? 0.5 : 1.0;
    for (int i = 0; i < nr; ++i) {
      const double r = psi.r[i];
      const int il = std::max(0, i - 1), ih = std::min(nr - 1, i + 1);
      const cd pr = (psi.at(j, ih) - psi.at(j, il)) / (psi.r[ih] - psi.r[il]);
      const cd u = psi.at(j, i);
      const cd Nu = dpsi.at(j, i) + cd(0, m * C / (r * r)) * u;
      const double dens = 0.5 * std::norm(Nu) + 0.5 * std::norm(pr) + 0.5 * m * m * std::norm(u) / (r * r) +
                          std::norm(u);
      const double dr = 0.5 * (psi.r[ih] - psi.r[il]);
      const double w = wt * psi.dt * dr * r * 2 * std::acos(-1.0) * dens;
      if (r >= C + 2 * delta1 && r <= R1) rep.lhs += w;
      if (r <= C + delta1) rep.ergo_mass += w;
    }
  }
  const double om = params.omega_k;
  rep.envelope = (1 + std::pow(om, -10)) * std::pow(std::log(2 + tau2), 4) *
                 std::exp(std::max({om, std::pow(om, -params.eps0), -std::log(params.delta2)})) * E_log;
  rep.rhs = params.delta2 * rep.ergo_mass + EnvelopeConstants::inequality * rep.envelope;
  rep.ratio = rep.rhs > 0 ? rep.lhs / rep.rhs : (rep.lhs > 0 ? kInf : 0.0);
  rep.required_constant = rep.envelope > 0 ? std::max(0.0, rep.lhs - params.delta2 * rep.ergo_mass) / rep.envelope : 0.0;
  rep.holds = rep.ratio <= 1.0;
  return rep;
}

}  // namespace ergo
