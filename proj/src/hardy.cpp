#include "ergo/hardy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "ergo/cutoff.hpp"

namespace ergo {
namespace {

double sphere_area(int d) { return d == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi; }

void check_function(const TestFunction& f) {
  if (f.d != 2 && f.d != 3) throw std::invalid_argument("hardy: dimension must be 2 or 3");
  if (f.r.size() < 3 || f.u.size() != f.r.size() || f.du.size() != f.r.size())
    throw std::invalid_argument("hardy: inconsistent samples");
  if (!(f.r.front() > 0.0)) throw std::invalid_argument("hardy: R1 must be positive");
  for (size_t i = 0; i + 1 < f.r.size(); ++i)
    if (!(f.r[i + 1] > f.r[i])) throw std::invalid_argument("hardy: radii must increase");
  for (size_t i = 0; i < f.r.size(); ++i)
    if (!std::isfinite(std::abs(f.u[i])) || !std::isfinite(std::abs(f.du[i])))
      throw std::invalid_argument("hardy: non-finite sample");
}

template <class F>
double trapezoid(const std::vector<double>& r, F&& g) {
  double s = 0.0, prev = g(0);
  for (size_t i = 1; i < r.size(); ++i) {
    double cur = g(i);
    s += 0.5 * (prev + cur) * (r[i] - r[i - 1]);
    prev = cur;
  }
  return s;
}

HardyResult finish(double lhs, double bulk, double b2, double C) {
  HardyResult h;
  h.lhs = lhs;
  h.bulk = bulk;
  h.boundary2 = b2;
  h.rhs = C * bulk + b2;
  h.ratio = h.rhs > 0.0 ? lhs / h.rhs : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  if (lhs <= b2)
    h.needed_C = 0.0;
  else
    h.needed_C = bulk > 0.0 ? (lhs - b2) / bulk : std::numeric_limits<double>::infinity();
  return h;
}

// Grid uniform in s, with r = e^s (polynomial form) or r = exp(e^s) (log form).
TestFunction make_grid(int d, double R1, double R2, int N, bool loglog) {
  if (!(R1 > 0.0 && R2 > R1)) throw std::invalid_argument("hardy: need 0 < R1 < R2");
  if (loglog && !(R1 > 1.0)) throw std::invalid_argument("hardy: logarithmic form needs R1 > 1");
  if (N < 16) throw std::invalid_argument("hardy: grid too small");
  TestFunction f;
  f.d = d;
  double s1 = loglog ? std::log(std::log(R1)) : std::log(R1);
  double s2 = loglog ? std::log(std::log(R2)) : std::log(R2);
  f.r.resize(N + 1);
  for (int i = 0; i <= N; ++i) {
    double s = s1 + (s2 - s1) * i / N;
    f.r[i] = loglog ? std::exp(std::exp(s)) : std::exp(s);
  }
  f.r.front() = R1;
  f.r.back() = R2;
  f.u.assign(N + 1, cd(0.0));
  f.du.assign(N + 1, cd(0.0));
  return f;
}

// S(1 - |x|) and its x-derivative
std::pair<double, double> bump(double x) {
  double ax = std::abs(x);
  if (ax >= 1.0) return {0.0, 0.0};
  double sgn = x < 0.0 ? -1.0 : 1.0;
  return {smoothstep(1.0 - ax), -sgn * smoothstep(1.0 - ax, 1)};
}

// 1 up to rho2 - w, 0 at rho2 (rho is log r); value and d/drho
std::pair<double, double> outer_window(double rho, double rho2, double w) {
  double x = (rho2 - rho) / w;
  return {smoothstep(x), -smoothstep(x, 1) / w};
}

struct Range {
  double R1, R2;
};

Range polynomial_range(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> lr1(-1.0, 1.0), len(1.0, 6.0);
  double R1 = std::exp(lr1(gen));
  return {R1, R1 * std::exp(len(gen))};
}

Range log_range(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> rho1(0.2, 1.5), stretch(1.0, 3.0);
  double p1 = rho1(gen);
  return {std::exp(p1), std::exp(p1 * std::exp(stretch(gen)))};
}

TestFunction bump_function(int d, double R1, double R2, int N, std::mt19937_64& gen, bool vanish, bool loglog) {
  TestFunction f = make_grid(d, R1, R2, N, loglog);
  f.vanishes_at_R2 = vanish;
  f.label = "bumps";
  double rho1 = std::log(R1), rho2 = std::log(R2), L = rho2 - rho1;
  std::uniform_int_distribution<int> count(1, 6);
  std::uniform_real_distribution<double> unit(0.0, 1.0), coef(-1.0, 1.0);
  int nb = count(gen);
  struct B {
    double c, w;
    cd a;
  };
  std::vector<B> bumps;
  for (int j = 0; j < nb; ++j) {
    double w = L * (0.03 + 0.5 * unit(gen));
    // centres may sit left of R1 so the inner trace is nonzero; the support stays inside (., R2)
    double lo = rho1 - 0.5 * w, hi = vanish ? rho2 - w : rho2 + 0.5 * w;
    double c = lo + (hi - lo) * unit(gen);
    bumps.push_back({c, w, cd(coef(gen), coef(gen))});
  }
  cd plateau = vanish ? cd(0.0) : cd(coef(gen), coef(gen));
  for (size_t i = 0; i < f.r.size(); ++i) {
    double rho = std::log(f.r[i]);
    cd u = plateau, du = 0.0;
    for (const auto& b : bumps) {
      auto [v, dv] = bump((rho - b.c) / b.w);
      u += b.a * v;
      du += b.a * dv / b.w;
    }
    f.u[i] = u;
    f.du[i] = du / f.r[i];
  }
  if (vanish) f.u.back() = 0.0;
  return f;
}

// Inner plateau of height 1 switched off over a ramp before R2 (log form).
TestFunction plateau_function(int d, double R1, double R2, int N, double ramp_fraction) {
  TestFunction f = make_grid(d, R1, R2, N, true);
  f.label = "plateau";
  double rho2 = std::log(R2), w = ramp_fraction * (rho2 - std::log(R1));
  for (size_t i = 0; i < f.r.size(); ++i) {
    auto [v, dv] = outer_window(std::log(f.r[i]), rho2, w);
    f.u[i] = v;
    f.du[i] = dv / f.r[i];
  }
  return f;
}

template <class Check>
Calibration calibrate(int count, Check&& needed_for) {
  if (count < 1) throw std::invalid_argument("hardy: calibration count must be positive");
  Calibration c;
  c.count = count;
  for (int i = 0; i < count; ++i) {
    auto [needed, label] = needed_for(i);
    if (needed > c.max_needed) {
      c.max_needed = needed;
      c.worst_label = label;
    }
  }
  c.C = 1.05 * c.max_needed;
  return c;
}

}  // namespace

HardyResult hardy_polynomial_check(const TestFunction& f, double a, double C_a) {
  if (!(a > 0.0)) throw std::invalid_argument("hardy: a must be positive");
  check_function(f);
  const int d = f.d;
  const double w = sphere_area(d);
  const auto& r = f.r;
  double lhs = w * trapezoid(r, [&](size_t i) { return std::pow(r[i], a - 1.0) * std::norm(f.u[i]); });
  double bulk = w * trapezoid(r, [&](size_t i) { return std::pow(r[i], a + 1.0) * std::norm(f.du[i]); });
  // R^{-(d-1)+a} |u(R)|^2 times the sphere area R^{d-1} |S^{d-1}|
  lhs += w * std::pow(r.front(), a) * std::norm(f.u.front());
  double b2 = w * std::pow(r.back(), a) * std::norm(f.u.back());
  return finish(lhs, bulk, b2, C_a);
}

HardyResult hardy_log_check(const TestFunction& f, double C) {
  check_function(f);
  if (!(f.r.front() > 1.0)) throw std::invalid_argument("hardy: logarithmic form needs R1 > 1");
  const double w = sphere_area(f.d);
  const auto& r = f.r;
  double lhs = w * trapezoid(r, [&](size_t i) { return std::norm(f.u[i]) / r[i]; });
  double bulk = w * trapezoid(r, [&](size_t i) {
    double l = std::log(r[i]);
    return r[i] * l * l * std::norm(f.du[i]);
  });
  lhs += w * std::log(r.front()) * std::norm(f.u.front());
  double b2 = w * std::log(r.back()) * std::norm(f.u.back());
  return finish(lhs, bulk, b2, C);
}

TestFunction random_bump_function(int d, double R1, double R2, int N, std::uint64_t seed, bool vanish_at_R2) {
  std::mt19937_64 gen(seed);
  return bump_function(d, R1, R2, N, gen, vanish_at_R2, false);
}

TestFunction power_law_function(int d, double R1, double R2, int N, double a) {
  TestFunction f = make_grid(d, R1, R2, N, false);
  f.label = "power-law";
  double rho2 = std::log(R2), w = 0.15 * (rho2 - std::log(R1));
  for (size_t i = 0; i < f.r.size(); ++i) {
    double r = f.r[i];
    auto [v, dv] = outer_window(std::log(r), rho2, w);
    double p = std::pow(r, -0.5 * a);
    f.u[i] = p * v;
    f.du[i] = (-0.5 * a * p * v + p * dv) / r;
  }
  return f;
}

TestFunction log_profile_function(int d, double R1, double R2, int N) {
  TestFunction f = make_grid(d, R1, R2, N, true);
  f.label = "log-profile";
  double rho2 = std::log(R2);
  double s1 = std::log(std::log(R1)), s2 = std::log(rho2);
  for (size_t i = 0; i < f.r.size(); ++i) {
    double r = f.r[i], rho = std::log(r);
    // the window acts in log log r, where the profile is a power law
    double x = (s2 - std::log(rho)) / (0.15 * (s2 - s1));
    double v = smoothstep(x), dv = -smoothstep(x, 1) / (0.15 * (s2 - s1)) / rho;
    double p = 1.0 / std::sqrt(rho);
    f.u[i] = p * v;
    f.du[i] = (-0.5 * p / rho * v + p * dv) / r;
  }
  return f;
}

namespace {

// Maximiser of (int e^{a s} u^2 ds + e^{a s1} u(s1)^2) / int e^{a s} u_s^2 ds with
// u(s2) = 0 on the uniform s grid of f. Both Hardy forms reduce to this quotient:
// s = log r (polynomial, exponent a) and s = log log r (logarithmic, exponent 1).
// P1 elements and power iteration on K^{-1} M.
void fill_extremal(TestFunction& f, double s1, double s2, double a, bool loglog) {
  const int N = static_cast<int>(f.r.size()) - 1;
  const double h = (s2 - s1) / N;
  const int n = N;  // unknowns 0..N-1
  std::vector<double> Kd(n, 0.0), Ko(n, 0.0), Md(n, 0.0), Mo(n, 0.0);
  for (int e = 0; e < N; ++e) {
    const double lo = s1 + e * h;
    const double k = (std::exp(a * (lo + h)) - std::exp(a * lo)) / (a * h * h);
    const double m = std::exp(a * (lo + 0.5 * h)) * h;
    for (int i : {e, e + 1})
      if (i < n) {
        Kd[i] += k;
        Md[i] += m / 3.0;
      }
    if (e + 1 < n) {
      Ko[e] -= k;
      Mo[e] += m / 6.0;
    }
  }
  Md[0] += std::exp(a * s1);
  std::vector<double> x(n), y(n), cp(n), dp(n);
  for (int i = 0; i < n; ++i) x[i] = 1.0 - static_cast<double>(i) / n;
  for (int it = 0; it < 400; ++it) {
    for (int i = 0; i < n; ++i)
      y[i] = Md[i] * x[i] + (i > 0 ? Mo[i - 1] * x[i - 1] : 0.0) + (i + 1 < n ? Mo[i] * x[i + 1] : 0.0);
    cp[0] = n > 1 ? Ko[0] / Kd[0] : 0.0;
    dp[0] = y[0] / Kd[0];
    for (int i = 1; i < n; ++i) {
      const double den = Kd[i] - Ko[i - 1] * cp[i - 1];
      cp[i] = i + 1 < n ? Ko[i] / den : 0.0;
      dp[i] = (y[i] - Ko[i - 1] * dp[i - 1]) / den;
    }
    x[n - 1] = dp[n - 1];
    for (int i = n - 2; i >= 0; --i) x[i] = dp[i] - cp[i] * x[i + 1];
    double big = 0.0;
    for (double v : x) big = std::max(big, std::fabs(v));
    for (auto& v : x) v /= big;
  }
  for (int i = 0; i <= N; ++i) f.u[i] = i < n ? x[i] : 0.0;
  for (int i = 0; i <= N; ++i) {
    const int lo = std::max(0, i - 1), hi = std::min(N, i + 1);
    const double us = (f.u[hi].real() - f.u[lo].real()) / ((hi - lo) * h);
    const double ds_dr = loglog ? 1.0 / (f.r[i] * std::log(f.r[i])) : 1.0 / f.r[i];
    f.du[i] = us * ds_dr;
  }
}

}  // namespace

TestFunction extremal_polynomial_function(int d, double R1, double R2, int N, double a) {
  if (!(a > 0.0)) throw std::invalid_argument("hardy: a must be positive");
  TestFunction f = make_grid(d, R1, R2, N, false);
  f.label = "poly-extremal";
  fill_extremal(f, std::log(R1), std::log(R2), a, false);
  return f;
}

TestFunction extremal_log_function(int d, double R1, double R2, int N) {
  TestFunction f = make_grid(d, R1, R2, N, true);
  f.label = "log-extremal";
  fill_extremal(f, std::log(std::log(R1)), std::log(std::log(R2)), 1.0, true);
  return f;
}

TestFunction constant_function(int d, double R1, double R2, int N) {
  TestFunction f = make_grid(d, R1, R2, N, false);
  f.label = "constant";
  f.vanishes_at_R2 = false;
  std::fill(f.u.begin(), f.u.end(), cd(1.0));
  return f;
}

TestFunction rescale(const TestFunction& f, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("hardy: scale must be positive");
  TestFunction g = f;
  for (auto& r : g.r) r *= lambda;
  for (auto& du : g.du) du /= lambda;
  return g;
}

Calibration calibrate_polynomial(int d, double a, int count, int N, std::uint64_t seed) {
  // below a = 1 the inequality needs u(R2) = 0 (a constant already breaks it)
  const bool allow_trace = a > 1.0;
  std::mt19937_64 gen(seed);
  return calibrate(count, [&](int i) -> std::pair<double, std::string> {
    Range R = polynomial_range(gen);
    TestFunction f;
    if (i % 10 == 0)
      f = power_law_function(d, R.R1, R.R2, N, a);
    else if (i % 10 == 3)
      f = extremal_polynomial_function(d, R.R1, R.R2, N, a);
    else
      f = bump_function(d, R.R1, R.R2, N, gen, !(allow_trace && i % 2 == 1), false);
    return {hardy_polynomial_check(f, a, 1.0).needed_C, f.label};
  });
}

Calibration calibrate_log(int d, int count, int N, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  return calibrate(count, [&](int i) -> std::pair<double, std::string> {
    Range R = log_range(gen);
    TestFunction f;
    if (i % 10 == 0)
      f = log_profile_function(d, R.R1, R.R2, N);
    else if (i % 10 == 3)
      f = extremal_log_function(d, R.R1, R.R2, N);
    else if (i % 10 == 5)
      f = plateau_function(d, R.R1, R.R2, N, 0.1 + 0.4 * std::uniform_real_distribution<double>(0, 1)(gen));
    else
      f = bump_function(d, R.R1, R.R2, N, gen, true, true);
    return {hardy_log_check(f, 1.0).needed_C, f.label};
  });
}

SuiteReport polynomial_suite(int d, double a, double C_a, int count, int N, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  SuiteReport s;
  s.count = count;
  for (int i = 0; i < count; ++i) {
    Range R = polynomial_range(gen);
    TestFunction f = bump_function(d, R.R1, R.R2, N, gen, !(a > 1.0 && i % 2 == 1), false);
    double ratio = hardy_polynomial_check(f, a, C_a).ratio;
    s.max_ratio = std::max(s.max_ratio, ratio);
    if (ratio > 1.0) ++s.violations;
  }
  return s;
}

SuiteReport log_suite(int d, double C, int count, int N, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  SuiteReport s;
  s.count = count;
  for (int i = 0; i < count; ++i) {
    Range R = log_range(gen);
    TestFunction f = bump_function(d, R.R1, R.R2, N, gen, true, true);
    double ratio = hardy_log_check(f, C).ratio;
    s.max_ratio = std::max(s.max_ratio, ratio);
    if (ratio > 1.0) ++s.violations;
  }
  return s;
}

}  // namespace ergo
