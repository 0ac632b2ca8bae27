#include "ergo/frequency.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "ergo/cutoff.hpp"

namespace ergo {

std::mutex& fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
const cd kI(0.0, 1.0);

// One-dimensional complex transform of length P with its own buffer.
class Fft {
 public:
  explicit Fft(int P) : P_(P) {
    buf_ = fftw_alloc_complex(P);
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fwd_ = fftw_plan_dft_1d(P, buf_, buf_, FFTW_FORWARD, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_1d(P, buf_, buf_, FFTW_BACKWARD, FFTW_ESTIMATE);
  }
  ~Fft() {
    {
      std::lock_guard<std::mutex> lock(fftw_planner_mutex());
      fftw_destroy_plan(fwd_);
      fftw_destroy_plan(inv_);
    }
    fftw_free(buf_);
  }
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  cd* data() { return reinterpret_cast<cd*>(buf_); }
  void forward() { fftw_execute(fwd_); }
  void inverse() { fftw_execute(inv_); }
  int size() const { return P_; }

 private:
  int P_;
  fftw_complex* buf_;
  fftw_plan fwd_, inv_;
};

double bin_frequency(int j, int P, double dt) {
  const int f = (j <= P / 2) ? j : j - P;
  return kTwoPi * f / (P * dt);
}

// Multiplies the time transform of every radial column by sym(omega).
TimeSeriesField apply_symbol(const TimeSeriesField& in, const std::function<cd(double)>& sym) {
  in.validate();
  TimeSeriesField out = in;
  const int P = 4 * in.nt;
  const int nr = in.nr();
  Fft fft(P);
  std::vector<cd> s(P);
  for (int j = 0; j < P; ++j) s[j] = sym(bin_frequency(j, P, in.dt));
  cd* b = fft.data();
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < P; ++j) b[j] = (j < in.nt) ? in.at(j, i) : cd(0.0);
    fft.forward();
    for (int j = 0; j < P; ++j) b[j] *= s[j];
    fft.inverse();
    for (int j = 0; j < in.nt; ++j) out.at(j, i) = b[j] / double(P);
  }
  return out;
}

std::function<cd(double)> component_symbol(const MollifierBank& bank, Component which, int k) {
  switch (which) {
    case Component::Band:
      if (k < 0 || k > bank.n) throw std::out_of_range("band index out of range");
      return [&bank, k](double w) { return cd(bank.zeta_hat(k, w)); };
    case Component::LowPass: return [&bank](double w) { return cd(bank.zeta_le_hat(w)); };
    case Component::HighPass: return [&bank](double w) { return cd(1.0 - bank.zeta_le_hat(w)); };
  }
  throw std::invalid_argument("unknown component");
}

double radial_weight(const std::vector<double>& r, int i) {
  const int n = static_cast<int>(r.size());
  if (n == 1) return 1.0;
  double w = 0.0;
  if (i > 0) w += 0.5 * (r[i] - r[i - 1]);
  if (i < n - 1) w += 0.5 * (r[i + 1] - r[i]);
  return w * r[i];
}

std::pair<int, int> interior(const TimeSeriesField& f, double margin) {
  const int skip = static_cast<int>(std::ceil(margin / f.dt - 1e-9));
  const int a = std::max(0, skip), b = std::min(f.nt, f.nt - skip);
  if (b <= a) throw std::invalid_argument("margin leaves no interior window");
  return {a, b};
}

}  // namespace

double MollifierBank::zeta_hat(int k, double w) const {
  if (k == 0) return theta3(w / omega[0]);
  return theta3(w / omega[k]) - theta3(w / omega[k - 1]);
}

double MollifierBank::zeta_le_hat(double w) const { return theta3(w / omega[n]); }

double MollifierBank::xi_hat(int k, double w) const {
  if (k == 0) return theta3(w / (2.0 * omega[0]));
  return theta3(w / (2.0 * omega[k])) - theta3(2.0 * w / omega[k - 1]);
}

cd MollifierBank::xi_tilde_hat(int k, double w) const {
  if (k == 0) throw std::invalid_argument("the antiderivative kernel needs k >= 1");
  if (w == 0.0) return 0.0;
  return xi_hat(k, w) / (kI * w);
}

std::vector<double> MollifierBank::zeta_kernel(int k, double dt, int P) const {
  Fft fft(P);
  cd* b = fft.data();
  for (int j = 0; j < P; ++j) b[j] = zeta_hat(k, bin_frequency(j, P, dt));
  fft.inverse();
  std::vector<double> out(P);
  for (int j = 0; j < P; ++j) out[(j + P / 2) % P] = b[j].real() / (P * dt);
  return out;
}

MollifierBank make_bank(double omega0, double omega_plus) {
  if (!(omega0 > 0.0 && omega0 < 1.0)) throw std::invalid_argument("omega0 must lie in (0,1)");
  if (!(omega_plus > 1.0)) throw std::invalid_argument("omega_plus must exceed 1");
  MollifierBank b;
  b.omega0 = omega0;
  b.omega_plus = omega_plus;
  b.n = static_cast<int>(std::ceil(std::log2(omega_plus / omega0) - 1e-12));
  for (int k = 0; k <= b.n; ++k) b.omega.push_back(std::ldexp(omega0, k));
  return b;
}

void TimeSeriesField::validate() const {
  if (nt <= 0 || r.empty()) throw std::invalid_argument("empty time series");
  if (!(dt > 0.0)) throw std::invalid_argument("time series needs dt > 0");
  if (data.size() != static_cast<size_t>(nt) * r.size()) throw std::invalid_argument("time series size mismatch");
  for (const auto& z : data)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw std::invalid_argument("non-finite sample");
}

TimeSeriesField series_from_snapshots(const std::vector<std::vector<FieldSnapshot>>& snaps, int mode_index,
                                      bool time_derivative) {
  if (snaps.size() < 2) throw std::invalid_argument("need at least two snapshots");
  TimeSeriesField f;
  const auto& first = snaps.front().at(mode_index);
  f.t0 = first.t;
  f.dt = snaps[1].at(mode_index).t - first.t;
  f.nt = static_cast<int>(snaps.size());
  f.r = first.grid->r;
  f.m = first.m;
  f.data.resize(static_cast<size_t>(f.nt) * f.r.size());
  for (int j = 0; j < f.nt; ++j) {
    const auto& s = snaps[j].at(mode_index);
    if (std::fabs(s.t - (f.t0 + j * f.dt)) > 1e-6 * f.dt) throw std::invalid_argument("snapshots are not uniform in time");
    const auto& src = time_derivative ? s.dphi_dt : s.phi;
    std::copy(src.begin(), src.end(), f.data.begin() + static_cast<long>(j) * f.nr());
  }
  return f;
}

double distorted_time(double t, double r, double R1) {
  const double x = r - R1;
  return t + 0.5 * theta1(x) * x;
}

double distorted_time_dr(double r, double R1) {
  const double x = r - R1;
  return 0.5 * (theta1(x, 1) * x + theta1(x));
}

double distorted_time_drr(double r, double R1) {
  const double x = r - R1;
  return 0.5 * theta1(x, 2) * x + theta1(x, 1);
}

TimeSeriesField temporal_cutoff(const TimeSeriesField& psi, double R1, double tau1) {
  psi.validate();
  double smax = -INFINITY;
  for (double r : psi.r) smax = std::max(smax, distorted_time(psi.time(psi.nt - 1), r, R1) - tau1);
  if (smax < 1.0)
    throw std::invalid_argument("insufficient recorded span: the cut-off never completes (need t_- >= tau1 + 1)");
  TimeSeriesField out = psi;
  for (int j = 0; j < psi.nt; ++j)
    for (int i = 0; i < psi.nr(); ++i) out.at(j, i) *= theta2(distorted_time(psi.time(j), psi.r[i], R1) - tau1);
  out.cutoff_applied = true;
  return out;
}

double kernel_tail_fraction(const MollifierBank& bank, Component which, int k, double span, double dt) {
  if (which == Component::HighPass) which = Component::LowPass;  // delta minus the low-pass kernel
  int P = 1 << 12;
  while (P * dt < 8.0 * span && P < (1 << 22)) P <<= 1;
  std::vector<double> ker;
  if (which == Component::Band) {
    ker = bank.zeta_kernel(k, dt, P);
  } else {
    MollifierBank low = bank;  // zeta_{<= omega+} is theta3(w / omega_n): reuse band 0 with omega_0 = omega_n
    low.omega = {bank.omega[bank.n]};
    ker = low.zeta_kernel(0, dt, P);
  }
  double total = 0.0, tail = 0.0;
  for (int j = 0; j < P; ++j) {
    const double t = (j - P / 2) * dt;
    total += std::fabs(ker[j]);
    if (std::fabs(t) > span) tail += std::fabs(ker[j]);
  }
  return total > 0.0 ? tail / total : 0.0;
}

TimeSeriesField project_component(const TimeSeriesField& psi_c, const MollifierBank& bank, Component which, int k,
                                  double tail_tolerance) {
  psi_c.validate();
  const double span = psi_c.nt * psi_c.dt;
  const double tail = kernel_tail_fraction(bank, which, k, span, psi_c.dt);
  if (tail > tail_tolerance) {
    double need = span;
    while (kernel_tail_fraction(bank, which, k, need, psi_c.dt) > tail_tolerance && need < 1e7 * psi_c.dt) need *= 1.5;
    throw std::runtime_error("window too short: kernel tail " + std::to_string(tail) + " beyond span " +
                             std::to_string(span) + "; required span about " + std::to_string(need));
  }
  return apply_symbol(psi_c, component_symbol(bank, which, k));
}

TimeSeriesField spectral_time_derivative(const TimeSeriesField& psi) {
  return apply_symbol(psi, [](double w) { return kI * w; });
}

double spacetime_norm2(const TimeSeriesField& psi, double margin, const std::vector<double>& theta) {
  const auto [a, b] = interior(psi, margin);
  double acc = 0.0;
  for (int j = a; j < b; ++j)
    for (int i = 0; i < psi.nr(); ++i) {
      const double th = theta.empty() ? 1.0 : theta[i];
      acc += th * radial_weight(psi.r, i) * std::norm(psi.at(j, i));
    }
  return acc * psi.dt;
}

SandwichReport sandwich_check(const TimeSeriesField& psi_k, const TimeSeriesField& dt_psi_k, const MollifierBank& bank,
                              int k, const std::vector<double>& theta, double margin) {
  const double num = spacetime_norm2(dt_psi_k, margin, theta);
  const double den = spacetime_norm2(psi_k, margin, theta);
  if (!(den > 0.0)) throw std::invalid_argument("sandwich_check: vanishing denominator");
  SandwichReport rep;
  rep.ratio = num / (bank.omega[k] * bank.omega[k] * den);
  rep.within = rep.ratio >= rep.lower && rep.ratio <= rep.upper;
  return rep;
}

ReproducingReport reproducing_check(const TimeSeriesField& psi_k, const MollifierBank& bank, int k, double margin) {
  ReproducingReport rep;
  const double base = spacetime_norm2(psi_k, margin);
  if (base == 0.0) return rep;
  auto diff_norm = [&](const TimeSeriesField& other) {
    TimeSeriesField d = psi_k;
    for (size_t n = 0; n < d.data.size(); ++n) d.data[n] -= other.data[n];
    return std::sqrt(spacetime_norm2(d, margin) / base);
  };
  rep.residual_xi = diff_norm(apply_symbol(psi_k, [&](double w) { return cd(bank.xi_hat(k, w)); }));
  if (k >= 1) {
    const TimeSeriesField tpsi = spectral_time_derivative(psi_k);
    rep.residual_xi_tilde = diff_norm(apply_symbol(tpsi, [&](double w) { return bank.xi_tilde_hat(k, w); }));
  }
  return rep;
}

TailDecayReport tail_decay_check(const TimeSeriesField& psi_k, int time_index, const std::vector<double>& radii) {
  if (time_index < 0 || time_index >= psi_k.nt) throw std::out_of_range("time index");
  TailDecayReport rep;
  const auto& r = psi_k.r;
  const int nr = psi_k.nr();
  for (double R : radii) {
    double acc = 0.0;
    for (int i = 0; i + 1 < nr; ++i) {
      const double rm = 0.5 * (r[i] + r[i + 1]);
      if (rm < R || rm > 2.0 * R) continue;
      const double h = r[i + 1] - r[i];
      const cd u = 0.5 * (psi_k.at(time_index, i) + psi_k.at(time_index, i + 1));
      const cd du = (psi_k.at(time_index, i + 1) - psi_k.at(time_index, i)) / h;
      acc += (std::norm(u) + std::norm(du)) * rm * h;
    }
    rep.R.push_back(R);
    rep.shell_energy.push_back(acc);
  }
  for (double q : {1.0, 2.0, 4.0}) {
    std::vector<double> w;
    bool mono = true;
    for (size_t n = 0; n < rep.R.size(); ++n) {
      w.push_back(std::pow(rep.R[n], q) * rep.shell_energy[n]);
      if (n > 0 && w[n] > w[n - 1]) mono = false;
    }
    rep.weighted.push_back(std::move(w));
    rep.monotone.push_back(mono);
  }
  return rep;
}

TimeSeriesField cutoff_source(const SpacetimeModel& model, const TimeSeriesField& psi, const TimeSeriesField& dt_psi,
                              double R1, double tau1) {
  psi.validate();
  if (dt_psi.nt != psi.nt || dt_psi.nr() != psi.nr()) throw std::invalid_argument("cutoff_source: shape mismatch");
  if (!model.two_plus_one()) throw UnsupportedError("cutoff_source works on 2+1 families");
  TimeSeriesField F = psi;
  const int nr = psi.nr();
  const double md = double(psi.m);
  for (int j = 0; j < psi.nt; ++j) {
    for (int i = 0; i < nr; ++i) {
      const double r = psi.r[i];
      const double s = distorted_time(psi.time(j), r, R1) - tau1;
      if (s <= 0.0 || s >= 1.0) {
        F.at(j, i) = 0.0;
        continue;
      }
      const double q1 = distorted_time_dr(r, R1), q2 = distorted_time_drr(r, R1);
      const double th1 = theta2(s, 1), th2 = theta2(s, 2);
      const double th_t = th1, th_tt = th2, th_r = th1 * q1, th_rr = th2 * q1 * q1 + th1 * q2;
      cd ur;
      if (i == 0) ur = (psi.at(j, 1) - psi.at(j, 0)) / (psi.r[1] - psi.r[0]);
      else if (i == nr - 1) ur = (psi.at(j, i) - psi.at(j, i - 1)) / (psi.r[i] - psi.r[i - 1]);
      else ur = (psi.at(j, i + 1) - psi.at(j, i - 1)) / (psi.r[i + 1] - psi.r[i - 1]);
      const MetricData mdat = metric_at(model, point2(psi.time(j), r, 0.0));
      const cd uphi = kI * md * psi.at(j, i);
      const cd grad_dot = mdat.g_inv(0, 0) * th_t * dt_psi.at(j, i) + mdat.g_inv(0, 2) * th_t * uphi +
                          mdat.g_inv(1, 1) * th_r * ur;
      const double box_theta = mdat.g_inv(0, 0) * th_tt + th_rr + th_r / r;
      F.at(j, i) = 2.0 * grad_dot + box_theta * psi.at(j, i);
    }
  }
  F.cutoff_applied = false;
  return F;
}

SourceTermReport source_term_bound_check(const SpacetimeModel& model, const TimeSeriesField& psi,
                                         const TimeSeriesField& dt_psi, const MollifierBank& bank, int k, double q,
                                         double q_prime, double R1, double tau1, double E_log) {
  SourceTermReport rep;
  const TimeSeriesField F = cutoff_source(model, psi, dt_psi, R1, tau1);
  for (int j = 0; j < F.nt; ++j)
    for (int i = 0; i < F.nr(); ++i) {
      const double s = distorted_time(F.time(j), F.r[i], R1) - tau1;
      if (s < 0.0 || s > 1.0) rep.band_leak = std::max(rep.band_leak, std::abs(F.at(j, i)));
    }
  const TimeSeriesField Fk = apply_symbol(F, component_symbol(bank, Component::Band, k));
  double acc = 0.0;
  for (int j = 0; j < Fk.nt; ++j)
    for (int i = 0; i < Fk.nr(); ++i) acc += std::pow(Fk.r[i], q) * radial_weight(Fk.r, i) * std::norm(Fk.at(j, i));
  rep.weighted_norm = acc * Fk.dt;
  const double wk = bank.omega[k];
  rep.envelope = (1.0 + std::pow(wk, -q - 2.0)) * std::pow(1.0 + wk * tau1, -q_prime) * E_log;
  rep.ratio = rep.envelope > 0.0 ? rep.weighted_norm / rep.envelope : INFINITY;
  rep.finite = std::isfinite(rep.weighted_norm) && std::isfinite(rep.ratio);
  return rep;
}

double parseval_defect(const TimeSeriesField& psi) {
  psi.validate();
  const int P = 4 * psi.nt;
  Fft fft(P);
  cd* b = fft.data();
  double worst = 0.0;
  for (int i = 0; i < psi.nr(); ++i) {
    double direct = 0.0;
    for (int j = 0; j < P; ++j) {
      b[j] = (j < psi.nt) ? psi.at(j, i) : cd(0.0);
      direct += std::norm(b[j]);
    }
    fft.forward();
    double spec = 0.0;
    for (int j = 0; j < P; ++j) spec += std::norm(b[j]);
    spec /= P;
    if (direct > 0.0) worst = std::max(worst, std::fabs(direct - spec) / direct);
  }
  return worst;
}

double band_leakage(const TimeSeriesField& psi_c, const MollifierBank& bank, int k) {
  psi_c.validate();
  const int P = 4 * psi_c.nt;
  Fft fft(P);
  cd* b = fft.data();
  const double lo = (k == 0) ? 0.0 : 0.5 * bank.omega[k - 1];
  const double hi = 4.0 * bank.omega[k];
  double total = 0.0, outside = 0.0;
  for (int i = 0; i < psi_c.nr(); ++i) {
    for (int j = 0; j < P; ++j) b[j] = (j < psi_c.nt) ? psi_c.at(j, i) : cd(0.0);
    fft.forward();
    for (int j = 0; j < P; ++j) {
      const double w = bin_frequency(j, P, psi_c.dt);
      const double e = std::norm(b[j] * bank.zeta_hat(k, w));
      total += e;
      if (std::fabs(w) < lo || std::fabs(w) > hi) outside += e;
    }
  }
  return total > 0.0 ? outside / total : 0.0;
}

double low_frequency_ratio(const TimeSeriesField& psi0, const TimeSeriesField& phi, const TimeSeriesField& dt_phi,
                           double omega0) {
  const double num = spacetime_norm2(psi0, 0.0);
  TimeSeriesField dr = phi;
  const int nr = phi.nr();
  for (int j = 0; j < phi.nt; ++j)
    for (int i = 0; i < nr; ++i) {
      const int a = std::max(0, i - 1), b = std::min(nr - 1, i + 1);
      dr.at(j, i) = (phi.at(j, b) - phi.at(j, a)) / (phi.r[b] - phi.r[a]);
    }
  const double den = spacetime_norm2(dt_phi, 0.0) + spacetime_norm2(dr, 0.0) + spacetime_norm2(phi, 0.0);
  if (!(den > 0.0)) throw std::invalid_argument("low_frequency_ratio: vanishing denominator");
  return num / (omega0 * omega0 * den);
}

}  // namespace ergo
