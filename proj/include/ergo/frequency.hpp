// Time-frequency decomposition of recorded solutions: distorted time, temporal
// cut-off, dyadic mollifier bank and the estimates attached to it.
#pragma once

#include <mutex>
#include <string>
#include <vector>

#include "ergo/energy.hpp"

namespace ergo {

// FFTW planning is not thread safe; every planner call in the library takes this lock.
std::mutex& fftw_planner_mutex();

// Frequency symbols use psi^(omega) = int e^{-i omega t} psi(t) dt.
struct MollifierBank {
  double omega0 = 0.5;
  double omega_plus = 8.0;
  int n = 0;                   // ceil(log2(omega_plus / omega0))
  std::vector<double> omega;   // omega_k = 2^k omega0, k = 0..n

  double zeta_hat(int k, double w) const;  // band k
  double zeta_le_hat(double w) const;      // sum over k = 0..n
  double xi_hat(int k, double w) const;    // equals 1 on the support of zeta_hat(k)
  cd xi_tilde_hat(int k, double w) const;  // xi_hat / (i w), k >= 1

  // Kernel zeta_k(t) sampled at t_j = (j - P/2) dt through the inverse transform of the symbol.
  std::vector<double> zeta_kernel(int k, double dt, int P) const;
};

MollifierBank make_bank(double omega0, double omega_plus);

// Complex samples psi(t_j, r_i) on a uniform time grid; data[j * nr + i].
struct TimeSeriesField {
  double t0 = 0.0, dt = 0.0;
  int nt = 0;
  std::vector<double> r;
  std::vector<cd> data;
  int m = 0;
  bool cutoff_applied = false;

  int nr() const { return static_cast<int>(r.size()); }
  cd& at(int j, int i) { return data[static_cast<size_t>(j) * r.size() + i]; }
  const cd& at(int j, int i) const { return data[static_cast<size_t>(j) * r.size() + i]; }
  double time(int j) const { return t0 + j * dt; }
  void validate() const;
};

// Builds the field of one mode from a snapshot sequence (uniform cadence required).
TimeSeriesField series_from_snapshots(const std::vector<std::vector<FieldSnapshot>>& snaps, int mode_index,
                                      bool time_derivative = false);

// t_- = t + 1/2 theta_1(r - R1) (r - R1)
double distorted_time(double t, double r, double R1);
double distorted_time_dr(double r, double R1);
double distorted_time_drr(double r, double R1);

// psi_c = theta_2(t_- - tau1) psi. Throws when the record never reaches t_- >= tau1 + 1.
TimeSeriesField temporal_cutoff(const TimeSeriesField& psi, double R1, double tau1 = 0.0);

enum class Component { Band, LowPass, HighPass };

// Convolution with zeta_k (Band), zeta_{<= omega_+} (LowPass) or the remainder
// psi_c - psi_{<= omega_+} (HighPass), by FFT along time with 4x zero padding.
// Throws if the kernel mass beyond the recorded span exceeds tail_tolerance.
TimeSeriesField project_component(const TimeSeriesField& psi_c, const MollifierBank& bank, Component which, int k = 0,
                                  double tail_tolerance = 1e-9);

// Fraction of the L1 mass of the kernel lying beyond |t| > span.
double kernel_tail_fraction(const MollifierBank& bank, Component which, int k, double span, double dt);

// Spectral time derivative of a series (same padding as the projection).
TimeSeriesField spectral_time_derivative(const TimeSeriesField& psi);

struct SandwichReport {
  double ratio = 0.0;  // int theta |T psi_k|^2 / (omega_k^2 int theta |psi_k|^2)
  double lower = 1.0 / 16.0, upper = 16.0;
  bool within = false;
};

// The time integral runs over the interior [t0 + margin, t_end - margin]; theta is a
// radial weight sampled on the series grid (empty = 1).
SandwichReport sandwich_check(const TimeSeriesField& psi_k, const TimeSeriesField& dt_psi_k, const MollifierBank& bank,
                              int k, const std::vector<double>& theta, double margin);

struct ReproducingReport {
  double residual_xi = 0.0;        // || psi_k - xi_k * psi_k || / || psi_k ||
  double residual_xi_tilde = 0.0;  // || psi_k - xi~_k * T psi_k || / || psi_k ||  (k >= 1)
};

ReproducingReport reproducing_check(const TimeSeriesField& psi_k, const MollifierBank& bank, int k, double margin);

struct TailDecayReport {
  std::vector<double> R;
  std::vector<double> shell_energy;            // int_R^{2R} (|psi|^2 + |d_r psi|^2) r dr at the chosen time
  std::vector<std::vector<double>> weighted;   // R^q shell energy for q = 1, 2, 4
  std::vector<bool> monotone;                  // per q
};

TailDecayReport tail_decay_check(const TimeSeriesField& psi_k, int time_index, const std::vector<double>& radii);

struct SourceTermReport {
  double weighted_norm = 0.0;  // int int r^q |F_k|^2 r dr dt
  double envelope = 0.0;       // (1 + omega_k^{-q-2}) (1 + omega_k tau1)^{-q'} E_log
  double ratio = 0.0;
  bool finite = false;
  double band_leak = 0.0;      // max |F| outside the cut-off band (0 <= t_- - tau1 <= 1)
};

// F = 2 d^mu theta_2(t_- - tau1) d_mu psi + (box theta_2) psi for one mode on the vortex.
TimeSeriesField cutoff_source(const SpacetimeModel& model, const TimeSeriesField& psi, const TimeSeriesField& dt_psi,
                              double R1, double tau1);
SourceTermReport source_term_bound_check(const SpacetimeModel& model, const TimeSeriesField& psi,
                                         const TimeSeriesField& dt_psi, const MollifierBank& bank, int k, double q,
                                         double q_prime, double R1, double tau1, double E_log);

// ||psi_c||^2 against the DFT-side sum (1/P) sum |psi^_j|^2 per radial point; max relative defect.
double parseval_defect(const TimeSeriesField& psi);

// Spectral mass of psi_c * zeta_k outside omega_{k-1}/2 <= |w| <= 4 omega_k, relative.
double band_leakage(const TimeSeriesField& psi_c, const MollifierBank& bank, int k);

// int |psi_0|^2 / (omega0^2 int (|T phi|^2 + |d_r phi|^2 + |phi|^2)) for psi = T phi.
double low_frequency_ratio(const TimeSeriesField& psi0, const TimeSeriesField& phi, const TimeSeriesField& dt_phi,
                           double omega0);

// Space-time L2 norm squared (r dr dt) of a series over the interior window.
double spacetime_norm2(const TimeSeriesField& psi, double margin, const std::vector<double>& theta = {});

}  // namespace ergo
