#include "ergo/initial_data.hpp"

#include <fftw3.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include "ergo/cutoff.hpp"
#include "ergo/evolution.hpp"
#include "ergo/frequency.hpp"

namespace ergo {

namespace {
constexpr double kPi = std::numbers::pi;
const cd kI(0.0, 1.0);

// Smooth bump on [-1, 1] peaking at 0.
double packet_bump(double x) { return smoothstep(1.0 - std::fabs(x)); }

// S'(r)^2 of the radial eikonal for dw = alpha dt + S' dr + gamma dphi.
double eikonal_rhs(const SpacetimeModel& model, double r, double alpha, double gamma) {
  const MetricData md = metric_at(model, point2(0.0, r, 0.0));
  const double q = md.g_inv(0, 0) * alpha * alpha + 2.0 * md.g_inv(0, 2) * alpha * gamma + md.g_inv(2, 2) * gamma * gamma;
  return -q / md.g_inv(1, 1);
}

double radial_sign(const SpacetimeModel& model, double r) {
  return (model.kind == ModelKind::HydroVortexDoubled && r < model.delta) ? -1.0 : 1.0;
}

void check_spec(const SpacetimeModel& model, const RadialGrid& grid, const WavePacketSpec& spec) {
  if (!model.two_plus_one() || model.kind == ModelKind::Minkowski)
    throw DomainError("wave packets need a 2+1 model with an ergoregion");
  if (!(spec.gamma < 0.0)) throw ConstructionError("gamma must be negative for the dw(T) > 0 null branch");
  if (!(spec.radial_halfwidth > 0.0) || !(spec.angular_halfwidth > 0.0) || spec.angular_halfwidth > kPi)
    throw std::invalid_argument("packet widths must be positive with angular half-width at most pi");
  if (!(spec.l >= 1.0)) throw std::invalid_argument("l must be at least 1");
  const double lo = spec.r_center - spec.radial_halfwidth, hi = spec.r_center + spec.radial_halfwidth;
  for (double r : {lo, hi, spec.r_center}) {
    if (r <= grid.r_min || r >= grid.r_max) throw ConstructionError("packet support leaves the radial grid");
    if (!(ergoregion_indicator(model, point2(0.0, r, 0.0)) > 0.0))
      throw ConstructionError("packet support leaks outside the ergoregion at r = " + std::to_string(r));
  }
  if (model.kind == ModelKind::HydroVortexDoubled && lo < model.delta && hi > model.delta)
    throw ConstructionError("packet support straddles the gluing surface");
}

}  // namespace

double admissible_alpha(const SpacetimeModel& model, double r_lo, double r_hi, double gamma) {
  if (!(gamma < 0.0)) throw ConstructionError("gamma must be negative");
  double amax = INFINITY;
  const int n = 512;
  for (int i = 0; i <= n; ++i) {
    const double r = r_lo + (r_hi - r_lo) * i / n;
    const double rho = areal_radius(model, r);
    // (alpha + C gamma / rho^2)^2 > gamma^2 / rho^2 on the branch alpha < |gamma| (C - rho) / rho^2
    amax = std::min(amax, -gamma * (model.C - rho) / (rho * rho));
  }
  if (!(amax > 0.0)) throw ConstructionError("no null direction with dw(T) > 0 on the requested support");
  return amax;
}

NullPair build_null_pair(const SpacetimeModel& model, double r, double gamma, double alpha) {
  if (!model.two_plus_one()) throw UnsupportedError("build_null_pair works on 2+1 families");
  if (!(ergoregion_indicator(model, point2(0.0, r, 0.0)) > 0.0))
    throw DomainError("center outside the ergoregion: T is timelike there");
  if (alpha == 0.0) alpha = 0.5 * admissible_alpha(model, r, r, gamma);
  const double q = eikonal_rhs(model, r, alpha, gamma);
  if (!(q >= 0.0) || !(alpha > 0.0)) throw ConstructionError("no null direction with dw(T) > 0 at this alpha");
  NullPair np;
  np.alpha = alpha;
  np.gamma = gamma;
  np.k_r = radial_sign(model, r) * std::sqrt(q);
  const MetricData md = metric_at(model, point2(0.0, r, 0.0));
  Vec4 dw(3);
  dw << np.alpha, np.k_r, np.gamma;
  np.L = md.g_inv * dw;
  np.null_residual = dw.dot(md.g_inv * dw);
  return np;
}

std::vector<cd> packet_radial_profile(const SpacetimeModel& model, const RadialGrid& grid, const WavePacketSpec& spec,
                                      double alpha) {
  const int n = grid.size();
  std::vector<cd> out(n, 0.0);
  const double lo = spec.r_center - spec.radial_halfwidth, hi = spec.r_center + spec.radial_halfwidth;
  const double sgn = radial_sign(model, spec.r_center);
  gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(8);
  struct Ctx {
    const SpacetimeModel* model;
    double alpha, gamma;
  } ctx{&model, alpha, spec.gamma};
  gsl_function F;
  F.function = [](double r, void* p) {
    auto* c = static_cast<Ctx*>(p);
    return std::sqrt(std::max(0.0, eikonal_rhs(*c->model, r, c->alpha, c->gamma)));
  };
  F.params = &ctx;
  auto S_between = [&](double a, double b) { return gsl_integration_glfixed(&F, a, b, tab); };
  // phase S(r) = int_{r_center}^{r} S', accumulated interval by interval
  int ic = static_cast<int>(std::floor((spec.r_center - grid.r_min) / grid.h));
  ic = std::clamp(ic, 0, grid.N - 1);
  std::vector<double> S(n, 0.0);
  S[ic] = -S_between(grid.r[ic], spec.r_center);
  for (int i = ic + 1; i < n; ++i) S[i] = S[i - 1] + (grid.r[i] <= hi + grid.h ? S_between(grid.r[i - 1], grid.r[i]) : 0.0);
  for (int i = ic - 1; i >= 0; --i) S[i] = S[i + 1] - (grid.r[i] >= lo - grid.h ? S_between(grid.r[i], grid.r[i + 1]) : 0.0);
  gsl_integration_glfixed_table_free(tab);
  for (int i = 0; i < n; ++i) {
    const double r = grid.r[i];
    if (r <= lo || r >= hi) continue;
    const double th = packet_bump((r - spec.r_center) / spec.radial_halfwidth);
    out[i] = th * std::exp(kI * spec.l * sgn * S[i]);
  }
  return out;
}

namespace {

struct AngularProjection {
  int m_lo = 0, m_hi = 0;
  std::vector<cd> c;  // c[m - m_lo]
  double discarded = 0.0;
};

// Fourier coefficients of theta_phi(phi) e^{i l gamma phi}; keeps the shortest
// contiguous window around the peak that holds all but `tol` of the L2 mass.
AngularProjection project_angular(const WavePacketSpec& spec) {
  const int M = 1 << 14;
  fftw_complex* buf = fftw_alloc_complex(M);
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(M, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  for (int j = 0; j < M; ++j) {
    const double ph = -kPi + 2.0 * kPi * j / M;
    const cd v = packet_bump(ph / spec.angular_halfwidth) * std::exp(kI * spec.l * spec.gamma * ph);
    buf[j][0] = v.real();
    buf[j][1] = v.imag();
  }
  fftw_execute(plan);
  auto coeff = [&](int m) {
    const int k = ((m % M) + M) % M;
    const double sgn = (m % 2 == 0) ? 1.0 : -1.0;  // grid starts at -pi
    return sgn * cd(buf[k][0], buf[k][1]) / double(M);
  };
  double total = 0.0;
  int peak = 0;
  double best = -1.0;
  for (int m = -M / 2 + 1; m < M / 2; ++m) {
    const double a = std::norm(coeff(m));
    total += a;
    if (a > best) {
      best = a;
      peak = m;
    }
  }
  AngularProjection out;
  out.m_lo = out.m_hi = peak;
  double kept = best;
  while (total - kept > spec.tail_tolerance * total) {
    const double left = std::norm(coeff(out.m_lo - 1)), right = std::norm(coeff(out.m_hi + 1));
    if (left >= right) {
      --out.m_lo;
      kept += left;
    } else {
      ++out.m_hi;
      kept += right;
    }
    if (out.m_hi - out.m_lo > M / 2) throw ConstructionError("azimuthal projection does not converge");
  }
  for (int m = out.m_lo; m <= out.m_hi; ++m) out.c.push_back(coeff(m));
  out.discarded = total > 0.0 ? (total - kept) / total : 0.0;
  {
    std::lock_guard<std::mutex> lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return out;
}

double resolve_alpha(const SpacetimeModel& model, const WavePacketSpec& spec) {
  if (spec.alpha != 0.0) return spec.alpha;
  return spec.alpha_fraction * admissible_alpha(model, spec.r_center - spec.radial_halfwidth, spec.r_center + spec.radial_halfwidth,
                                spec.gamma);
}

}  // namespace

InitialData build_wave_packet(const SpacetimeModel& model, GridPtr grid, const WavePacketSpec& spec) {
  check_spec(model, *grid, spec);
  InitialData data;
  data.spec = spec;
  data.alpha = resolve_alpha(model, spec);
  const double amax = admissible_alpha(model, spec.r_center - spec.radial_halfwidth,
                                       spec.r_center + spec.radial_halfwidth, spec.gamma);
  if (!(data.alpha > 0.0) || data.alpha >= amax) throw ConstructionError("alpha outside the admissible null branch");
  const auto radial = packet_radial_profile(model, *grid, spec, data.alpha);
  const auto ang = project_angular(spec);
  data.m_lo = ang.m_lo;
  data.m_hi = ang.m_hi;
  data.discarded_tail = ang.discarded;
  const cd dt_factor = kI * spec.l * data.alpha;
  for (int m = ang.m_lo; m <= ang.m_hi; ++m) {
    FieldSnapshot s;
    s.m = m;
    s.grid = grid;
    s.phi.resize(radial.size());
    s.dphi_dt.resize(radial.size());
    const cd c = spec.amplitude * ang.c[m - ang.m_lo];
    for (size_t i = 0; i < radial.size(); ++i) {
      s.phi[i] = c * radial[i];
      s.dphi_dt[i] = dt_factor * s.phi[i];
    }
    data.modes.push_back(std::move(s));
  }
  for (const auto& s : data.modes) data.raw_T_energy += staggered_energy(model, s, Region::all()).E_T;
  data.T_energy = data.raw_T_energy;
  return data;
}

double packet_residual(const SpacetimeModel& model, GridPtr grid, const WavePacketSpec& spec) {
  const InitialData data = build_wave_packet(model, grid, spec);
  const cd w = kI * spec.l * data.alpha;  // d/dt acting on e^{i l alpha t}
  double acc = 0.0;
  for (const auto& s : data.modes) {
    const auto Lu = radial_operator(*grid, s.m, s.phi);
    for (int i = 0; i < grid->size(); ++i) {
      const double r = grid->r[i];
      const cd beta = kI * double(s.m) * frame_dragging(model, r);
      const cd res = (w + beta) * (w + beta) * s.phi[i] - Lu[i];
      acc += grid->W[i] * std::norm(res);
    }
  }
  return std::sqrt(2.0 * kPi * acc);
}

namespace {

InitialData time_derivative_data(const SpacetimeModel& model, GridPtr grid, const WavePacketSpec& spec) {
  InitialData base = build_wave_packet(model, grid, spec);
  InitialData out = base;
  out.raw_T_energy = 0.0;
  double imag = 0.0;
  for (size_t k = 0; k < base.modes.size(); ++k) {
    const auto& s = base.modes[k];
    auto& o = out.modes[k];
    const auto Lu = radial_operator(*grid, s.m, s.phi);
    for (int i = 0; i < grid->size(); ++i) {
      const cd beta = kI * double(s.m) * frame_dragging(model, grid->r[i]);
      o.phi[i] = s.dphi_dt[i];
      // phi_tt from the equation: (d_t + beta)^2 phi = L phi
      o.dphi_dt[i] = Lu[i] - 2.0 * beta * s.dphi_dt[i] - beta * beta * s.phi[i];
    }
    out.raw_T_energy += staggered_energy(model, o, Region::all()).E_T;
    // Hermitian form evaluated in complex arithmetic: the imaginary part is rounding only
    cd herm = 0.0;
    for (int i = 0; i < grid->size(); ++i) {
      const cd beta = kI * double(o.m) * frame_dragging(model, grid->r[i]);
      const cd pi = o.dphi_dt[i] + beta * o.phi[i];
      const cd x = beta * o.phi[i] * std::conj(pi);
      herm += grid->W[i] * (0.5 * pi * std::conj(pi) - 0.5 * (x + std::conj(x)));
    }
    imag += herm.imag();
  }
  out.raw_T_energy_imag = imag;
  out.T_energy = out.raw_T_energy;
  return out;
}

}  // namespace

double raw_negative_energy(const SpacetimeModel& model, GridPtr grid, WavePacketSpec spec, double l) {
  spec.l = l;
  return time_derivative_data(model, grid, spec).raw_T_energy;
}

InitialData negative_energy_data(const SpacetimeModel& model, GridPtr grid, const WavePacketSpec& spec) {
  InitialData d = time_derivative_data(model, grid, spec);
  if (!(d.raw_T_energy < 0.0)) {
    std::string hint = "no larger tested l works";
    for (double f : {2.0, 4.0, 8.0}) {
      try {
        if (raw_negative_energy(model, grid, spec, f * spec.l) < 0.0) {
          hint = "smallest tested l with negative energy is " + std::to_string(f * spec.l);
          break;
        }
      } catch (const std::exception&) {
      }
    }
    throw ConstructionError("raw T-energy " + std::to_string(d.raw_T_energy) +
                            " is not negative (l too small or packet under-resolved by the grid); " + hint);
  }
  d.normalization = 1.0 / std::sqrt(-d.raw_T_energy);
  for (auto& s : d.modes) {
    for (auto& z : s.phi) z *= d.normalization;
    for (auto& z : s.dphi_dt) z *= d.normalization;
  }
  d.T_energy = 0.0;
  for (const auto& s : d.modes) d.T_energy += staggered_energy(model, s, Region::all()).E_T;
  return d;
}

FieldSnapshot mode_component(const InitialData& data, int m) {
  for (const auto& s : data.modes)
    if (s.m == m) return s;
  if (data.modes.empty()) throw std::invalid_argument("empty initial data");
  FieldSnapshot z;
  z.m = m;
  z.grid = data.modes.front().grid;
  z.phi.assign(z.grid->size(), 0.0);
  z.dphi_dt.assign(z.grid->size(), 0.0);
  return z;
}

}  // namespace ergo
