// Localised high-frequency wave packets with negative T-energy in the ergoregion.
#pragma once

#include <vector>

#include "ergo/energy.hpp"

namespace ergo {

struct WavePacketSpec {
  double r_center = 0.6;
  double radial_halfwidth = 0.15;  // support [r_center - w, r_center + w]
  double angular_halfwidth = 2.0;  // support [-a, a] around phi = 0
  double l = 40.0;
  // d_phi component of the phase. Its size sets the azimuthal number ~ l |gamma|;
  // a large value pushes the l^4 term ahead of the O(l^3) corrections at small l.
  double gamma = -16.0;
  double alpha = 0.0;            // d_t component; 0 selects alpha_fraction of the admissible maximum
  double alpha_fraction = 0.95;
  double amplitude = 1.0;
  double tail_tolerance = 1e-6;  // discarded azimuthal L2 mass
  bool operator==(const WavePacketSpec&) const = default;
};

// Null covector dw = alpha dt + k_r dr + gamma dphi at the packet center, and the
// vector L = grad w.
struct NullPair {
  double alpha = 0.0, k_r = 0.0, gamma = 0.0;
  Vec4 L;
  double null_residual = 0.0;  // g^{-1}(dw, dw)
};

// Largest alpha for which the radial eikonal stays real on [r_lo, r_hi] (gamma fixed).
double admissible_alpha(const SpacetimeModel& model, double r_lo, double r_hi, double gamma);

// Frozen-coefficient null covector with dw(T) = alpha > 0 at radius r.
NullPair build_null_pair(const SpacetimeModel& model, double r, double gamma = -1.0, double alpha = 0.0);

struct InitialData {
  WavePacketSpec spec;
  std::vector<FieldSnapshot> modes;  // (phi^0, phi^1) per azimuthal mode
  int m_lo = 0, m_hi = 0;
  double discarded_tail = 0.0;
  double alpha = 0.0;
  double raw_T_energy = 0.0;
  double raw_T_energy_imag = 0.0;
  double normalization = 1.0;
  double T_energy = 0.0;  // after normalisation
};

// Radial factor theta_r(r) exp(i l S(r)) with S the exact radial eikonal of the
// phase alpha t + gamma phi + S(r), S(r_center) = 0.
std::vector<cd> packet_radial_profile(const SpacetimeModel& model, const RadialGrid& grid, const WavePacketSpec& spec,
                                      double alpha);

// Packet theta e^{i l w} at t = 0 and its time derivative, projected on azimuthal modes.
InitialData build_wave_packet(const SpacetimeModel& model, GridPtr grid, const WavePacketSpec& spec);

// L2 norm of box_g applied to the packet (taken with its exact e^{i l alpha t} time
// dependence), using the discrete radial operator.
double packet_residual(const SpacetimeModel& model, GridPtr grid, const WavePacketSpec& spec);

// Data (T phi, T^2 phi) for the solution phi launched by the packet, rescaled to
// T-energy -1. Throws ConstructionError when the raw energy is not negative.
InitialData negative_energy_data(const SpacetimeModel& model, GridPtr grid, const WavePacketSpec& spec);

// Raw T-energy of (T phi, T^2 phi) for the packet at frequency l.
double raw_negative_energy(const SpacetimeModel& model, GridPtr grid, WavePacketSpec spec, double l);

// Picks out the snapshot of mode m (zero data on the same grid if absent).
FieldSnapshot mode_component(const InitialData& data, int m);

}  // namespace ergo
