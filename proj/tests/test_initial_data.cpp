#include "doctest.h"

#include <cmath>

#include "ergo/initial_data.hpp"

using namespace ergo;

namespace {

const SpacetimeModel kVortex = make_vortex(1.0, 0.3, InnerBC::Dirichlet, 4.0);

// log-log least-squares slope
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = x.size();
  for (size_t i = 0; i < x.size(); ++i) {
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("null covector at a point inside the ergoregion") {
  const NullPair np = build_null_pair(kVortex, 0.5, -1.0);
  CHECK(np.alpha > 0.0);
  // substitute back into the inverse metric
  const MetricData md = metric_at(kVortex, point2(0.0, 0.5, 0.0));
  const double q = md.g_inv(0, 0) * np.alpha * np.alpha + 2.0 * md.g_inv(0, 2) * np.alpha * np.gamma +
                   md.g_inv(1, 1) * np.k_r * np.k_r + md.g_inv(2, 2) * np.gamma * np.gamma;
  CHECK(std::fabs(q) < 1e-12);
  CHECK(std::fabs(np.null_residual) < 1e-12);
  // dw(T) = alpha and L = grad w is null
  const Vec4 L = np.L;
  CHECK(std::fabs(L.dot(md.g * L)) < 1e-12);
  CHECK(np.L.dot(md.g * frame_at(kVortex, point2(0.0, 0.5, 0.0)).T) == doctest::Approx(np.alpha));
}

TEST_CASE("null covector preconditions and the mirrored side") {
  CHECK_THROWS_AS(build_null_pair(kVortex, 2.0, -1.0), DomainError);
  const auto D = make_doubled_vortex(1.0, 0.3, 4.0);
  const NullPair a = build_null_pair(D, 0.6, -1.0), b = build_null_pair(D, 2.0 * 0.3 - 0.6, -1.0);
  CHECK(a.alpha == doctest::Approx(b.alpha));
  CHECK(a.gamma == b.gamma);
  CHECK(a.k_r == doctest::Approx(-b.k_r));
}

TEST_CASE("packet modulus does not depend on l") {
  auto g = RadialGrid::uniform(0.3, 4.0, 4096);
  WavePacketSpec sp;
  std::vector<double> ref;
  for (double l : {10.0, 20.0, 40.0}) {
    sp.l = l;
    const auto prof = packet_radial_profile(kVortex, *g, sp, 0.5 * admissible_alpha(kVortex, 0.45, 0.75, sp.gamma));
    std::vector<double> mod;
    for (auto z : prof) mod.push_back(std::abs(z));
    if (ref.empty()) ref = mod;
    for (size_t i = 0; i < mod.size(); ++i) REQUIRE(std::fabs(mod[i] - ref[i]) < 1e-14);
  }
}

TEST_CASE("support containment and zero amplitude") {
  auto g = RadialGrid::uniform(0.3, 4.0, 2048);
  WavePacketSpec sp;
  sp.l = 10.0;
  const auto data = build_wave_packet(kVortex, g, sp);
  for (const auto& s : data.modes)
    for (int i = 0; i < g->size(); ++i) {
      if (std::fabs(g->r[i] - sp.r_center) >= sp.radial_halfwidth) {
        REQUIRE(s.phi[i] == cd(0.0));
        REQUIRE(s.dphi_dt[i] == cd(0.0));
      }
    }
  CHECK(data.discarded_tail < sp.tail_tolerance);
  sp.amplitude = 0.0;
  const auto zero = build_wave_packet(kVortex, g, sp);
  for (const auto& s : zero.modes)
    for (int i = 0; i < g->size(); ++i) REQUIRE(std::abs(s.phi[i]) == 0.0);
  CHECK(zero.raw_T_energy == 0.0);
}

TEST_CASE("packets that leave the ergoregion are rejected") {
  auto g = RadialGrid::uniform(0.3, 4.0, 2048);
  WavePacketSpec sp;
  sp.r_center = 0.9;
  sp.radial_halfwidth = 0.2;
  CHECK_THROWS_AS(build_wave_packet(kVortex, g, sp), ConstructionError);
  CHECK_THROWS(build_wave_packet(make_minkowski(0.0, 4.0), g, WavePacketSpec{}));
}

TEST_CASE("negative T-energy and its l^4 growth") {
  auto g = RadialGrid::uniform(0.3, 4.0, 16384);
  WavePacketSpec sp;
  std::vector<double> ls{10.0, 20.0, 40.0, 80.0}, E;
  for (double l : ls) {
    sp.l = l;
    const auto d = negative_energy_data(kVortex, g, sp);
    CAPTURE(l);
    CHECK(d.raw_T_energy < 0.0);
    CHECK(std::fabs(d.raw_T_energy_imag) <= 1e-12 * std::fabs(d.raw_T_energy));
    CHECK(d.T_energy == doctest::Approx(-1.0).epsilon(1e-3));
    E.push_back(-d.raw_T_energy);
  }
  const double s = slope(ls, E);
  CHECK(s >= 3.5);
  CHECK(s <= 4.5);
}

TEST_CASE("an under-resolved packet reports that l is too small") {
  auto g = RadialGrid::uniform(0.3, 4.0, 1024);
  WavePacketSpec sp;
  sp.l = 40.0;
  CHECK_THROWS_WITH_AS(negative_energy_data(kVortex, g, sp), doctest::Contains("l too small"), ConstructionError);
}

TEST_CASE("equation residual of the packet grows at most linearly in l") {
  auto g = RadialGrid::uniform(0.3, 4.0, 32768);
  WavePacketSpec sp;
  std::vector<double> ls{10.0, 20.0, 40.0}, R;
  for (double l : ls) {
    sp.l = l;
    R.push_back(packet_residual(kVortex, g, sp));
  }
  const double s = slope(ls, R);
  CHECK(s <= 1.3);
  CHECK(s >= 0.7);
}

TEST_CASE("mode_component picks a mode or returns zeros") {
  auto g = RadialGrid::uniform(0.3, 4.0, 2048);
  WavePacketSpec sp;
  sp.l = 10.0;
  const auto data = build_wave_packet(kVortex, g, sp);
  const int m = data.modes[data.modes.size() / 2].m;
  CHECK(mode_component(data, m).phi == data.modes[data.modes.size() / 2].phi);
  const auto z = mode_component(data, data.m_hi + 5);
  CHECK(z.m == data.m_hi + 5);
  for (auto v : z.phi) REQUIRE(v == cd(0.0));
}
