#include "ergo/cutoff.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ergo {

namespace {

// S(x) = x^5 (126 - 420x + 540x^2 - 315x^3 + 70x^4)
constexpr double kCoef[10] = {0, 0, 0, 0, 0, 126, -420, 540, -315, 70};

double poly_deriv(double x, int order) {
  double acc = 0.0;
  for (int p = 9; p >= order; --p) {
    double c = kCoef[p];
    for (int j = 0; j < order; ++j) c *= (p - j);
    acc = acc * x + c;
  }
  return acc;
}

void check_order(int order) {
  if (order < 0 || order > 4) throw std::invalid_argument("cut-off derivative order must be in 0..4");
}

}  // namespace

double smoothstep(double x, int order) {
  check_order(order);
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return order == 0 ? 1.0 : 0.0;
  return poly_deriv(x, order);
}

Jet4 smoothstep_jet(double x) {
  Jet4 j{};
  for (int k = 0; k <= 4; ++k) j[k] = smoothstep(x, k);
  return j;
}

double theta1(double x, int order) { return smoothstep(x, order); }
double theta2(double x, int order) { return smoothstep(x, order); }

double theta3(double x, int order) {
  check_order(order);
  const double ax = std::fabs(x);
  if (ax <= 1.0) return order == 0 ? 1.0 : 0.0;
  if (ax >= 2.0) return 0.0;
  double v = -smoothstep(ax - 1.0, order);
  if (order == 0) v += 1.0;
  // even function: odd derivatives flip sign for x < 0
  if (x < 0.0 && (order % 2 == 1)) v = -v;
  return v;
}

double theta4(double x, int order) {
  check_order(order);
  return std::pow(4.0, order) * smoothstep(4.0 * x - 3.0, order);
}

double theta_rbar(double r, int order) {
  check_order(order);
  if (r < 4.5) return smoothstep(r - 3.0, order);
  const double sgn = (order % 2 == 1) ? -1.0 : 1.0;
  return sgn * smoothstep(6.0 - r, order);
}

double theta_vartheta(double th, int order) {
  check_order(order);
  constexpr double pi = std::numbers::pi;
  const double w = pi / 12.0;
  const double scale = std::pow(1.0 / w, order);
  if (th < pi / 2) return scale * smoothstep((th - pi / 6) / w, order);
  const double sgn = (order % 2 == 1) ? -1.0 : 1.0;
  return sgn * scale * smoothstep((5 * pi / 6 - th) / w, order);
}

double smooth_cutoff(const std::string& name, double x, int order) {
  check_order(order);
  if (name == "theta1") return theta1(x, order);
  if (name == "theta2") return theta2(x, order);
  if (name == "theta3") return theta3(x, order);
  if (name == "theta4") return theta4(x, order);
  if (name == "theta_rbar") return theta_rbar(x, order);
  if (name == "theta_vartheta") return theta_vartheta(x, order);
  if (name == "smoothstep") return smoothstep(x, order);
  throw std::invalid_argument("unknown cut-off: " + name);
}

}  // namespace ergo
