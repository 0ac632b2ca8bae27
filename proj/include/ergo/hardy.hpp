// Radial Hardy-type inequalities with polynomial and logarithmic weights.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ergo/geometry.hpp"

namespace ergo {

// Radial function on [R1, R2] sampled on a logarithmic grid.
struct TestFunction {
  int d = 3;
  std::vector<double> r;
  std::vector<cd> u, du;
  bool vanishes_at_R2 = true;
  std::string label;
};

struct HardyResult {
  double lhs = 0.0;
  double bulk = 0.0;      // int r^{-(d-2)+a} |d_r u|^2 dx (or the log-weighted version)
  double boundary2 = 0.0; // outer sphere term
  double rhs = 0.0;       // C bulk + boundary2
  double ratio = 0.0;     // lhs / rhs
  double needed_C = 0.0;  // smallest constant that makes the pair hold
};

// int r^{-d+a}|u|^2 + R1^{-(d-1)+a}|u(R1)|^2 |S_{R1}| <= C_a int r^{-(d-2)+a}|u'|^2 + R2^{-(d-1)+a}|u(R2)|^2 |S_{R2}|
HardyResult hardy_polynomial_check(const TestFunction& f, double a, double C_a);
// int r^{-d}|u|^2 + R1^{-(d-1)} log R1 |u(R1)|^2 |S| <= C int r^{-(d-2)} log(r)^2 |u'|^2 + R2^{-(d-1)} log R2 |u(R2)|^2 |S|
HardyResult hardy_log_check(const TestFunction& f, double C);

// Random superposition of smooth bumps in log r with complex weights. With
// vanish_at_R2 false a plateau reaching R2 is added.
TestFunction random_bump_function(int d, double R1, double R2, int N, std::uint64_t seed, bool vanish_at_R2);
// r^{-a/2} times a window that switches off before R2 (near-extremal for the polynomial form).
TestFunction power_law_function(int d, double R1, double R2, int N, double a);
// (log r)^{-1/2} times the same window.
TestFunction log_profile_function(int d, double R1, double R2, int N);
// Maximisers of the discretised quotients on [R1, R2] among functions vanishing at R2.
TestFunction extremal_polynomial_function(int d, double R1, double R2, int N, double a);
TestFunction extremal_log_function(int d, double R1, double R2, int N);
// u = 1 on [R1, R2].
TestFunction constant_function(int d, double R1, double R2, int N);
// u(r) -> u(r / lambda) on [lambda R1, lambda R2]
TestFunction rescale(const TestFunction& f, double lambda);

struct Calibration {
  double C = 0.0;          // 1.05 x the largest needed constant
  double max_needed = 0.0;
  int count = 0;
  std::string worst_label;
};

// Calibration suite of `count` functions (random bumps plus power-law and log
// profiles on several ranges).
Calibration calibrate_polynomial(int d, double a, int count, int N, std::uint64_t seed);
Calibration calibrate_log(int d, int count, int N, std::uint64_t seed);

struct SuiteReport {
  int count = 0;
  int violations = 0;
  double max_ratio = 0.0;
};

SuiteReport polynomial_suite(int d, double a, double C_a, int count, int N, std::uint64_t seed);
SuiteReport log_suite(int d, double C, int count, int N, std::uint64_t seed);

}  // namespace ergo
