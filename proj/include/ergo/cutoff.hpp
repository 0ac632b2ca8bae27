// Smooth transition functions with four continuous derivatives.
#pragma once

#include <array>
#include <string>

namespace ergo {

// Order-9 smoothstep: 0 for x <= 0, 1 for x >= 1, derivatives 1..4 vanish at both ends.
double smoothstep(double x, int order = 0);

// Value and derivatives 0..4 packed together.
using Jet4 = std::array<double, 5>;

Jet4 smoothstep_jet(double x);

// theta_1: step in r - R1 over [0,1]
double theta1(double x, int order = 0);
// theta_2: step over [0,1] (applied to the distorted time)
double theta2(double x, int order = 0);
// theta_3: 1 on [-1,1], 0 outside [-2,2]
double theta3(double x, int order = 0);
// theta_4: 0 for x <= 3/4, 1 for x >= 1
double theta4(double x, int order = 0);
// radial bump of the 3+1 examples: 0 on [0,3] and [6,inf), 1 on [4,5]
double theta_rbar(double r, int order = 0);
// polar bump of the 3+1 examples: 0 outside [pi/6,5pi/6], 1 on [pi/4,3pi/4]
double theta_vartheta(double th, int order = 0);

// Lookup by name ("theta1".."theta4", "theta_rbar", "theta_vartheta", "smoothstep").
// Throws std::invalid_argument for unknown names or order > 4.
double smooth_cutoff(const std::string& name, double x, int order);

}  // namespace ergo
