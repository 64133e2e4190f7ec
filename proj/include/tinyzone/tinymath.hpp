#pragma once

#include "tinyzone/error.hpp"

// Freestanding math kernels for the secure-side build. Nothing in this header
// or its implementation may pull in the host math library; accuracy target is
// 1e-6 (relative for sqrt/exp/log, absolute for sin) on the documented domains.

namespace tinyzone {

double t_sqrt(double x);   // x >= 0
double t_exp(double x);    // |x| <= 700
double t_log(double x);    // x > 0
double t_sin(double x);    // |x| <= 1e4
double t_floor(double x);  // finite x
double t_pow(double x, double y);  // x > 0, plus x == 0 with y > 0

inline float t_sqrtf(float x) { return static_cast<float>(t_sqrt(x)); }
inline float t_expf(float x) { return static_cast<float>(t_exp(x)); }

} // namespace tinyzone
