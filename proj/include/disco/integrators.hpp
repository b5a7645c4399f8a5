#pragma once

#include <array>

#include <Eigen/Core>

namespace disco {

/// Dormand-Prince 5(4) tableau, used here as a fixed-step 5th-order method
/// (the embedded 4th-order solution and step control are not used).
struct DormandPrince {
  static constexpr int stages = 6;
  static constexpr std::array<std::array<double, 5>, 6> a{{
      {0, 0, 0, 0, 0},
      {1.0 / 5, 0, 0, 0, 0},
      {3.0 / 40, 9.0 / 40, 0, 0, 0},
      {44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
  }};
  static constexpr std::array<double, 6> b{35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84};
};

/// One fixed step of an autonomous ODE y' = f(y) (parameters held constant
/// over the step).
template <class F, class Vec>
Vec dp5_step(F&& f, const Vec& y, double h) {
  using DP = DormandPrince;
  std::array<Vec, DP::stages> k;
  for (int s = 0; s < DP::stages; ++s) {
    Vec ys = y;
    for (int r = 0; r < s; ++r)
      if (DP::a[s][r] != 0.0) ys += (h * DP::a[s][r]) * k[r];
    k[s] = f(ys);
  }
  Vec out = y;
  for (int s = 0; s < DP::stages; ++s)
    if (DP::b[s] != 0.0) out += (h * DP::b[s]) * k[s];
  return out;
}

template <class F, class Vec>
Vec fe_step(F&& f, const Vec& y, double h) {
  return y + h * f(y);
}

}  // namespace disco
