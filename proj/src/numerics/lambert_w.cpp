#include <cmath>
#include <numbers>

#include "crlab/numerics.hpp"

namespace crlab::numerics {

namespace {

constexpr double kE = std::numbers::e;
constexpr double kInvE = 1.0 / std::numbers::e;

double branch_point_series(double p) {
  return -1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * (769.0 / 17280.0)))));
}

double initial_guess(double x) {
  if (x < -0.32358)
    return branch_point_series(std::sqrt(2.0 * (1.0 + kE * x)));
  if (x <= kE) {
    double l = std::log1p(x);
    return l * (1.0 - std::log1p(l) / (2.0 + l));
  }
  double l1 = std::log(x);
  double l2 = std::log(l1);
  return l1 - l2 + l2 / l1;
}

}  // namespace

double lambert_w0(double x) {
  if (std::isnan(x))
    throw DomainError("lambert_w0: NaN argument");
  if (x < -kInvE) {
    if (x + kInvE > -4.0 * std::numeric_limits<double>::epsilon() * kInvE)
      return -1.0;
    throw DomainError("lambert_w0: argument below -1/e");
  }
  if (x == 0.0)
    return 0.0;
  if (std::isinf(x))
    return kInf;

  double q = 1.0 + kE * x;
  if (q < 1e-10)
    return branch_point_series(std::sqrt(2.0 * std::max(q, 0.0)));

  double w = initial_guess(x);
  for (int it = 0; it < 40; ++it) {
    double ew = std::exp(w);
    double f = w * ew - x;
    double wp1 = w + 1.0;
    double denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
    double step = f / denom;
    w -= step;
    if (std::abs(step) <= 4e-16 * (1.0 + std::abs(w)))
      break;
  }
  return std::max(w, -1.0);
}

}  // namespace crlab::numerics
