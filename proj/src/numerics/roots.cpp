#include <cmath>
#include <numbers>

#include "crlab/numerics.hpp"

namespace crlab::numerics {

double bisect(const RealFn& f, double lo, double hi, double tol, int max_iter) {
  if (!(tol > 0.0))
    throw DomainError("bisect: tolerance must be positive");
  if (lo > hi)
    std::swap(lo, hi);
  double flo = f(lo);
  if (std::abs(flo) <= tol)
    return lo;
  double fhi = f(hi);
  if (std::abs(fhi) <= tol)
    return hi;
  if (std::isnan(flo) || std::isnan(fhi))
    throw DomainError("bisect: NaN at bracket endpoint");
  if (std::signbit(flo) == std::signbit(fhi))
    throw NoBracketError("bisect: no sign change on bracket");

  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (std::abs(fm) <= tol || hi - lo <= tol * std::max(1.0, std::abs(mid)))
      return mid;
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
    if (mid == lo && mid == hi)
      break;
  }
  return mid;
}

GoldenResult golden_min(const RealFn& f, double lo, double hi, int evaluations) {
  if (evaluations < 3)
    throw DomainError("golden_min: need at least 3 evaluations");
  const double r = 1.0 / std::numbers::phi;

  GoldenResult best{lo, f(lo)};
  auto consider = [&](double x, double fx) {
    if (fx < best.fx) best = {x, fx};
  };
  if (hi <= lo)
    return best;
  consider(hi, f(hi));

  double a = lo, b = hi;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  consider(x1, f1);
  consider(x2, f2);
  // Ties (including two saturated +inf values) move the bracket upward.
  for (int used = 4; used < evaluations; ++used) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
      consider(x1, f1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
      consider(x2, f2);
    }
  }
  return best;
}

}  // namespace crlab::numerics
