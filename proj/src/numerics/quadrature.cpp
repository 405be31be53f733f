#include <algorithm>
#include <cmath>
#include <queue>

#include "crlab/numerics.hpp"

namespace crlab::numerics {

namespace {

constexpr double kXgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
constexpr double kWgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077708671306270, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
constexpr double kWg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651146};

struct Piece {
  double a, b, result, error;
  bool operator<(const Piece& o) const { return error < o.error; }
};

Piece gk21(const RealFn& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double resk = fc * kWgk[10];
  double resabs = std::abs(resk);
  double resg = 0.0;
  double fv1[10], fv2[10];
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(center - dx);
    const double f2 = f(center + dx);
    fv1[j] = f1;
    fv2[j] = f2;
    resk += kWgk[j] * (f1 + f2);
    resabs += kWgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1)
      resg += kWg[j / 2] * (f1 + f2);
  }
  const double mean = 0.5 * resk;
  double resasc = kWgk[10] * std::abs(fc - mean);
  for (int j = 0; j < 10; ++j)
    resasc += kWgk[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));

  const double result = resk * half;
  resabs *= std::abs(half);
  resasc *= std::abs(half);
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  if (resabs > std::numeric_limits<double>::min() / (50.0 * std::numeric_limits<double>::epsilon()))
    err = std::max(50.0 * std::numeric_limits<double>::epsilon() * resabs, err);
  return {a, b, result, err};
}

}  // namespace

void QuadratureSpec::validate() const {
  if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
    throw DomainError("QuadratureSpec: tolerances must be positive");
  if (max_subdivisions < 1)
    throw DomainError("QuadratureSpec: max_subdivisions must be >= 1");
  if (!(infinite_tail_cutoff_mass > 0.0) || infinite_tail_cutoff_mass > 1e-9)
    throw DomainError("QuadratureSpec: tail cutoff must lie in (0, 1e-9]");
}

double quad(const RealFn& f, double a, double b, const QuadratureSpec& spec) {
  if (!std::isfinite(a) || !std::isfinite(b))
    throw DomainError("quad: interval must be finite");
  if (a == b)
    return 0.0;
  if (a > b)
    return -quad(f, b, a, spec);

  std::priority_queue<Piece> heap;
  Piece first = gk21(f, a, b);
  double total = first.result;
  double total_err = first.error;
  heap.push(first);

  int subdivisions = 1;
  while (total_err > std::max(spec.abs_tol, spec.rel_tol * std::abs(total))) {
    if (subdivisions >= spec.max_subdivisions)
      throw ToleranceError("quad: subdivision limit reached before tolerance was met");
    Piece worst = heap.top();
    double mid = 0.5 * (worst.a + worst.b);
    if (mid <= worst.a || mid >= worst.b)
      break;  // interval at machine resolution
    heap.pop();
    Piece left = gk21(f, worst.a, mid);
    Piece right = gk21(f, mid, worst.b);
    total += left.result + right.result - worst.result;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++subdivisions;
    if (subdivisions % 64 == 0) {
      // Resum to shed accumulated cancellation error.
      auto copy = heap;
      total = 0.0;
      total_err = 0.0;
      while (!copy.empty()) {
        total += copy.top().result;
        total_err += copy.top().error;
        copy.pop();
      }
    }
  }
  return total;
}

double integrate(const RealFn& f, const Density1D& density, double lower, const QuadratureSpec& spec) {
  if (density.is_discrete()) {
    double sum = 0.0;
    for (const Atom& atom : density.atoms())
      if (atom.x >= lower)
        sum += atom.mass * f(atom.x);
    return sum;
  }
  double a = std::max(lower, density.support_lower());
  double b = density.support_upper();
  if (std::isinf(a))
    a = density.lower_cutoff(spec.infinite_tail_cutoff_mass);
  if (std::isinf(b))
    b = density.upper_cutoff(spec.infinite_tail_cutoff_mass);
  if (!(a < b))
    return 0.0;
  return quad([&](double x) { return f(x) * density.pdf(x); }, a, b, spec);
}

double expint_e1(double x) {
  if (!(x > 0.0))
    throw DomainError("expint_e1: argument must be positive");
  if (x > 700.0)
    return 0.0;
  return -std::expint(-x);
}

}  // namespace crlab::numerics
