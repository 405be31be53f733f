#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <vector>

#include "crlab/errors.hpp"
#include "crlab/rng.hpp"

namespace crlab::numerics {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using RealFn = std::function<double(double)>;

// Principal branch W0 on [-1/e, inf).
double lambert_w0(double x);

// Bisection on a monotone f. Returns x with |f(x)| <= tol or a bracket
// narrower than tol * max(1, |x|).
double bisect(const RealFn& f, double lo, double hi, double tol, int max_iter = 400);

// Golden-section minimization using exactly `evaluations` calls of f on the
// interior plus the two endpoints. Deterministic for a fixed (f, lo, hi).
struct GoldenResult {
  double x;
  double fx;
};
GoldenResult golden_min(const RealFn& f, double lo, double hi, int evaluations);

struct QuadratureSpec {
  double abs_tol = 1e-13;
  double rel_tol = 1e-10;
  int max_subdivisions = 500;
  double infinite_tail_cutoff_mass = 1e-12;

  void validate() const;
};

// Adaptive Gauss-Kronrod (10/21) on a finite interval.
double quad(const RealFn& f, double a, double b, const QuadratureSpec& spec = {});

struct Atom {
  double x;
  double mass;
};

class Density1D {
 public:
  enum class Kind { Exponential, Gumbel, GammaEnergy, NoncentralEnergy, Discrete, Custom };

  static Density1D exponential(double mean);
  // CDF exp(-exp(-x/scale)), support the whole real line.
  static Density1D gumbel(double scale);
  // Average energy of n complex noise samples: Gamma(n, noise_var/n).
  static Density1D energy_free(int n, double noise_var);
  // Same statistic with a deterministic signal of energy `energy` added.
  static Density1D energy_busy(int n, double noise_var, double energy);
  static Density1D point_mass(double x);
  static Density1D discrete(std::vector<Atom> atoms);
  // A continuous density given only by its pdf. An infinite upper support
  // needs a ccdf so the tail can be truncated.
  static Density1D custom(RealFn pdf, double lower, double upper, RealFn ccdf = {});

  Kind kind() const;
  bool is_discrete() const { return kind() == Kind::Discrete; }
  std::span<const Atom> atoms() const;

  double pdf(double x) const;
  // Density for continuous kinds, atom mass at x for discrete ones.
  double likelihood(double x) const;
  // Pr[X >= x].
  double ccdf(double x) const;
  double cdf(double x) const { return 1.0 - ccdf(x); }
  double mean() const;
  double support_lower() const;
  double support_upper() const;
  // Exponential parameter when kind() == Exponential.
  double scale() const;

  // Points beyond which the lower/upper tail mass is below `mass`.
  double lower_cutoff(double mass) const;
  double upper_cutoff(double mass) const;

  double sample(Rng& rng) const;

 private:
  struct Impl;
  explicit Density1D(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  std::shared_ptr<const Impl> impl_;

  friend double inverse_ccdf(const Density1D&, double);
};

// Integral of f(x) * pdf(x) over [lower, support_upper]. For discrete
// densities, the sum over atoms with x >= lower.
double integrate(const RealFn& f, const Density1D& density, double lower,
                 const QuadratureSpec& spec = {});

// x with Pr[X >= x] = q.
double inverse_ccdf(const Density1D& density, double q);

// E1(x) for x > 0.
double expint_e1(double x);

}  // namespace crlab::numerics
