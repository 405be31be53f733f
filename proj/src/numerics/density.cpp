#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "crlab/numerics.hpp"

namespace crlab::numerics {

struct Density1D::Impl {
  Kind kind;
  double a = 0.0;  // mean / scale / noise variance
  double b = 0.0;  // signal energy
  int n = 0;       // sample count
  std::vector<Atom> atoms;
  RealFn pdf;
  RealFn ccdf;
  double lower = 0.0;
  double upper = kInf;
  double mean = 0.0;
};

namespace {

// Regularized upper incomplete gamma Q(n, y) for integer n >= 1.
double gamma_q_int(int n, double y) {
  if (y <= 0.0)
    return 1.0;
  double log_y = std::log(y);
  double sum = 0.0;
  for (int j = 0; j < n; ++j)
    sum += std::exp(-y + j * log_y - std::lgamma(j + 1.0));
  return std::min(1.0, sum);
}

double log_bessel_i(double nu, double x) {
  if (x < 600.0)
    return std::log(std::cyl_bessel_i(nu, x));
  // Large-argument expansion, two correction terms.
  double mu = 4.0 * nu * nu;
  double corr = 1.0 - (mu - 1.0) / (8.0 * x) + (mu - 1.0) * (mu - 9.0) / (2.0 * 64.0 * x * x);
  return x - 0.5 * std::log(2.0 * std::numbers::pi * x) + std::log(corr);
}

struct PoissonWeights {
  int k0, k1;
  std::vector<double> w;
};

PoissonWeights poisson_weights(double mean) {
  int mode = static_cast<int>(mean);
  int span = static_cast<int>(12.0 * std::sqrt(mean + 1.0)) + 20;
  PoissonWeights pw{std::max(0, mode - span), mode + span, {}};
  for (int k = pw.k0; k <= pw.k1; ++k)
    pw.w.push_back(std::exp(-mean + k * std::log(std::max(mean, 1e-300)) - std::lgamma(k + 1.0)));
  if (mean == 0.0) {
    pw = {0, 0, {1.0}};
  }
  return pw;
}

}  // namespace

Density1D Density1D::exponential(double mean) {
  if (!(mean > 0.0))
    throw DomainError("exponential: mean must be positive");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Exponential;
  impl->a = mean;
  impl->lower = 0.0;
  impl->mean = mean;
  return Density1D(impl);
}

Density1D Density1D::gumbel(double scale) {
  if (!(scale > 0.0))
    throw DomainError("gumbel: scale must be positive");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Gumbel;
  impl->a = scale;
  impl->lower = -kInf;
  impl->mean = scale * std::numbers::egamma;
  return Density1D(impl);
}

Density1D Density1D::energy_free(int n, double noise_var) {
  if (n < 1 || !(noise_var > 0.0))
    throw DomainError("energy_free: need n >= 1 and positive noise variance");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::GammaEnergy;
  impl->a = noise_var;
  impl->n = n;
  impl->mean = noise_var;
  return Density1D(impl);
}

Density1D Density1D::energy_busy(int n, double noise_var, double energy) {
  if (n < 1 || !(noise_var > 0.0) || !(energy >= 0.0))
    throw DomainError("energy_busy: need n >= 1, positive noise variance, energy >= 0");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::NoncentralEnergy;
  impl->a = noise_var;
  impl->b = energy;
  impl->n = n;
  impl->mean = noise_var + energy;
  return Density1D(impl);
}

Density1D Density1D::point_mass(double x) { return discrete({{x, 1.0}}); }

Density1D Density1D::discrete(std::vector<Atom> atoms) {
  if (atoms.empty())
    throw DomainError("discrete: no atoms");
  double total = 0.0;
  for (const Atom& at : atoms) {
    if (!(at.mass >= 0.0) || !std::isfinite(at.x))
      throw DomainError("discrete: atoms need finite location and nonnegative mass");
    total += at.mass;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw DomainError("discrete: masses must sum to 1");
  std::sort(atoms.begin(), atoms.end(), [](const Atom& l, const Atom& r) { return l.x < r.x; });
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Discrete;
  impl->atoms = std::move(atoms);
  impl->lower = impl->atoms.front().x;
  impl->upper = impl->atoms.back().x;
  for (const Atom& at : impl->atoms)
    impl->mean += at.x * at.mass;
  return Density1D(impl);
}

Density1D Density1D::custom(RealFn pdf, double lower, double upper, RealFn ccdf) {
  if (!(lower < upper) || std::isinf(lower))
    throw DomainError("custom: need finite lower < upper");
  if (std::isinf(upper) && !ccdf)
    throw DomainError("custom: infinite support needs a ccdf");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::Custom;
  impl->pdf = std::move(pdf);
  impl->ccdf = std::move(ccdf);
  impl->lower = lower;
  impl->upper = upper;
  Density1D d(impl);
  double hi = std::isinf(upper) ? d.upper_cutoff(1e-12) : upper;
  impl->mean = quad([&](double x) { return x * impl->pdf(x); }, lower, hi);
  return d;
}

Density1D::Kind Density1D::kind() const { return impl_->kind; }

std::span<const Atom> Density1D::atoms() const { return impl_->atoms; }

double Density1D::mean() const { return impl_->mean; }
double Density1D::support_lower() const { return impl_->lower; }
double Density1D::support_upper() const { return impl_->upper; }
double Density1D::scale() const { return impl_->a; }

double Density1D::pdf(double x) const {
  const Impl& d = *impl_;
  switch (d.kind) {
    case Kind::Exponential:
      return x < 0.0 ? 0.0 : std::exp(-x / d.a) / d.a;
    case Kind::Gumbel: {
      double t = std::exp(-x / d.a);
      return t * std::exp(-t) / d.a;
    }
    case Kind::GammaEnergy: {
      if (x < 0.0) return 0.0;
      if (x == 0.0) return d.n == 1 ? d.n / d.a : 0.0;
      double rate = d.n / d.a;
      return std::exp(d.n * std::log(rate) + (d.n - 1) * std::log(x) - rate * x - std::lgamma(d.n));
    }
    case Kind::NoncentralEnergy: {
      if (x < 0.0) return 0.0;
      double rate = d.n / d.a;
      if (d.b == 0.0)
        return std::exp(d.n * std::log(rate) + (d.n - 1) * std::log(x) - rate * x - std::lgamma(d.n));
      if (x == 0.0) return d.n == 1 ? rate * std::exp(-rate * d.b) : 0.0;
      double nu = d.n - 1.0;
      double arg = 2.0 * rate * std::sqrt(d.b * x);
      return std::exp(std::log(rate) + 0.5 * nu * std::log(x / d.b) - rate * (x + d.b) + log_bessel_i(nu, arg));
    }
    case Kind::Discrete:
      return 0.0;
    case Kind::Custom:
      return (x < d.lower || x > d.upper) ? 0.0 : d.pdf(x);
  }
  return 0.0;
}

double Density1D::likelihood(double x) const {
  if (!is_discrete())
    return pdf(x);
  double m = 0.0;
  for (const Atom& at : impl_->atoms)
    if (at.x == x) m += at.mass;
  return m;
}

double Density1D::ccdf(double x) const {
  const Impl& d = *impl_;
  switch (d.kind) {
    case Kind::Exponential:
      return x <= 0.0 ? 1.0 : std::exp(-x / d.a);
    case Kind::Gumbel:
      return -std::expm1(-std::exp(-x / d.a));
    case Kind::GammaEnergy:
      return gamma_q_int(d.n, d.n * x / d.a);
    case Kind::NoncentralEnergy: {
      double rate = d.n / d.a;
      PoissonWeights pw = poisson_weights(rate * d.b);
      double y = rate * x;
      double sum = 0.0;
      for (int k = pw.k0; k <= pw.k1; ++k)
        sum += pw.w[k - pw.k0] * gamma_q_int(d.n + k, y);
      return std::min(1.0, sum);
    }
    case Kind::Discrete: {
      double s = 0.0;
      for (const Atom& at : d.atoms)
        if (at.x >= x) s += at.mass;
      return s;
    }
    case Kind::Custom:
      if (x <= d.lower) return 1.0;
      if (x >= d.upper) return 0.0;
      if (d.ccdf) return d.ccdf(x);
      return quad(d.pdf, x, d.upper);
  }
  return 0.0;
}

double Density1D::lower_cutoff(double mass) const {
  if (impl_->kind == Kind::Gumbel)
    return -impl_->a * std::log(-std::log(mass));
  return impl_->lower;
}

double Density1D::upper_cutoff(double mass) const {
  const Impl& d = *impl_;
  switch (d.kind) {
    case Kind::Exponential:
      return -d.a * std::log(mass);
    case Kind::Gumbel:
      return -d.a * std::log(-std::log1p(-mass));
    case Kind::Discrete:
      return d.upper;
    default:
      break;
  }
  if (std::isfinite(d.upper))
    return d.upper;
  double hi = std::max(1.0, 2.0 * std::abs(d.mean));
  while (ccdf(hi) > mass)
    hi *= 2.0;
  double lo = hi / 2.0;
  for (int it = 0; it < 80 && hi - lo > 1e-9 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (ccdf(mid) > mass ? lo : hi) = mid;
  }
  return hi;
}

double inverse_ccdf(const Density1D& density, double q) {
  if (!(q > 0.0) || q > 1.0)
    throw DomainError("inverse_ccdf: q must lie in (0, 1]");
  const auto& d = *density.impl_;
  switch (d.kind) {
    case Density1D::Kind::Exponential:
      return -d.a * std::log(q);
    case Density1D::Kind::Gumbel:
      if (q == 1.0) return -kInf;
      return -d.a * std::log(-std::log1p(-q));
    case Density1D::Kind::Discrete: {
      double x = d.atoms.front().x;
      for (const Atom& at : d.atoms)
        if (density.ccdf(at.x) >= q) x = at.x;
      return x;
    }
    default:
      break;
  }
  if (q == 1.0)
    return d.lower;
  double lo = d.lower;
  double hi = density.upper_cutoff(std::min(q, 1e-12));
  for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, std::abs(hi)); ++it) {
    double mid = 0.5 * (lo + hi);
    (density.ccdf(mid) > q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double Density1D::sample(Rng& rng) const {
  const Impl& d = *impl_;
  switch (d.kind) {
    case Kind::Exponential:
      return -d.a * std::log(rng.uniform());
    case Kind::Gumbel:
      return -d.a * std::log(-std::log(rng.uniform()));
    case Kind::GammaEnergy: {
      std::gamma_distribution<double> g(d.n, d.a / d.n);
      return g(rng);
    }
    case Kind::NoncentralEnergy: {
      int k = 0;
      if (d.b > 0.0) {
        std::poisson_distribution<int> pois(d.n * d.b / d.a);
        k = pois(rng);
      }
      std::gamma_distribution<double> g(d.n + k, d.a / d.n);
      return g(rng);
    }
    case Kind::Discrete: {
      double u = rng.uniform();
      double acc = 0.0;
      for (const Atom& at : d.atoms) {
        acc += at.mass;
        if (u <= acc) return at.x;
      }
      return d.atoms.back().x;
    }
    case Kind::Custom:
      return inverse_ccdf(*this, rng.uniform());
  }
  return 0.0;
}

}  // namespace crlab::numerics
