#include <cmath>

#include "crlab/stopping.hpp"

namespace crlab::stopping {

double overlay_power(double gamma, double lambda_p, std::optional<double> p_max) {
  double level = lambda_p > 0.0 ? 1.0 / lambda_p : kInf;
  double p = gamma > 0.0 ? level - 1.0 / gamma : 0.0;
  if (!(p > 0.0))
    return 0.0;
  if (p_max)
    p = std::min(p, *p_max);
  return p;
}

double OverlayPolicy::power(double gamma) const { return overlay_power(gamma, lambda_p, p_max); }

StageIntegrals stage_integrals(const Density1D& gain, double threshold, double kappa,
                               std::optional<double> p_max, const RecursionOptions& opts) {
  StageIntegrals out;
  if (std::isinf(threshold))
    return out;
  out.prob = gain.ccdf(threshold);
  if (std::isinf(kappa))
    return out;
  if (kappa <= 0.0 && !p_max)
    throw DomainError("stage_integrals: zero water level without a power cap");

  double lo = std::max(threshold, kappa);
  if (opts.closed_form && !p_max && gain.kind() == Density1D::Kind::Exponential) {
    double m = gain.scale();
    double x = lo / m;
    double e = std::exp(-x);
    double e1 = numerics::expint_e1(x);
    out.log_rate = e * std::log(lo / kappa) + e1;
    out.power = std::max(0.0, e / kappa - e1 / m);
    return out;
  }
  auto power = [&](double g) { return overlay_power(g, kappa, p_max); };
  out.log_rate = numerics::integrate([&](double g) { return std::log1p(power(g) * g); }, gain, lo, opts.quad);
  out.power = numerics::integrate(power, gain, lo, opts.quad);
  return out;
}

double stage_threshold(double kappa, double a_plus, double c, std::optional<double> p_max) {
  if (std::isinf(kappa))
    return kInf;
  double delta = std::max(a_plus, 0.0) / c;
  double gamma = kInf;
  if (kappa > 0.0) {
    double w = numerics::lambert_w0(-std::exp(-delta - 1.0));
    gamma = w < 0.0 ? -kappa / w : kInf;
  } else if (!p_max) {
    throw DomainError("stage_threshold: zero water level without a power cap");
  }
  if (p_max && (kappa == 0.0 || 1.0 / kappa - 1.0 / gamma > *p_max))
    gamma = std::expm1(delta + kappa * *p_max) / *p_max;
  return gamma;
}

double threshold_residual(double gamma, double lambda_p, double rhs) {
  double p = 1.0 / lambda_p - 1.0 / gamma;
  return std::log(1.0 + p * gamma) - lambda_p * p - rhs;
}

}  // namespace crlab::stopping
