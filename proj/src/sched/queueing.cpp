#include <algorithm>
#include <cmath>
#include <numbers>

#include "crlab/sched.hpp"

namespace crlab::sched {

namespace {

const numerics::QuadratureSpec kMuQuad{1e-14, 1e-9, 500, 1e-13};

// e^x E1(x) for x > 0 without overflow.
double exp_e1(double x) {
  if (x < 200.0)
    return std::exp(x) * numerics::expint_e1(x);
  double term = 1.0 / x, sum = 0.0;
  for (int k = 1; k <= 6; ++k) {
    sum += term;
    term *= -k / x;
  }
  return sum;
}

// E[min(log2(1 + a gamma), r_max)] over the gain density.
double mean_log_rate(const Density1D& gain, double a, std::optional<double> r_max) {
  if (a <= 0.0)
    return 0.0;
  if (gain.kind() == Density1D::Kind::Exponential) {
    double m = gain.scale();
    bool clamp_negligible = !r_max || (std::exp2(*r_max) - 1.0) / (a * m) > 700.0;
    if (clamp_negligible)
      return exp_e1(1.0 / (a * m)) / std::numbers::ln2;
  }
  auto f = [&](double g) {
    double r = std::log2(1.0 + a * g);
    return r_max ? std::min(r, *r_max) : r;
  };
  return numerics::integrate(f, gain, std::max(0.0, gain.support_lower()), kMuQuad);
}

}  // namespace

void SuProfile::validate() const {
  if (!(lambda >= 0.0 && lambda < 1.0))
    throw DomainError("SuProfile: lambda must lie in [0, 1)");
  if (!(d >= 1.0))
    throw DomainError("SuProfile: d must be at least 1");
  if (L < 1)
    throw DomainError("SuProfile: L must be positive");
  if (gain.support_lower() < 0.0 || interference.support_lower() < 0.0)
    throw DomainError("SuProfile: channel gains must be nonnegative");
}

void FleetConfig::validate() const {
  if (sus.empty())
    throw DomainError("FleetConfig: need at least one SU");
  if (!(p_max > 0.0) || !(i_inst > 0.0) || !(V > 0.0))
    throw DomainError("FleetConfig: p_max, i_inst and V must be positive");
  if (i_avg && !(*i_avg >= 0.0))
    throw DomainError("FleetConfig: i_avg must be nonnegative");
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw DomainError("FleetConfig: epsilon must lie in (0, 1)");
  if (r_max && !(*r_max > 0.0))
    throw DomainError("FleetConfig: r_max must be positive");
  for (const auto& su : sus) su.validate();
}

double effective_rate(double p_param, double g, double gamma, double i_inst, std::optional<double> r_max) {
  double p = g > 0.0 ? std::min(i_inst / g, p_param) : p_param;
  double r = std::log2(1.0 + p * gamma);
  return r_max ? std::min(r, *r_max) : r;
}

double mu_of_power(const SuProfile& su, double p_param, double i_inst, std::optional<double> r_max) {
  if (!(p_param > 0.0))
    throw DomainError("mu_of_power: P must be positive");
  // Below g = i_inst/P the parameter binds; above it the interference cap does.
  double knee = i_inst / p_param;
  double capped_mass = su.interference.ccdf(knee);
  double below = (1.0 - capped_mass) * mean_log_rate(su.gain, p_param, r_max);
  double above = 0.0;
  if (capped_mass > 0.0) {
    auto f = [&](double g) { return mean_log_rate(su.gain, i_inst / g, r_max); };
    above = numerics::integrate(f, su.interference, knee, kMuQuad);
  }
  return (below + above) / su.L;
}

double p_nonzero(const SuProfile& su) {
  if (su.gain.is_discrete()) {
    double p = 0.0;
    for (const auto& a : su.gain.atoms())
      if (a.x > 0.0) p += a.mass;
    return p;
  }
  return su.gain.ccdf(0.0);
}

ServiceMoments service_moments(double p, int L) {
  if (!(p > 0.0 && p <= 1.0))
    throw DomainError("service_moments: p must lie in (0, 1]");
  if (L < 1)
    throw DomainError("service_moments: L must be positive");
  double l = L, q = 1.0 - p;
  double nb_mean = q * l / p;
  double nb_second = (q * q * l * l + q * l) / (p * p);
  ServiceMoments m;
  m.mean = l + nb_mean;
  m.second_moment = nb_second + 2.0 * l * nb_mean + l * l;
  m.lemma_bound = (l * l + l * q) / (p * p);
  return m;
}

MuCurve::MuCurve(const SuProfile& su, double p_max, double i_inst, std::optional<double> r_max, int points,
                 double span) {
  if (points < 2 || !(span > 0.0 && span < 1.0))
    throw DomainError("MuCurve: need >= 2 points and span in (0, 1)");
  int n = points;
  double lo = std::log(p_max * span), hi = std::log(p_max);
  logp_.resize(n);
  mu_.resize(n);
  for (int k = 0; k < n; ++k) {
    logp_[k] = k + 1 == n ? hi : lo + (hi - lo) * k / (n - 1);
    mu_[k] = mu_of_power(su, std::exp(logp_[k]), i_inst, r_max);
  }
  // Fritsch-Carlson slopes.
  std::vector<double> delta(n - 1);
  for (int k = 0; k + 1 < n; ++k) delta[k] = (mu_[k + 1] - mu_[k]) / (logp_[k + 1] - logp_[k]);
  slope_.assign(n, 0.0);
  slope_[0] = delta[0];
  slope_[n - 1] = delta[n - 2];
  for (int k = 1; k + 1 < n; ++k)
    slope_[k] = delta[k - 1] * delta[k] <= 0.0 ? 0.0 : 0.5 * (delta[k - 1] + delta[k]);
  for (int k = 0; k + 1 < n; ++k) {
    if (delta[k] == 0.0) {
      slope_[k] = slope_[k + 1] = 0.0;
      continue;
    }
    double a = slope_[k] / delta[k], b = slope_[k + 1] / delta[k];
    double s = a * a + b * b;
    if (s > 9.0) {
      double t = 3.0 / std::sqrt(s);
      slope_[k] = t * a * delta[k];
      slope_[k + 1] = t * b * delta[k];
    }
  }
}

double MuCurve::operator()(double P) const {
  if (logp_.empty())
    throw DomainError("MuCurve: empty curve");
  if (!(P > 0.0))
    return 0.0;
  double x = std::log(P);
  if (x <= logp_.front()) {
    // mu is close to linear in P at small powers.
    return mu_.front() * P / std::exp(logp_.front());
  }
  if (x >= logp_.back())
    return mu_.back();
  auto it = std::upper_bound(logp_.begin(), logp_.end(), x);
  int k = static_cast<int>(it - logp_.begin()) - 1;
  double h = logp_[k + 1] - logp_[k], t = (x - logp_[k]) / h;
  double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * mu_[k] + (t3 - 2 * t2 + t) * h * slope_[k] + (-2 * t3 + 3 * t2) * mu_[k + 1] +
         (t3 - t2) * h * slope_[k + 1];
}

QueueingConstants QueueingConstants::build(const FleetConfig& fleet) {
  fleet.validate();
  QueueingConstants c;
  int n = fleet.N();
  c.p_max = fleet.p_max;
  for (const auto& su : fleet.sus) {
    c.lambda_offered.push_back(su.lambda);
    c.mu_curves.emplace_back(su, fleet.p_max, fleet.i_inst, fleet.r_max);
    c.p_nonzero.push_back(sched::p_nonzero(su));
    c.L.push_back(su.L);
  }
  c.lambda = c.lambda_offered;
  double load = 0.0;
  for (int i = 0; i < n; ++i) load += c.rho(i, c.p_max);
  if (fleet.admission_control && load >= 1.0) {
    c.admission_scale = (1.0 - fleet.epsilon) / load;
    for (auto& l : c.lambda) l *= c.admission_scale;
    load *= c.admission_scale;
  }
  c.stable = load < 1.0;
  c.P_min.assign(n, c.p_max);
  if (!c.stable)
    return c;

  std::vector<double> p_at_min(n);
  for (int i = 0; i < n; ++i) {
    double others = load - c.rho(i, c.p_max);
    c.P_min[i] = min_power(c, i, 1.0 - others);
    p_at_min[i] = c.p_nonzero[i];
  }
  c.T_R = residual_bound(c.lambda, p_at_min, c.L);

  auto total = [&](double P) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += c.rho(i, P);
    return s;
  };
  double lo = c.mu_curves[0].p_lo(), hi = c.p_max;
  if (total(lo) < 1.0) {
    c.P_min_global = lo;
  } else {
    while (hi - lo > 1e-12 * c.p_max) {
      double mid = 0.5 * (lo + hi);
      (total(mid) < 1.0 ? hi : lo) = mid;
    }
    c.P_min_global = hi;
  }
  return c;
}

StabilityReport stability_check(const QueueingConstants& consts) {
  StabilityReport r;
  for (int i = 0; i < consts.N(); ++i) r.load += consts.rho(i, consts.p_max);
  r.stable = r.load < 1.0;
  r.margin = 1.0 - r.load;
  return r;
}

double residual_bound(const std::vector<double>& lambda, const std::vector<double>& p_at_min,
                      const std::vector<int>& L) {
  if (lambda.size() != p_at_min.size() || lambda.size() != L.size())
    throw DomainError("residual_bound: size mismatch");
  double t = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    double p = p_at_min[i], l = L[i];
    if (!(p > 0.0))
      throw InfeasibleError("residual_bound: SU never transmits a bit");
    t += lambda[i] * (l * l + l * (1.0 - p)) / (p * p) / 2.0;
  }
  return t;
}

double min_power(const QueueingConstants& consts, int i, double budget) {
  if (!(consts.rho(i, consts.p_max) < budget))
    throw InfeasibleError("min_power: load condition fails even at P_max");
  double lo = consts.mu_curves[i].p_lo(), hi = consts.p_max;
  if (consts.rho(i, lo) < budget)
    return lo;
  while (hi - lo > 1e-12 * consts.p_max) {
    double mid = 0.5 * (lo + hi);
    (consts.rho(i, mid) < budget ? hi : lo) = mid;
  }
  return hi;
}

double w_up(double P, double rho_prev_max, const QueueingConstants& consts, int i) {
  double head = 1.0 - rho_prev_max;
  double tail = head - consts.rho(i, P);
  if (!(head > 0.0) || !(tail > 0.0))
    throw SaturationError("w_up: load reaches 1");
  return (1.0 / consts.mu(i, P) + consts.T_R / tail) / head;
}

PsiTerms psi_terms(double Y, double X, double P, double rho_prev_max, const QueueingConstants& consts, int i) {
  PsiTerms t;
  t.psi_d = Y * consts.lambda[i] * w_up(P, rho_prev_max, consts, i);
  t.psi_i = X * consts.rho(i, P) * P;
  t.psi = t.psi_d + t.psi_i;
  return t;
}

PowerChoice best_power(double Y, double X, double rho_prev_max, const QueueingConstants& consts, int i) {
  double lo = consts.P_min[i], hi = consts.p_max;
  auto psi = [&](double P) {
    try {
      return psi_terms(Y, X, P, rho_prev_max, consts, i).psi;
    } catch (const SaturationError&) {
      return kInf;
    }
  };
  PowerChoice c;
  if (Y <= 0.0 && X <= 0.0) {
    // Flat objective: keep full power.
    c.P = hi;
    c.psi = psi(hi);
  } else {
    auto g = numerics::golden_min(psi, lo, hi, kPowerSearchEvaluations);
    c.P = g.x;
    c.psi = g.fx;
  }
  c.rho = consts.rho(i, c.P);
  return c;
}

std::vector<ChainLink> brho_max_chain(const std::vector<int>& priority, const QueueingConstants& consts, double X,
                                      const std::vector<double>& Y) {
  std::vector<ChainLink> out;
  double rho_max = 0.0;
  for (int i : priority) {
    PowerChoice c = best_power(Y[i], X, rho_max, consts, i);
    if (!std::isfinite(c.psi))
      throw SaturationError("brho_max_chain: load reaches 1");
    rho_max += c.rho;
    out.push_back({c.P, c.psi, rho_max});
  }
  return out;
}

}  // namespace crlab::sched
