#include <cmath>
#include <unordered_map>

#include "crlab/stopping.hpp"

namespace crlab::stopping {

namespace {

double kappa_of(double lambda_p, double lambda_i, double posterior) {
  if (posterior <= 0.0)
    return lambda_p;
  return lambda_p + lambda_i * posterior;
}

struct DensityMoments {
  double prob = 0.0;
  double log_rate = 0.0;
  double power = 0.0;
};

bool at_floor(const UnderlayPolicy& pol) {
  for (std::size_t i = 0; i + 1 < pol.tails.size(); ++i) {
    const TailValues& nx = pol.tails[i + 1];
    if (nx.U - pol.lambda_i * nx.I - pol.lambda_p * nx.S - pol.lambda_d * (1.0 - nx.p) > 0.0)
      return false;
  }
  return true;
}

}  // namespace

SensingModel SensingModel::energy_detector(int samples, double noise_var, double energy) {
  SensingModel m;
  m.z_free = Density1D::energy_free(samples, noise_var);
  m.z_busy = Density1D::energy_busy(samples, noise_var, energy);
  m.noise_var = noise_var;
  m.energy = energy;
  m.samples = samples;
  return m;
}

SensingModel SensingModel::perfect(double z_free, double z_busy) {
  if (z_free == z_busy)
    throw DomainError("SensingModel::perfect: the two statistic values must differ");
  SensingModel m;
  m.z_free = Density1D::point_mass(z_free);
  m.z_busy = Density1D::point_mass(z_busy);
  m.samples = 0;
  return m;
}

double posterior_busy(const SensingModel& model, double theta, double z) {
  double lf = model.z_free.likelihood(z);
  double lb = model.z_busy.likelihood(z);
  double den = theta * lf + (1.0 - theta) * lb;
  if (!(den > 0.0))
    throw DomainError("posterior_busy: both sensing densities vanish at z");
  return (1.0 - theta) * lb / den;
}

double underlay_power(double gamma, double lambda_i, double lambda_p, double posterior) {
  if (!(lambda_i >= 0.0) || !(lambda_p >= 0.0))
    throw DomainError("underlay_power: dual variables must be nonnegative");
  double kappa = kappa_of(lambda_p, lambda_i, posterior);
  if (!(kappa > 0.0))
    throw DomainError("underlay_power: lambda_i and lambda_p cannot both vanish");
  return overlay_power(gamma, kappa);
}

double UnderlayPolicy::kappa(int i, double z) const {
  return kappa_of(lambda_p, lambda_i, posterior_busy(model, theta[i], z));
}

double UnderlayPolicy::threshold(int i, double z) const {
  double k = kappa(i, z);
  return std::isinf(k) ? kInf : k * ratio[i];
}

double UnderlayPolicy::power(int i, double z, double gamma) const {
  double k = kappa(i, z);
  if (std::isinf(k) || gamma < k * ratio[i])
    return 0.0;
  return overlay_power(gamma, k);
}

UnderlayEvaluation evaluate_underlay(const ChannelEnsemble& ens, const SensingModel& model, double lambda_i,
                                     double lambda_p, double lambda_d, const RecursionOptions& opts,
                                     ThresholdRule rule) {
  if (!(lambda_i >= 0.0) || !(lambda_p >= 0.0) || !(lambda_d >= 0.0))
    throw DomainError("evaluate_underlay: dual variables must be nonnegative");
  const int M = ens.M();
  UnderlayEvaluation out;
  UnderlayPolicy& pol = out.policy;
  pol.lambda_i = lambda_i;
  pol.lambda_p = lambda_p;
  pol.lambda_d = lambda_d;
  pol.ratio.assign(M, 1.0);
  pol.tails.assign(M + 1, TailValues{});
  pol.theta = ens.theta;
  pol.model = model;

  for (int i = M - 1; i >= 0; --i) {
    const TailValues& nx = pol.tails[i + 1];
    const double c = ens.c(i);
    const double theta = ens.theta[i];
    double a = rule == ThresholdRule::Floor
                   ? 0.0
                   : nx.U - lambda_i * nx.I - lambda_p * nx.S - lambda_d * (1.0 - nx.p);
    const double ratio = stage_threshold(1.0, std::max(a, 0.0), c, std::nullopt);
    pol.ratio[i] = ratio;

    std::unordered_map<double, StageIntegrals> cache;
    auto inner = [&](double z) -> const StageIntegrals& {
      auto it = cache.find(z);
      if (it != cache.end())
        return it->second;
      double post = posterior_busy(model, theta, z);
      double k = kappa_of(lambda_p, lambda_i, post);
      if (!(k > 0.0))
        throw DomainError("evaluate_underlay: zero water level (lambda_p = 0 on a surely free statistic)");
      StageIntegrals si = std::isinf(k) ? StageIntegrals{} : stage_integrals(ens.gain, k * ratio, k, std::nullopt, opts);
      return cache.emplace(z, si).first->second;
    };
    auto moments = [&](const Density1D& dz) {
      DensityMoments m;
      auto weighted = [&](auto field) {
        return numerics::integrate(
            [&](double z) {
              if (!dz.is_discrete() && dz.pdf(z) == 0.0)
                return 0.0;
              return field(inner(z));
            },
            dz, dz.support_lower(), opts.quad);
      };
      m.prob = weighted([](const StageIntegrals& s) { return s.prob; });
      m.log_rate = weighted([](const StageIntegrals& s) { return s.log_rate; });
      m.power = weighted([](const StageIntegrals& s) { return s.power; });
      return m;
    };
    DensityMoments free_m = theta > 0.0 ? moments(model.z_free) : DensityMoments{};
    DensityMoments busy_m = theta < 1.0 ? moments(model.z_busy) : DensityMoments{};

    const double prob = theta * free_m.prob + (1.0 - theta) * busy_m.prob;
    const double skip = 1.0 - prob;
    TailValues& cur = pol.tails[i];
    cur.U = c * (theta * free_m.log_rate + (1.0 - theta) * busy_m.log_rate) + skip * nx.U;
    cur.S = c * (theta * free_m.power + (1.0 - theta) * busy_m.power) + skip * nx.S;
    cur.I = c * (1.0 - theta) * busy_m.power * ens.pr_gain[i] + skip * nx.I;
    cur.p = prob + skip * nx.p;
  }
  const TailValues& t = pol.tails[0];
  out.stats.throughput = t.U;
  out.stats.avg_power = t.S;
  out.stats.avg_interference = t.I;
  out.stats.p_success = t.p;
  return out;
}

namespace {

// Bisection on a dual variable whose constraint function decreases in it.
template <class Eval, class Value>
double dual_bisect(Eval eval, Value value, double target, double tol, double hi, bool allow_zero,
                   UnderlayEvaluation* out, bool* active) {
  const double band = tol * target;
  UnderlayEvaluation ehi = eval(hi);
  for (int guard = 0; value(ehi) > target + band && guard < 60; ++guard) {
    hi *= 2.0;
    ehi = eval(hi);
  }
  *active = true;
  if (std::abs(value(ehi) - target) <= band) {
    if (out) *out = std::move(ehi);
    return hi;
  }
  if (allow_zero) {
    UnderlayEvaluation e0 = eval(0.0);
    if (value(e0) <= target + band) {
      *active = false;
      if (out) *out = std::move(e0);
      return 0.0;
    }
  }
  double lo = 0.0;
  UnderlayEvaluation best = ehi;
  double best_x = hi;
  for (int it = 0; it < 300; ++it) {
    double mid = 0.5 * (lo + hi);
    UnderlayEvaluation e = eval(mid);
    double r = value(e) - target;
    if (std::abs(r) < std::abs(value(best) - target)) {
      best = e;
      best_x = mid;
    }
    if (std::abs(r) <= band)
      break;
    (r > 0.0 ? lo : hi) = mid;
    if (hi - lo <= 1e-15 * hi)
      break;
  }
  if (out) *out = std::move(best);
  return best_x;
}

double sum_c(const ChannelEnsemble& ens, bool with_hook) {
  double s = 0.0;
  for (int i = 0; i < ens.M(); ++i)
    s += ens.c(i) * (with_hook ? ens.pr_gain[i] : 1.0);
  return s;
}

}  // namespace

double find_lambda_i(const ChannelEnsemble& ens, const SensingModel& model, double lambda_p, double lambda_d,
                     double i_avg, const UnderlayOptions& opts, UnderlayEvaluation* out) {
  if (!(i_avg > 0.0))
    throw DomainError("find_lambda_i: i_avg must be positive");
  auto eval = [&](double li) { return evaluate_underlay(ens, model, li, lambda_p, lambda_d, opts.rec, opts.rule); };
  auto value = [](const UnderlayEvaluation& e) { return e.stats.avg_interference; };
  bool active = true;
  double hi = std::max(sum_c(ens, true) / i_avg, 1e-12);
  return dual_bisect(eval, value, i_avg, opts.tol, hi, lambda_p > 0.0, out, &active);
}

namespace {

struct DualResult {
  UnderlayEvaluation eval;
  bool interference_active = true;
  bool power_active = false;
};

DualResult solve_duals(const ChannelEnsemble& ens, const SensingModel& model, double i_avg,
                       std::optional<double> p_avg, double lambda_d, const UnderlayOptions& opts) {
  DualResult res;
  auto value_i = [](const UnderlayEvaluation& e) { return e.stats.avg_interference; };
  double hi_i = std::max(sum_c(ens, true) / i_avg, 1e-12);
  if (!p_avg) {
    bool active = true;
    dual_bisect([&](double li) { return evaluate_underlay(ens, model, li, 0.0, lambda_d, opts.rec, opts.rule); },
                value_i, i_avg, opts.tol, hi_i, false, &res.eval, &active);
    res.interference_active = active;
    return res;
  }
  // Inner bisection on lambda_p for each candidate lambda_i.
  bool power_active = true;
  auto inner = [&](double li) {
    UnderlayEvaluation e;
    bool act = true;
    auto value_p = [](const UnderlayEvaluation& x) { return x.stats.avg_power; };
    double hi_p = std::max(sum_c(ens, false) / *p_avg, 1e-12);
    dual_bisect([&](double lp) { return evaluate_underlay(ens, model, li, lp, lambda_d, opts.rec, opts.rule); },
                value_p, *p_avg, opts.tol, hi_p, li > 0.0, &e, &act);
    power_active = act;
    return e;
  };
  bool active = true;
  dual_bisect(inner, value_i, i_avg, opts.tol, hi_i, true, &res.eval, &active);
  res.interference_active = active;
  res.power_active = res.eval.policy.lambda_p > 0.0 && power_active;
  return res;
}

UnderlaySolution to_solution(const DualResult& r) {
  UnderlaySolution s;
  s.policy = r.eval.policy;
  s.stats = r.eval.stats;
  s.interference_active = r.interference_active;
  s.power_active = r.power_active;
  return s;
}

}  // namespace

UnderlaySolution solve_underlay(const ChannelEnsemble& ens, const SensingModel& model, double i_avg,
                                std::optional<double> p_avg, double d_max, const UnderlayOptions& opts) {
  ens.validate();
  if (!(i_avg > 0.0))
    throw DomainError("solve_underlay: i_avg must be positive");
  if (!(d_max >= 1.0))
    throw DomainError("solve_underlay: d_max must be >= 1");
  const double target = std::isinf(d_max) ? 0.0 : 1.0 / d_max;
  auto solve_at = [&](double ld) { return solve_duals(ens, model, i_avg, p_avg, ld, opts); };
  auto feasible = [&](const DualResult& r) { return r.eval.stats.p_success >= target * (1.0 - 1e-12); };

  DualResult unc = solve_at(0.0);
  if (feasible(unc))
    return to_solution(unc);

  double top = std::max(unc.eval.stats.throughput, 1e-6);
  DualResult stop = solve_at(top);
  for (int guard = 0; !feasible(stop); ++guard) {
    if (at_floor(stop.eval.policy) || guard > 200)
      throw InfeasibleError("solve_underlay: delay bound unreachable", stop.eval.stats.p_success);
    top *= 2.0;
    stop = solve_at(top);
  }

  const int G = std::max(opts.grid_size, 2);
  int best_k = -1;
  DualResult best = stop;
  for (int k = 0; k < G; ++k) {
    DualResult r = k == 0 ? unc : solve_at(top * k / G);
    if (feasible(r) && (best_k < 0 || r.eval.stats.throughput > best.eval.stats.throughput)) {
      best_k = k;
      best = r;
    }
  }
  double a = best_k < 0 ? top * (G - 1) / G : top * std::max(best_k - 1, 0) / G;
  double b = best_k < 0 ? top : std::min(top * (best_k + 1) / G, top);
  DualResult refined = best;
  numerics::golden_min(
      [&](double ld) {
        DualResult r = ld == top ? stop : solve_at(ld);
        if (!feasible(r))
          return kInf;
        if (r.eval.stats.throughput > refined.eval.stats.throughput)
          refined = r;
        return -r.eval.stats.throughput;
      },
      a, b, opts.refine_evaluations);
  UnderlaySolution out = to_solution(refined);
  out.delay_active = true;
  return out;
}

}  // namespace crlab::stopping
