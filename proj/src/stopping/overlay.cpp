#include <cmath>

#include "crlab/stopping.hpp"

namespace crlab::stopping {

namespace {

StoppingStats stats_from(const TailValues& t) {
  StoppingStats s;
  s.throughput = t.U;
  s.avg_power = t.S;
  s.avg_interference = t.I;
  s.p_success = t.p;
  return s;
}

OverlaySolution to_solution(const LambdaSearch& s) {
  OverlaySolution out;
  out.policy = s.eval.policy;
  out.stats = s.eval.stats;
  out.tails = s.eval.tails;
  out.power_active = s.active;
  return out;
}

// True when every stage sits at the water level, so a larger lambda_D
// cannot lower any threshold further.
bool at_floor(const OverlayEvaluation& e) {
  for (int i = 0; i + 1 < static_cast<int>(e.tails.size()); ++i) {
    const TailValues& nx = e.tails[i + 1];
    if (nx.U - e.policy.lambda_p * nx.S - e.policy.lambda_d * (1.0 - nx.p) > 0.0)
      return false;
  }
  return true;
}

}  // namespace

OverlayEvaluation evaluate_overlay(const ChannelEnsemble& ens, double lambda_p, double lambda_d,
                                   std::optional<double> p_max, const RecursionOptions& opts,
                                   ThresholdRule rule) {
  if (!(lambda_p >= 0.0) || !(lambda_d >= 0.0))
    throw DomainError("evaluate_overlay: dual variables must be nonnegative");
  const int M = ens.M();
  const double users = opts.users;
  OverlayEvaluation out;
  out.tails.assign(M + 1, TailValues{});
  out.policy.gamma_th.assign(M, kInf);
  out.policy.lambda_p = lambda_p;
  out.policy.lambda_d = lambda_d;
  out.policy.p_max = p_max;

  for (int i = M - 1; i >= 0; --i) {
    const TailValues& nx = out.tails[i + 1];
    const double c = ens.c(i);
    double a = rule == ThresholdRule::Floor ? 0.0 : nx.U - lambda_p * nx.S - lambda_d * (1.0 - nx.p);
    double gth = stage_threshold(lambda_p, std::max(a, 0.0), c, p_max);
    out.policy.gamma_th[i] = gth;

    StageIntegrals si = stage_integrals(ens.gain, gth, lambda_p, p_max, opts);
    const double th = ens.theta[i] / users;
    const double q = th * si.prob;
    TailValues& cur = out.tails[i];
    cur.U = th * c * si.log_rate + (1.0 - q) * nx.U;
    cur.S = th * c * si.power + (1.0 - q) * nx.S;
    cur.p = q + (1.0 - q) * nx.p;
  }
  out.stats = stats_from(out.tails[0]);
  return out;
}

std::vector<double> overlay_thresholds(const ChannelEnsemble& ens, double lambda_p, double lambda_d,
                                       std::optional<double> p_max, const RecursionOptions& opts) {
  if (!(lambda_p > 0.0) && !p_max)
    throw DomainError("overlay_thresholds: lambda_p must be positive");
  return evaluate_overlay(ens, lambda_p, lambda_d, p_max, opts).policy.gamma_th;
}

StoppingStats overlay_recursions(const ChannelEnsemble& ens, const OverlayPolicy& policy,
                                 const RecursionOptions& opts) {
  if (static_cast<int>(policy.gamma_th.size()) != ens.M())
    throw DomainError("overlay_recursions: threshold count differs from M");
  TailValues nx;
  const double users = opts.users;
  for (int i = ens.M() - 1; i >= 0; --i) {
    double gth = policy.gamma_th[i];
    if (std::isnan(gth) || gth < 0.0)
      throw DomainError("overlay_recursions: thresholds must be nonnegative");
    StageIntegrals si = stage_integrals(ens.gain, gth, policy.lambda_p, policy.p_max, opts);
    const double th = ens.theta[i] / users;
    const double q = th * si.prob;
    const double c = ens.c(i);
    TailValues cur;
    cur.U = th * c * si.log_rate + (1.0 - q) * nx.U;
    cur.S = th * c * si.power + (1.0 - q) * nx.S;
    cur.p = q + (1.0 - q) * nx.p;
    nx = cur;
  }
  return stats_from(nx);
}

StoppingStats overlay_recursions(const ChannelEnsemble& ens, const std::vector<double>& thresholds,
                                 const std::function<double(double)>& power, const RecursionOptions& opts) {
  if (static_cast<int>(thresholds.size()) != ens.M())
    throw DomainError("overlay_recursions: threshold count differs from M");
  TailValues nx;
  const double users = opts.users;
  for (int i = ens.M() - 1; i >= 0; --i) {
    double gth = thresholds[i];
    if (std::isnan(gth) || gth < 0.0)
      throw DomainError("overlay_recursions: thresholds must be nonnegative");
    double prob = 0.0, log_rate = 0.0, pw = 0.0;
    if (!std::isinf(gth)) {
      prob = ens.gain.ccdf(gth);
      log_rate = numerics::integrate([&](double g) { return std::log1p(power(g) * g); }, ens.gain, gth, opts.quad);
      pw = numerics::integrate(power, ens.gain, gth, opts.quad);
    }
    const double th = ens.theta[i] / users;
    const double q = th * prob;
    const double c = ens.c(i);
    TailValues cur;
    cur.U = th * c * log_rate + (1.0 - q) * nx.U;
    cur.S = th * c * pw + (1.0 - q) * nx.S;
    cur.p = q + (1.0 - q) * nx.p;
    nx = cur;
  }
  return stats_from(nx);
}

double lambda_p_upper(const ChannelEnsemble& ens, double p_avg) {
  if (!(p_avg > 0.0))
    throw DomainError("lambda_p_upper: p_avg must be positive");
  return ens.sum_theta_c() / p_avg;
}

LambdaSearch find_lambda_p(const ChannelEnsemble& ens, double lambda_d, double p_avg, double tol,
                           std::optional<double> p_max, const RecursionOptions& opts, ThresholdRule rule) {
  if (!(p_avg > 0.0))
    throw DomainError("find_lambda_p: p_avg must be positive");
  auto eval = [&](double lp) { return evaluate_overlay(ens, lp, lambda_d, p_max, opts, rule); };
  const double band = tol * p_avg;

  LambdaSearch out;
  double hi = lambda_p_upper(ens, p_avg);
  if (!(hi > 0.0)) {
    // No channel is ever free: nothing to spend power on.
    out.lambda_p = 1.0;
    out.active = false;
    out.eval = eval(1.0);
    return out;
  }
  OverlayEvaluation ehi = eval(hi);
  for (int guard = 0; ehi.stats.avg_power > p_avg + band && guard < 60; ++guard) {
    hi *= 2.0;
    ehi = eval(hi);
  }
  if (std::abs(ehi.stats.avg_power - p_avg) <= band) {
    out.lambda_p = hi;
    out.eval = std::move(ehi);
    return out;
  }
  if (p_max) {
    OverlayEvaluation e0 = eval(0.0);
    if (e0.stats.avg_power <= p_avg + band) {
      out.lambda_p = 0.0;
      out.active = false;
      out.eval = std::move(e0);
      return out;
    }
  }

  double lo = 0.0;
  OverlayEvaluation best = ehi;
  double best_lp = hi;
  for (int it = 0; it < 300; ++it) {
    out.iterations = it + 1;
    double mid = 0.5 * (lo + hi);
    OverlayEvaluation e = eval(mid);
    double r = e.stats.avg_power - p_avg;
    if (std::abs(r) < std::abs(best.stats.avg_power - p_avg)) {
      best = e;
      best_lp = mid;
    }
    if (std::abs(r) <= band)
      break;
    (r > 0.0 ? lo : hi) = mid;
    if (hi - lo <= 1e-15 * hi)
      break;
  }
  out.lambda_p = best_lp;
  out.active = best.stats.avg_power >= p_avg - band;
  out.eval = std::move(best);
  return out;
}

double lambda_d_upper_bound(const ChannelEnsemble& ens, double p_avg, double d_max, const QuadratureSpec& quad) {
  if (!(d_max >= 1.0))
    throw DomainError("lambda_d_upper_bound: d_max must be >= 1");
  const int M = ens.M();
  const double lp_max = lambda_p_upper(ens, p_avg);
  const double q = 1.0 / (ens.theta[0] * d_max);
  if (!(q <= 1.0))
    throw DomainError("lambda_d_upper_bound: 1/(theta_1 d_max) exceeds 1");
  const double finv = numerics::inverse_ccdf(ens.gain, q);
  const double t = finv > 0.0 ? std::min(lp_max, finv) / finv : 1.0;

  double sum_tc = 0.0;
  for (int i = 1; i < M; ++i)
    sum_tc += ens.theta[i] * ens.c(i);
  double tail_log = numerics::integrate([&](double g) { return std::log(g / lp_max); }, ens.gain, lp_max, quad);
  double u2 = tail_log * sum_tc;

  double p2 = 0.0;
  double skip = 1.0;
  for (int i = 1; i < M; ++i) {
    p2 += skip * ens.theta[i];
    skip *= 1.0 - ens.theta[i];
  }
  if (!(p2 < 1.0))
    throw DomainError("lambda_d_upper_bound: p2_max reaches 1");
  return (ens.c(0) * (std::log(t) - t + 1.0) + u2) / (1.0 - p2);
}

OverlaySolution solve_overlay(const ChannelEnsemble& ens, double p_avg, double d_max, const OverlayOptions& opts) {
  if (!(d_max >= 1.0))
    throw DomainError("solve_overlay: d_max must be >= 1");
  if (opts.grid_size < 2)
    throw DomainError("solve_overlay: grid_size must be >= 2");
  ens.validate();

  auto solve_at = [&](double ld) { return find_lambda_p(ens, ld, p_avg, opts.tol, opts.p_max, opts.rec); };
  const double target = std::isinf(d_max) ? 0.0 : 1.0 / d_max;
  auto feasible = [&](const LambdaSearch& s) { return s.eval.stats.p_success >= target * (1.0 - 1e-12); };

  LambdaSearch unc = solve_at(0.0);
  if (feasible(unc))
    return to_solution(unc);

  double top = kInf;
  bool lemma2 = false;
  if (opts.rec.users == 1) {
    try {
      top = lambda_d_upper_bound(ens, p_avg, d_max, opts.rec.quad);
      lemma2 = true;
    } catch (const DomainError&) {
    }
  }
  if (!(top > 0.0) || std::isinf(top)) {
    top = std::max(unc.eval.stats.throughput, 1e-6);
    lemma2 = false;
  }
  LambdaSearch stop = solve_at(top);
  for (int guard = 0; !feasible(stop); ++guard) {
    if (at_floor(stop.eval) || guard > 200) {
      OverlaySolution best = to_solution(stop);
      best.delay_active = true;
      best.lambda_d_top = top;
      throw OverlayInfeasible("solve_overlay: delay bound unreachable; best p1 = " +
                                  std::to_string(stop.eval.stats.p_success),
                              std::move(best));
    }
    top *= 2.0;
    lemma2 = false;
    stop = solve_at(top);
  }

  const int G = opts.grid_size;
  int best_k = -1;
  LambdaSearch best;
  for (int k = 0; k < G; ++k) {
    double ld = top * k / G;
    LambdaSearch s = k == 0 ? unc : solve_at(ld);
    if (feasible(s) && (best_k < 0 || s.eval.stats.throughput > best.eval.stats.throughput)) {
      best_k = k;
      best = std::move(s);
    }
  }
  double a, b;
  if (best_k < 0) {
    a = top * (G - 1) / G;
    b = top;
    best = stop;
  } else {
    a = top * std::max(best_k - 1, 0) / G;
    b = std::min(top * (best_k + 1) / G, top);
  }

  LambdaSearch refined = best;
  auto objective = [&](double ld) {
    LambdaSearch s = ld == top ? stop : solve_at(ld);
    if (!feasible(s))
      return kInf;
    if (s.eval.stats.throughput > refined.eval.stats.throughput)
      refined = s;
    return -s.eval.stats.throughput;
  };
  numerics::golden_min(objective, a, b, opts.refine_evaluations);

  OverlaySolution out = to_solution(refined);
  out.delay_active = true;
  out.lambda_d_top = top;
  out.lemma2_bound = lemma2;
  return out;
}

OverlaySolution solve_no_osr(const ChannelEnsemble& ens, double p_avg, const OverlayOptions& opts) {
  LambdaSearch s = find_lambda_p(ens, 0.0, p_avg, opts.tol, opts.p_max, opts.rec, ThresholdRule::Floor);
  return to_solution(s);
}

}  // namespace crlab::stopping
