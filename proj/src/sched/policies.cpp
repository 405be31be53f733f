#include <algorithm>
#include <bit>
#include <numeric>

#include "crlab/sched.hpp"

namespace crlab::sched {

namespace {

// Descending by key, lower SU index first on ties.
std::vector<int> order_by(const std::vector<double>& key) {
  std::vector<int> idx(key.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return key[a] > key[b]; });
  return idx;
}

}  // namespace

VirtualQueueState VirtualQueueState::zero(int N) {
  VirtualQueueState s;
  s.Y.assign(N, 0.0);
  s.r.assign(N, 0.0);
  return s;
}

std::vector<double> auxiliary_r(const VirtualQueueState& state, const QueueingConstants& consts,
                                const FleetConfig& fleet) {
  std::vector<double> r(consts.N());
  for (int i = 0; i < consts.N(); ++i) r[i] = fleet.V < state.Y[i] * consts.lambda[i] ? fleet.sus[i].d : 0.0;
  return r;
}

FramePlanState doic_frame_setup(const VirtualQueueState& state, const QueueingConstants& consts,
                                const FleetConfig&) {
  int n = consts.N();
  std::vector<double> key(n);
  for (int i = 0; i < n; ++i) key[i] = state.Y[i] * consts.mu(i, consts.p_max);
  FramePlanState plan;
  plan.priority = order_by(key);
  plan.power_params.assign(n, consts.p_max);
  return plan;
}

double doic_slot_power(double g, double i_inst, double p_max) { return g > 0.0 ? std::min(i_inst / g, p_max) : p_max; }

double doac_slot_power(double g, double p_param, double i_inst) {
  return g > 0.0 ? std::min(i_inst / g, p_param) : p_param;
}

FramePlanState doac_pow_alloc(const VirtualQueueState& state, const QueueingConstants& consts) {
  int n = consts.N();
  if (n > 20)
    throw DomainError("doac_pow_alloc: too many SUs for the subset DP");
  std::size_t full = (std::size_t{1} << n) - 1;
  struct Node {
    double psi = kInf;
    double rho = 0.0;
    int last = -1;
    double P = 0.0;
  };
  std::vector<Node> dp(full + 1);
  dp[0].psi = 0.0;
  // Subsets in order of size so every predecessor is final.
  std::vector<std::size_t> subsets(full);
  std::iota(subsets.begin(), subsets.end(), 1);
  std::stable_sort(subsets.begin(), subsets.end(),
                   [](std::size_t a, std::size_t b) { return std::popcount(a) < std::popcount(b); });
  for (std::size_t s : subsets) {
    Node& node = dp[s];
    for (int l = n - 1; l >= 0; --l) {
      if (!(s >> l & 1)) continue;
      const Node& prev = dp[s & ~(std::size_t{1} << l)];
      if (!std::isfinite(prev.psi)) continue;
      PowerChoice c = best_power(state.Y[l], state.X, prev.rho, consts, l);
      double total = prev.psi + c.psi;
      if (total < node.psi) {
        node.psi = total;
        node.rho = prev.rho + c.rho;
        node.last = l;
        node.P = c.P;
      }
    }
  }
  if (!std::isfinite(dp[full].psi))
    throw SaturationError("doac_pow_alloc: every ordering saturates");
  FramePlanState plan;
  plan.power_params.assign(n, consts.p_max);
  plan.psi = dp[full].psi;
  for (std::size_t s = full; s != 0;) {
    const Node& node = dp[s];
    plan.priority.push_back(node.last);
    plan.power_params[node.last] = node.P;
    s &= ~(std::size_t{1} << node.last);
  }
  std::reverse(plan.priority.begin(), plan.priority.end());
  return plan;
}

FramePlanState doac_brute_force(const VirtualQueueState& state, const QueueingConstants& consts) {
  int n = consts.N();
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  FramePlanState best;
  best.psi = kInf;
  do {
    std::vector<ChainLink> chain;
    try {
      chain = brho_max_chain(perm, consts, state.X, state.Y);
    } catch (const SaturationError&) {
      continue;
    }
    double psi = 0.0;
    for (const auto& link : chain) psi += link.psi;
    if (psi < best.psi) {
      best.psi = psi;
      best.priority = perm;
      best.power_params.assign(n, consts.p_max);
      for (int j = 0; j < n; ++j) best.power_params[perm[j]] = chain[j].P;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  if (!std::isfinite(best.psi))
    throw SaturationError("doac_brute_force: every ordering saturates");
  return best;
}

FramePlanState doac_frame_setup(const VirtualQueueState& state, const QueueingConstants& consts) {
  try {
    return doac_pow_alloc(state, consts);
  } catch (const SaturationError&) {
    FramePlanState plan;
    int n = consts.N();
    double p = consts.P_min_global.value_or(consts.p_max);
    std::vector<double> key(n);
    for (int i = 0; i < n; ++i) key[i] = state.Y[i] * consts.mu(i, p);
    plan.priority = order_by(key);
    plan.power_params.assign(n, p);
    plan.psi = kInf;
    plan.degraded = true;
    return plan;
  }
}

FramePlanState subopt_frame_setup(const VirtualQueueState& state, const QueueingConstants& consts) {
  if (!consts.P_min_global)
    throw InfeasibleError("subopt_frame_setup: no power keeps the total load below 1");
  int n = consts.N();
  FramePlanState plan;
  plan.power_params.resize(n);
  std::vector<double> key(n);
  for (int i = 0; i < n; ++i) {
    plan.power_params[i] = state.X > state.Y[i] ? *consts.P_min_global : consts.p_max;
    key[i] = state.Y[i] * consts.mu(i, plan.power_params[i]);
  }
  plan.priority = order_by(key);
  return plan;
}

VirtualQueueState update_virtual_queues(const VirtualQueueState& state, const FrameOutcome& frame,
                                        std::optional<double> i_avg) {
  VirtualQueueState next = state;
  for (std::size_t i = 0; i < state.Y.size(); ++i) {
    double excess = frame.delay_sum[i] - state.r[i] * static_cast<double>(frame.arrivals[i]);
    next.Y[i] = std::max(0.0, state.Y[i] + excess);
  }
  if (i_avg)
    next.X = std::max(0.0, state.X + frame.interference_energy - *i_avg * static_cast<double>(frame.T));
  ++next.frame_index;
  return next;
}

CsiEstimate csi_adjust(double gamma_err, double g_err, double alpha) {
  if (!(alpha >= 0.0 && alpha < 2.0))
    throw DomainError("csi_adjust: alpha must lie in [0, 2)");
  return {gamma_err / (1.0 + alpha / 2.0), g_err / (1.0 - alpha / 2.0)};
}

}  // namespace crlab::sched
