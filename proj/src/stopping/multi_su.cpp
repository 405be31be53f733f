#include <algorithm>

#include "crlab/stopping.hpp"

namespace crlab::stopping {

Density1D max_gain_density(double mean_gain) { return Density1D::gumbel(mean_gain); }

MultiSuSolution solve_multi_su(const ChannelEnsemble& ens, int L, double p_avg, double d_max, OverlayOptions opts) {
  if (L < 1)
    throw DomainError("solve_multi_su: L must be positive");
  MultiSuSolution out;
  out.L = L;
  out.small_L_warning = L < 3 * ens.M();

  ChannelEnsemble shared = ens;
  shared.gain = max_gain_density(ens.gain.mean());
  opts.rec.users = L;
  out.solution = solve_overlay(shared, p_avg, d_max, opts);

  for (double g : out.solution.policy.gamma_th) {
    out.gaps.push_back(g - out.solution.policy.lambda_p);
    out.max_gap = std::max(out.max_gap, out.gaps.back());
  }
  return out;
}

}  // namespace crlab::stopping
