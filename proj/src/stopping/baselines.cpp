#include <algorithm>
#include <cmath>
#include <numeric>

#include "crlab/stopping.hpp"

namespace crlab::stopping {

KOutOfMResult k_out_of_m(const ChannelEnsemble& ens, int K, double p_avg, const QuadratureSpec& quad) {
  ens.validate();
  if (K < 1 || K > ens.M())
    throw DomainError("k_out_of_m: K must lie in [1, M]");
  if (!(p_avg > 0.0))
    throw DomainError("k_out_of_m: p_avg must be positive");
  if (ens.gain.is_discrete())
    throw DomainError("k_out_of_m: needs a continuous gain density");

  KOutOfMResult out;
  out.K = K;
  std::vector<int> idx(ens.M());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return ens.theta[a] > ens.theta[b]; });
  out.channels.assign(idx.begin(), idx.begin() + K);

  std::vector<double> th;
  for (int j : out.channels)
    th.push_back(ens.theta[j]);
  const double cK = 1.0 - K * ens.tau_over_T;
  const Density1D& f = ens.gain;

  // Best gain among the free sensed channels; "none free" is the atom at 0.
  auto cdf_max = [&](double x) {
    double F = f.cdf(x);
    double prod = 1.0;
    for (double t : th)
      prod *= 1.0 - t + t * F;
    return prod;
  };
  auto pdf_max = [&](double x) {
    double F = f.cdf(x);
    double fx = f.pdf(x);
    double sum = 0.0;
    for (std::size_t j = 0; j < th.size(); ++j) {
      double prod = th[j] * fx;
      for (std::size_t k = 0; k < th.size(); ++k)
        if (k != j) prod *= 1.0 - th[k] + th[k] * F;
      sum += prod;
    }
    return sum;
  };
  const double upper = f.upper_cutoff(quad.infinite_tail_cutoff_mass / K);
  auto avg_power = [&](double lp) {
    if (lp >= upper) return 0.0;
    return cK * numerics::quad([&](double x) { return (1.0 / lp - 1.0 / x) * pdf_max(x); }, lp, upper, quad);
  };

  double any_free = 1.0 - cdf_max(0.0);
  double hi = cK * any_free / p_avg;
  if (!(hi > 0.0)) {
    out.lambda_p = 1.0;
    return out;
  }
  double lo = 0.0;
  double lp = hi;
  for (int it = 0; it < 200; ++it) {
    lp = 0.5 * (lo + hi);
    double r = avg_power(lp) - p_avg;
    if (std::abs(r) <= 1e-10 * p_avg || hi - lo <= 1e-15 * hi)
      break;
    (r > 0.0 ? lo : hi) = lp;
  }
  out.lambda_p = lp;
  out.stats.avg_power = avg_power(lp);
  out.stats.throughput =
      lp >= upper ? 0.0 : cK * numerics::quad([&](double x) { return std::log(x / lp) * pdf_max(x); }, lp, upper, quad);
  out.stats.p_success = 1.0 - cdf_max(lp);
  return out;
}

}  // namespace crlab::stopping
