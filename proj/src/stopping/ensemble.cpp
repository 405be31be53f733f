#include <algorithm>
#include <sstream>

#include "crlab/stopping.hpp"

namespace crlab::stopping {

ChannelEnsemble ChannelEnsemble::make(std::vector<double> theta, double tau_over_T, Density1D gain) {
  ChannelEnsemble ens;
  ens.theta = std::move(theta);
  ens.tau_over_T = tau_over_T;
  ens.gain = std::move(gain);
  ens.pr_gain.assign(ens.theta.size(), 1.0);
  ens.validate();
  return ens;
}

ChannelEnsemble ChannelEnsemble::linear(int M, double step, double tau_over_T, Density1D gain) {
  std::vector<double> theta;
  for (int i = 1; i <= M; ++i)
    theta.push_back(step * i);
  return make(std::move(theta), tau_over_T, std::move(gain));
}

double ChannelEnsemble::sum_theta_c() const {
  double s = 0.0;
  for (int i = 0; i < M(); ++i)
    s += theta[i] * c(i);
  return s;
}

ChannelEnsemble ChannelEnsemble::reversed() const {
  ChannelEnsemble r = *this;
  std::reverse(r.theta.begin(), r.theta.end());
  std::reverse(r.pr_gain.begin(), r.pr_gain.end());
  return r;
}

void ChannelEnsemble::validate() const {
  std::ostringstream problems;
  if (theta.empty())
    problems << " no channels;";
  for (std::size_t i = 0; i < theta.size(); ++i)
    if (!(theta[i] >= 0.0 && theta[i] <= 1.0))
      problems << " theta[" << i << "] outside [0,1];";
  if (!(tau_over_T > 0.0))
    problems << " tau_over_T must be positive;";
  else if (!(c(M() - 1) > 0.0))
    problems << " M*tau/T must be below 1;";
  if (pr_gain.size() != theta.size())
    problems << " pr_gain size mismatch;";
  if (!problems.str().empty())
    throw DomainError("ChannelEnsemble:" + problems.str());
}

}  // namespace crlab::stopping
