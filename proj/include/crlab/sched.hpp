#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "crlab/numerics.hpp"

namespace crlab::sched {

using numerics::Density1D;
using numerics::kInf;

struct SuProfile {
  double lambda = 0.001;  // Bernoulli arrival probability per slot
  double d = 1e4;         // average-delay bound, slots
  Density1D gain = Density1D::exponential(1.0);
  Density1D interference = Density1D::exponential(1.0);
  int L = 1000;  // bits per packet

  void validate() const;
};

struct FleetConfig {
  std::vector<SuProfile> sus;
  double p_max = 100.0;
  double i_inst = 50.0;
  std::optional<double> i_avg;
  double V = 10.0;
  double epsilon = 0.1;
  std::optional<double> r_max;
  // Scale arrivals by (1 - epsilon) / load when the load at P_max reaches 1.
  bool admission_control = false;

  int N() const { return static_cast<int>(sus.size()); }
  void validate() const;
};

// log2(1 + min(i_inst/g, P) gamma), clamped at r_max. g = 0 means no cap.
double effective_rate(double p_param, double g, double gamma, double i_inst,
                      std::optional<double> r_max = std::nullopt);

// E[effective_rate] / L in packets per slot.
double mu_of_power(const SuProfile& su, double p_param, double i_inst, std::optional<double> r_max = std::nullopt);

// 1 - Pr[R = 0] for any positive power parameter.
double p_nonzero(const SuProfile& su);

struct ServiceMoments {
  double mean = 0.0;
  double second_moment = 0.0;
  double lemma_bound = 0.0;
};
ServiceMoments service_moments(double p, int L);

// mu(P) tabulated on a log grid with monotone cubic interpolation.
class MuCurve {
 public:
  MuCurve() = default;
  MuCurve(const SuProfile& su, double p_max, double i_inst, std::optional<double> r_max, int points = 128,
          double span = 1e-4);

  double operator()(double P) const;
  double p_lo() const { return logp_.empty() ? 0.0 : std::exp(logp_.front()); }
  double p_hi() const { return logp_.empty() ? 0.0 : std::exp(logp_.back()); }

 private:
  std::vector<double> logp_, mu_, slope_;
};

struct QueueingConstants {
  std::vector<double> lambda;          // admitted arrival rates
  std::vector<double> lambda_offered;  // as configured
  double admission_scale = 1.0;
  std::vector<MuCurve> mu_curves;
  std::vector<double> p_nonzero;
  std::vector<int> L;
  double p_max = 0.0;
  // Per-SU minimum powers; P_max when the load condition fails.
  std::vector<double> P_min;
  std::optional<double> P_min_global;
  double T_R = kInf;
  bool stable = false;

  int N() const { return static_cast<int>(lambda.size()); }
  double mu(int i, double P) const { return mu_curves[i](P); }
  double rho(int i, double P) const { return lambda[i] / mu(i, P); }

  static QueueingConstants build(const FleetConfig& fleet);
};

struct StabilityReport {
  double load = 0.0;
  bool stable = false;
  double margin = 0.0;
};
StabilityReport stability_check(const QueueingConstants& consts);

// sum_i lambda_i (L^2 + L(1 - p_i)) / p_i^2 / 2.
double residual_bound(const std::vector<double>& lambda, const std::vector<double>& p_at_min,
                      const std::vector<int>& L);

// Smallest P in [lo, p_max] with rho_i(P) < budget.
double min_power(const QueueingConstants& consts, int i, double budget);

double w_up(double P, double rho_prev_max, const QueueingConstants& consts, int i);

struct PsiTerms {
  double psi_d = 0.0;
  double psi_i = 0.0;
  double psi = 0.0;
};
PsiTerms psi_terms(double Y, double X, double P, double rho_prev_max, const QueueingConstants& consts, int i);

inline constexpr int kPowerSearchEvaluations = 64;

// argmin over [P_min_i, P_max] of psi_i(., rho_prev); saturated candidates
// count as +inf. psi = +inf when every candidate saturates.
struct PowerChoice {
  double P = 0.0;
  double psi = kInf;
  double rho = 0.0;
};
PowerChoice best_power(double Y, double X, double rho_prev_max, const QueueingConstants& consts, int i);

struct ChainLink {
  double P = 0.0;
  double psi = 0.0;
  double rho_max = 0.0;
};
std::vector<ChainLink> brho_max_chain(const std::vector<int>& priority, const QueueingConstants& consts, double X,
                                      const std::vector<double>& Y);

struct VirtualQueueState {
  std::vector<double> Y;
  double X = 0.0;
  std::vector<double> r;
  long long frame_index = 0;

  static VirtualQueueState zero(int N);
};

struct FramePlanState {
  std::vector<int> priority;         // SU indices, highest priority first
  std::vector<double> power_params;  // indexed by SU
  double psi = 0.0;
  bool degraded = false;
};

// r_i = d_i when V < Y_i lambda_i, else 0.
std::vector<double> auxiliary_r(const VirtualQueueState& state, const QueueingConstants& consts,
                                const FleetConfig& fleet);

FramePlanState doic_frame_setup(const VirtualQueueState& state, const QueueingConstants& consts,
                                const FleetConfig& fleet);
double doic_slot_power(double g, double i_inst, double p_max);

// Subset DP over priority prefixes. Throws SaturationError when no full
// ordering is feasible.
FramePlanState doac_pow_alloc(const VirtualQueueState& state, const QueueingConstants& consts);
// Exhaustive search over all N! orderings with the same power searches.
FramePlanState doac_brute_force(const VirtualQueueState& state, const QueueingConstants& consts);
// doac_pow_alloc, falling back to the suboptimal plan when it saturates.
FramePlanState doac_frame_setup(const VirtualQueueState& state, const QueueingConstants& consts);
double doac_slot_power(double g, double p_param, double i_inst);

FramePlanState subopt_frame_setup(const VirtualQueueState& state, const QueueingConstants& consts);

struct FrameOutcome {
  // Per SU: sum over packets that arrived in the frame of W.
  std::vector<double> delay_sum;
  std::vector<long long> arrivals;
  double interference_energy = 0.0;
  long long T = 0;
};
VirtualQueueState update_virtual_queues(const VirtualQueueState& state, const FrameOutcome& frame,
                                        std::optional<double> i_avg);

struct CsiEstimate {
  double gamma = 0.0;
  double g = 0.0;
};
CsiEstimate csi_adjust(double gamma_err, double g_err, double alpha);

}  // namespace crlab::sched
