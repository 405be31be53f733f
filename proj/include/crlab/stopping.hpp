#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "crlab/numerics.hpp"

namespace crlab::stopping {

using numerics::Density1D;
using numerics::kInf;
using numerics::QuadratureSpec;

struct ChannelEnsemble {
  std::vector<double> theta;
  double tau_over_T = 0.0;
  Density1D gain = Density1D::exponential(1.0);
  // Per-channel ST->PR gain hook used for interference accounting.
  std::vector<double> pr_gain;

  static ChannelEnsemble make(std::vector<double> theta, double tau_over_T, Density1D gain);
  // theta_i = step * i, i = 1..M (the preset sensing order).
  static ChannelEnsemble linear(int M, double step, double tau_over_T, Density1D gain);

  int M() const { return static_cast<int>(theta.size()); }
  // Slot fraction left after sensing channel i (0-based): 1 - (i+1) tau/T.
  double c(int i) const { return 1.0 - (i + 1) * tau_over_T; }
  double sum_theta_c() const;
  ChannelEnsemble reversed() const;
  void validate() const;
};

struct StoppingStats {
  double throughput = 0.0;
  double avg_power = 0.0;
  double avg_interference = 0.0;
  double p_success = 0.0;
  double expected_delay() const { return p_success > 0.0 ? 1.0 / p_success : kInf; }
};

// Expected values from stage i onward; index M holds the zero terminal.
struct TailValues {
  double U = 0.0;
  double S = 0.0;
  double p = 0.0;
  double I = 0.0;
};

struct OverlayPolicy {
  std::vector<double> gamma_th;
  double lambda_p = 0.0;
  double lambda_d = 0.0;
  std::optional<double> p_max;

  double power(double gamma) const;
};

double overlay_power(double gamma, double lambda_p, std::optional<double> p_max = std::nullopt);

struct RecursionOptions {
  // Number of SUs sharing the channels; 1 is the single-SU overlay.
  int users = 1;
  QuadratureSpec quad{};
  // Closed-form tail integrals for uncapped exponential gains.
  bool closed_form = true;
};

enum class ThresholdRule {
  Optimal,  // Lambert-W threshold from the suffix values
  Floor,    // threshold equal to the water level (No-OSR)
};

struct OverlayEvaluation {
  OverlayPolicy policy;
  StoppingStats stats;
  std::vector<TailValues> tails;
};

// Tail integrals at one stage: Pr[gamma >= a], E[log(1+P gamma); gamma >= a]
// and E[P; gamma >= a] for the water-filling power with level kappa.
struct StageIntegrals {
  double prob = 0.0;
  double log_rate = 0.0;
  double power = 0.0;
};
StageIntegrals stage_integrals(const Density1D& gain, double threshold, double kappa,
                               std::optional<double> p_max, const RecursionOptions& opts);

// Threshold solving c*(log(1+P(g)g) - kappa*P(g)) = a_plus.
double stage_threshold(double kappa, double a_plus, double c, std::optional<double> p_max);

// Residual of the scalar threshold-finding equation at gamma.
double threshold_residual(double gamma, double lambda_p, double rhs);

StoppingStats overlay_recursions(const ChannelEnsemble& ens, const OverlayPolicy& policy,
                                 const RecursionOptions& opts = {});
// Same recursion for arbitrary thresholds and an arbitrary power law.
StoppingStats overlay_recursions(const ChannelEnsemble& ens, const std::vector<double>& thresholds,
                                 const std::function<double(double)>& power,
                                 const RecursionOptions& opts = {});

OverlayEvaluation evaluate_overlay(const ChannelEnsemble& ens, double lambda_p, double lambda_d,
                                   std::optional<double> p_max = std::nullopt,
                                   const RecursionOptions& opts = {},
                                   ThresholdRule rule = ThresholdRule::Optimal);

std::vector<double> overlay_thresholds(const ChannelEnsemble& ens, double lambda_p, double lambda_d,
                                       std::optional<double> p_max = std::nullopt,
                                       const RecursionOptions& opts = {});

double lambda_p_upper(const ChannelEnsemble& ens, double p_avg);

struct LambdaSearch {
  double lambda_p = 0.0;
  bool active = true;
  int iterations = 0;
  OverlayEvaluation eval;
};

LambdaSearch find_lambda_p(const ChannelEnsemble& ens, double lambda_d, double p_avg, double tol = 1e-8,
                           std::optional<double> p_max = std::nullopt, const RecursionOptions& opts = {},
                           ThresholdRule rule = ThresholdRule::Optimal);

double lambda_d_upper_bound(const ChannelEnsemble& ens, double p_avg, double d_max,
                            const QuadratureSpec& quad = {});

struct OverlayOptions {
  int grid_size = 64;
  std::optional<double> p_max;
  double tol = 1e-8;
  int refine_evaluations = 60;
  RecursionOptions rec{};
};

struct OverlaySolution {
  OverlayPolicy policy;
  StoppingStats stats;
  std::vector<TailValues> tails;
  bool power_active = true;
  bool delay_active = false;
  // Upper end of the lambda_D sweep and whether it came from the closed-form bound.
  double lambda_d_top = 0.0;
  bool lemma2_bound = false;
};

struct OverlayInfeasible : InfeasibleError {
  OverlayInfeasible(const std::string& what, OverlaySolution best)
      : InfeasibleError(what, best.stats.p_success), best_effort(std::move(best)) {}
  OverlaySolution best_effort;
};

OverlaySolution solve_overlay(const ChannelEnsemble& ens, double p_avg, double d_max,
                              const OverlayOptions& opts = {});

// No-OSR: stop at the first free channel with positive water-filling power.
OverlaySolution solve_no_osr(const ChannelEnsemble& ens, double p_avg, const OverlayOptions& opts = {});

struct KOutOfMResult {
  int K = 0;
  std::vector<int> channels;
  double lambda_p = 0.0;
  StoppingStats stats;
};
KOutOfMResult k_out_of_m(const ChannelEnsemble& ens, int K, double p_avg, const QuadratureSpec& quad = {});

// Multi-SU overlay with the max-of-L gain density.
Density1D max_gain_density(double mean_gain);

struct MultiSuSolution {
  int L = 0;
  OverlaySolution solution;
  std::vector<double> gaps;
  double max_gap = 0.0;
  bool small_L_warning = false;
};
MultiSuSolution solve_multi_su(const ChannelEnsemble& ens, int L, double p_avg, double d_max,
                               OverlayOptions opts = {});

// ---- underlay ----

struct SensingModel {
  Density1D z_free = Density1D::energy_free(10, 1.0);
  Density1D z_busy = Density1D::energy_busy(10, 1.0, 2.0);
  double noise_var = 1.0;
  double energy = 2.0;
  int samples = 10;

  static SensingModel energy_detector(int samples, double noise_var, double energy);
  // Error-free sensing: the statistic takes z_free on free channels and z_busy otherwise.
  static SensingModel perfect(double z_free, double z_busy);
};

double posterior_busy(const SensingModel& model, double theta, double z);
double underlay_power(double gamma, double lambda_i, double lambda_p, double posterior);

struct UnderlayPolicy {
  double lambda_i = 0.0;
  double lambda_p = 0.0;
  double lambda_d = 0.0;
  // gamma_th(i, z) = kappa_i(z) * ratio[i].
  std::vector<double> ratio;
  std::vector<TailValues> tails;
  std::vector<double> theta;
  SensingModel model;

  double kappa(int i, double z) const;
  double threshold(int i, double z) const;
  double power(int i, double z, double gamma) const;
};

struct UnderlayEvaluation {
  UnderlayPolicy policy;
  StoppingStats stats;
};

UnderlayEvaluation evaluate_underlay(const ChannelEnsemble& ens, const SensingModel& model, double lambda_i,
                                     double lambda_p, double lambda_d, const RecursionOptions& opts = {},
                                     ThresholdRule rule = ThresholdRule::Optimal);

struct UnderlayOptions {
  int grid_size = 16;
  double tol = 1e-8;
  int refine_evaluations = 30;
  RecursionOptions rec{};
  ThresholdRule rule = ThresholdRule::Optimal;
};

struct UnderlaySolution {
  UnderlayPolicy policy;
  StoppingStats stats;
  bool interference_active = true;
  bool power_active = false;
  bool delay_active = false;
};

double find_lambda_i(const ChannelEnsemble& ens, const SensingModel& model, double lambda_p, double lambda_d,
                     double i_avg, const UnderlayOptions& opts, UnderlayEvaluation* out = nullptr);

UnderlaySolution solve_underlay(const ChannelEnsemble& ens, const SensingModel& model, double i_avg,
                                std::optional<double> p_avg, double d_max, const UnderlayOptions& opts = {});

// ---- Monte Carlo ----

struct EmpiricalStats {
  StoppingStats mean;
  StoppingStats std_error;
  double mean_delay = 0.0;  // average gap between successful slots
  long long slots = 0;
};

EmpiricalStats simulate_stopping(const ChannelEnsemble& ens, const OverlayPolicy& policy, long long slots,
                                 std::uint64_t seed);

// One slot of sequential sensing under an overlay policy.
struct SlotDraw {
  bool success = false;
  int channel = -1;
  double rate = 0.0;
  double power = 0.0;
  double interference = 0.0;
};
SlotDraw draw_slot(const ChannelEnsemble& ens, const OverlayPolicy& policy, Rng& occupancy, Rng& fading);
EmpiricalStats simulate_stopping(const ChannelEnsemble& ens, const UnderlayPolicy& policy, long long slots,
                                 std::uint64_t seed);

}  // namespace crlab::stopping
