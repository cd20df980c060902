#pragma once

// Closed-form analytics of the observable M/M/1/K admission model.
//
// Rates follow the (y, z) convention of the threshold function V: y is the
// service rate and z the arrival rate, so V(K, mu, lambda) brackets R/C.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace qadmit {

using Count = std::int64_t;

/// Threshold value; admit iff the queue length seen on arrival is below it.
using Threshold = std::int64_t;

inline constexpr Threshold kUnboundedThreshold = std::numeric_limits<Threshold>::max() / 4;

/// Relative tolerance for detecting V(k_bar) == R/C (tied optimal thresholds).
inline constexpr double kTieTolerance = 1e-9;

/// Relative band |y - z| <= eta * max(y, z) inside which the equal-rate forms apply.
inline constexpr double kEqualRateBand = 1e-12;

class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct ModelParams {
  double lambda = 1.0;  // arrival rate
  double mu = 1.0;      // service rate
  double reward = 1.0;  // R, paid per service completion
  double cost = 1.0;    // C, holding cost per customer per unit time

  /// Throws DomainError unless all four fields are finite and strictly positive.
  void validate() const;

  double mean_service_time() const { return 1.0 / mu; }
  double mean_interarrival_time() const { return 1.0 / lambda; }
  double reward_cost_ratio() const { return reward / cost; }
  double load() const { return lambda / mu; }
};

struct ThresholdSolution {
  Threshold k_bar = 0;
  bool unique = true;
  std::vector<Threshold> optimal_set;  // {k_bar} or {k_bar - 1, k_bar}
};

struct StationaryProfile {
  Threshold threshold = 0;
  std::vector<double> probs;  // probs[i] = P(Q = i), i = 0..threshold
  double expected_len = 0.0;
};

bool rates_equal(double y, double z);

/// V(K, y, z) in closed form. y == z (within kEqualRateBand) uses K(K+1)/(2y).
double v_function(Threshold k, double y, double z);

/// V(K, y, z) recovered from the stationary distributions of the K and K-1
/// truncated chains. Requires k >= 1.
double v_function_alt(Threshold k, double y, double z);

/// Stationary law of the M/M/1/K queue with the given rates.
StationaryProfile stationary_profile(Threshold k, double y, double z);
StationaryProfile stationary_distribution(Threshold k, const ModelParams& params);

/// Largest x with V(x, y, z) <= ratio, clipped to `cap`. V is strictly
/// increasing and unbounded, so the answer always exists.
Threshold bracket_threshold(double y, double z, double ratio, Threshold cap = kUnboundedThreshold);

/// Same answer as bracket_threshold, searching outward from `hint`. Cheap when
/// the rates drift slowly between calls.
Threshold bracket_threshold_near(double y, double z, double ratio, Threshold hint,
                                 Threshold cap = kUnboundedThreshold);

ThresholdSolution solve_threshold(const ModelParams& params);

/// Long-run average profit of the static threshold-k dispatcher:
/// lambda * R * (1 - p_k^k) - C * E_k.
double long_run_profit(Threshold k, const ModelParams& params);

/// Mean number of jumps until absorption at 0 of the embedded chain of an
/// M/M/1/k queue started at l (arrivals at k are self-loops). 1 <= l <= k.
double busy_cycle_arrival_mean(Threshold l, Threshold k, const ModelParams& params);

std::string to_string(const ThresholdSolution& solution);

}  // namespace qadmit
