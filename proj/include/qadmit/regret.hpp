#pragma once

// Coupled regret measurement: a learning (or baseline) system against a
// genie-aided system on shared sample paths, aggregated over replications.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "qadmit/engine.hpp"
#include "qadmit/naor.hpp"
#include "qadmit/policies.hpp"

namespace qadmit {

enum class PolicyKind { Alg1, Eto, Ucb, Static };

struct PolicySpec {
  PolicyKind kind = PolicyKind::Alg1;
  std::string label = "alg1";
  LearnerConfig learner;
  Count eto_budget = 100;
  UcbConfig ucb;
  Threshold static_threshold = 0;
};

enum class GenieKind { Auto, Static, Alternating };

struct GenieSpec {
  GenieKind kind = GenieKind::Auto;
  Threshold k = 0;  // Static only
};

struct ExperimentConfig {
  ModelParams params;
  PolicySpec policy;
  GenieSpec genie;
  Count n_arrivals = 50'000;
  Count replications = 200;
  std::vector<Count> checkpoints;  // empty means the default geometric grid
  std::uint64_t base_seed = 1;
  Count initial_queue_len = 0;
  unsigned jobs = 1;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Genie actually used after resolving Auto and degrading Alternating on a
/// unique optimum to Static(k_bar).
struct ResolvedGenie {
  GenieKind kind = GenieKind::Static;
  Threshold k = 0;
  bool degraded = false;
};

ResolvedGenie resolve_genie(const ExperimentConfig& config);

/// `count` geometrically spaced arrival indices in [1, n], deduplicated, ending at n.
std::vector<Count> geometric_checkpoints(Count n, std::size_t count = 200);

std::vector<Count> effective_checkpoints(const ExperimentConfig& config);

std::unique_ptr<AdmissionPolicy> make_policy(const PolicySpec& spec, const ModelParams& params,
                                             std::uint64_t seed);

/// R * joins - C * integral of Q, with the integral extended to `at_time`
/// (which may not precede the state's clock).
double net_profit(const SystemState& state, const ModelParams& params, double at_time);
double net_profit(Count join_count, double holding_integral, const ModelParams& params);

struct ReplicationResult {
  std::vector<double> difference;   // genie minus learner net profit, per checkpoint
  std::vector<double> certificate;  // trace bound (R + C/lambda) * sum(...), per checkpoint
  double end_time = 0.0;
  double genie_profit = 0.0;  // at the last arrival
  double learner_profit = 0.0;
};

/// One replication; systems are ordered [learner, genie] for `on_event`.
ReplicationResult run_replication(
    const ExperimentConfig& config, Count rep_index,
    std::function<void(Count, const Event&, std::span<const SystemState>)> on_event = {});

struct RegretCurve {
  std::vector<Count> checkpoints;
  std::vector<double> mean_regret;
  std::vector<double> std_err;
  Count replications = 0;
  std::vector<double> mean_certificate;
  double mean_genie_profit_rate = 0.0;  // genie profit per unit time at the horizon
  double genie_profit_rate_std_err = 0.0;
};

/// Mean and standard error across replications. Deterministic for a given
/// config whatever `jobs` is: results are folded in replication order.
RegretCurve run_experiment(const ExperimentConfig& config,
                           const std::function<void(Count done)>& progress = {});

/// Sample mean and (sample sd / sqrt(n)), zero error for a single value.
struct MeanError {
  double mean = 0.0;
  double std_err = 0.0;
};
MeanError mean_and_error(const std::vector<double>& values);

/// `arrival_index,mean_regret,std_err,replications` with header, LF endings.
void write_regret_csv(std::ostream& out, const RegretCurve& curve);
void write_certificate_csv(std::ostream& out, const RegretCurve& curve);

/// Parses the regret CSV schema; throws std::runtime_error naming the bad column.
RegretCurve read_regret_csv(std::istream& in);

std::string format_double(double value);

}  // namespace qadmit
