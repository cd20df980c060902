#pragma once

// Admission policies: the batched explore/exploit learner, static and
// alternating genie-aided comparators, and the ETO / UCB baselines.

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qadmit/engine.hpp"
#include "qadmit/naor.hpp"
#include "qadmit/rng.hpp"

namespace qadmit {

/// Growth of the minimum phase-2 length: alpha_j = max(floor(f(j)), 1).
enum class AlphaSchedule { Linear, Sqrt, Log, Constant };

/// Growth of the threshold cap: K*(j) = max(floor(f(j)), 0) + l1 + Q0.
/// `None` disables truncation.
enum class CapSchedule { Log, Sqrt, Linear, None };

/// Law of the exploration coin B^j for j > 1.
enum class ExploreSchedule {
  LogPowOverJ,  // ln^eps(j) / j
  Log4OverJ2,   // ln^4(j) / j^2
  Always,       // 1
};

struct LearnerConfig {
  Count l1 = 3;
  Count l2 = 10;
  double epsilon = 1.0;
  AlphaSchedule alpha = AlphaSchedule::Linear;
  CapSchedule cap = CapSchedule::Log;
  ExploreSchedule explore = ExploreSchedule::LogPowOverJ;
  Count initial_queue_len = 0;

  void validate() const;
};

double alpha_factor(AlphaSchedule schedule, Count batch);
Threshold threshold_cap(const LearnerConfig& config, Count batch);
double explore_probability(const LearnerConfig& config, Count batch);
Count phase2_quota(const LearnerConfig& config, Count batch);

enum class Phase { Phase1, Phase2 };

struct LearnerState {
  LearnerConfig config;
  double reward_cost_ratio = 1.0;

  Count batch_index = 0;    // j; 0 before the first arrival
  Count arrival_index = 0;  // i
  Phase phase = Phase::Phase1;
  Count phase1_count = 0;
  Count phase2_count = 0;

  Count service_sample_count = 0;  // s
  double m_hat = 0.0;              // meaningful once s > 0
  Count interarrival_count = 0;
  double nu_hat = 0.0;

  Threshold current_threshold = 0;  // K(j), fixed through phase 2
  std::vector<double> phase_samples;  // completed during the running phase
  Count phase1_batches = 0;

  static LearnerState initial(const LearnerConfig& config, double reward_cost_ratio);
};

/// One arrival of the learner. Phase boundaries are taken at arrival epochs:
/// the arrival that finds phase 1 exhausted, or phase 2 past its quota with an
/// empty queue, belongs to the next phase. `explore_draw` in [0, 1) decides
/// B^j and is ignored unless a batch starts after a zero threshold.
Decision learner_on_arrival(LearnerState& state, const ArrivalObservation& obs,
                            double explore_draw);

/// Absorb the completed-service samples of the phase just ended into m_hat.
void learner_on_phase_end(LearnerState& state, std::span<const double> completed_service_times);

bool phase2_should_continue(const LearnerState& state, Count queue_len_before_next_arrival);

/// K(j) = min(K*(j), K) with K bracketed from (1 / m_hat, 1 / nu_hat). Without
/// any service sample yet, K(j) = K*(j).
Threshold learner_phase2_threshold(const LearnerState& state);

class LearningDispatcher final : public AdmissionPolicy {
 public:
  LearningDispatcher(const LearnerConfig& config, const ModelParams& known, std::uint64_t seed);

  const LearnerState& state() const { return state_; }
  std::string name() const override { return "alg1"; }

 protected:
  Decision decide(const ArrivalObservation& obs) override;

 private:
  LearnerState state_;
  Rng rng_;
};

class StaticThresholdPolicy final : public AdmissionPolicy {
 public:
  explicit StaticThresholdPolicy(Threshold k) : k_(k) {}
  std::string name() const override { return "static" + std::to_string(k_); }

 protected:
  Decision decide(const ArrivalObservation& obs) override {
    return {obs.queue_len_before < k_, k_, false};
  }

 private:
  Threshold k_;
};

enum class GenieMode { Static, Alternating };

struct GenieState {
  GenieMode mode = GenieMode::Static;
  Threshold k_bar = 0;
  Threshold current_threshold = 0;
  Count busy_cycle_index = 0;  // n
};

/// Switching rule evaluated when a customer arrives to find the genie system
/// empty: K_bar - 1 on the first cycle, when the initiating customer arrives
/// in the reference policy's exploration phase, or when the reference
/// threshold is at most K_bar - 1; K_bar otherwise. Throws std::logic_error if
/// the genie queue is not empty or the state is not alternating.
void alternating_genie_on_busy_cycle_start(GenieState& genie, Threshold reference_threshold,
                                           bool reference_exploring, Count genie_queue_len);

/// Comparator that follows a reference policy decided earlier on the same
/// arrival. The reference must precede this policy in the coupled run.
class AlternatingGenie final : public AdmissionPolicy {
 public:
  AlternatingGenie(Threshold k_bar, const AdmissionPolicy& reference, Count initial_queue_len = 0);

  const GenieState& state() const { return genie_; }
  std::string name() const override { return "alternating"; }

 protected:
  Decision decide(const ArrivalObservation& obs) override;

 private:
  GenieState genie_;
  const AdmissionPolicy* reference_;
};

enum class BaselineKind { Eto, Ucb };

struct UcbConfig {
  double confidence = 2.0;  // bias = m_hat * sqrt(confidence * ln(i) / s)
  double m_floor = 1e-9;
};

struct BaselineState {
  BaselineKind kind = BaselineKind::Eto;
  Count eto_budget = 0;  // M
  UcbConfig ucb;
  double reward_cost_ratio = 1.0;

  Count arrival_index = 0;
  Count service_sample_count = 0;
  double m_hat = 0.0;
  double nu_hat = 0.0;
  bool committed = false;
  Threshold threshold = 0;
};

BaselineState make_eto_state(Count budget, const ModelParams& known);
BaselineState make_ucb_state(const UcbConfig& config, const ModelParams& known);

/// Estimate-then-optimize: admit the first M arrivals, then commit once to the
/// threshold solved from the estimates (after at least one service sample).
Decision eto_on_arrival(BaselineState& state, const ArrivalObservation& obs);

/// Optimistic service-time estimate m_hat - bias, floored at m_floor.
double ucb_optimistic_service_time(const BaselineState& state);

/// Re-solve the threshold from the optimistic estimate on every arrival.
Decision ucb_on_arrival(BaselineState& state, const ArrivalObservation& obs);

class BaselinePolicy final : public AdmissionPolicy {
 public:
  explicit BaselinePolicy(BaselineState state) : state_(std::move(state)) {}

  const BaselineState& state() const { return state_; }
  std::string name() const override;

 protected:
  Decision decide(const ArrivalObservation& obs) override {
    return state_.kind == BaselineKind::Eto ? eto_on_arrival(state_, obs)
                                            : ucb_on_arrival(state_, obs);
  }

 private:
  BaselineState state_;
};

}  // namespace qadmit
