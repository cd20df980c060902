#include "qadmit/policies.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qadmit {

namespace {

void absorb_mean(double& mean, Count& count, double sample) {
  ++count;
  mean += (sample - mean) / static_cast<double>(count);
}

void observe_interarrival(LearnerState& state, double gap) {
  absorb_mean(state.nu_hat, state.interarrival_count, gap);
}

void enter_phase2(LearnerState& state) {
  state.phase = Phase::Phase2;
  state.phase2_count = 0;
  state.current_threshold = learner_phase2_threshold(state);
}

void start_batch(LearnerState& state, double explore_draw) {
  const Count j = ++state.batch_index;
  const bool explore =
      j == 1 ||
      (state.current_threshold == 0 && explore_draw < explore_probability(state.config, j));
  if (explore) {
    state.phase = Phase::Phase1;
    state.phase1_count = 0;
    ++state.phase1_batches;
  } else {
    enter_phase2(state);
  }
}

void end_phase(LearnerState& state) {
  learner_on_phase_end(state, state.phase_samples);
  state.phase_samples.clear();
}

}  // namespace

void LearnerConfig::validate() const {
  if (l1 < 1) throw std::invalid_argument("l1 must be at least 1");
  if (l2 < 1) throw std::invalid_argument("l2 must be at least 1");
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("epsilon must be positive");
  }
  if (initial_queue_len < 0) throw std::invalid_argument("initial queue length must be >= 0");
}

double alpha_factor(AlphaSchedule schedule, Count batch) {
  const auto j = static_cast<double>(batch);
  switch (schedule) {
    case AlphaSchedule::Linear:
      return std::max(j, 1.0);
    case AlphaSchedule::Sqrt:
      return std::max(std::floor(std::sqrt(j)), 1.0);
    case AlphaSchedule::Log:
      return std::max(std::floor(std::log(j)), 1.0);
    case AlphaSchedule::Constant:
      return 1.0;
  }
  return 1.0;
}

Threshold threshold_cap(const LearnerConfig& config, Count batch) {
  const auto j = static_cast<double>(batch);
  double growth = 0.0;
  switch (config.cap) {
    case CapSchedule::Log:
      growth = std::log(j);
      break;
    case CapSchedule::Sqrt:
      growth = std::sqrt(j);
      break;
    case CapSchedule::Linear:
      growth = j;
      break;
    case CapSchedule::None:
      return kUnboundedThreshold;
  }
  return static_cast<Threshold>(std::max(std::floor(growth), 0.0)) + config.l1 +
         config.initial_queue_len;
}

double explore_probability(const LearnerConfig& config, Count batch) {
  if (batch <= 1) return 1.0;
  const auto j = static_cast<double>(batch);
  const double log_j = std::log(j);
  double p = 1.0;
  switch (config.explore) {
    case ExploreSchedule::LogPowOverJ:
      p = std::pow(log_j, config.epsilon) / j;
      break;
    case ExploreSchedule::Log4OverJ2:
      p = std::pow(log_j, 4.0) / (j * j);
      break;
    case ExploreSchedule::Always:
      p = 1.0;
      break;
  }
  return std::clamp(p, 0.0, 1.0);
}

Count phase2_quota(const LearnerConfig& config, Count batch) {
  return static_cast<Count>(
      std::ceil(alpha_factor(config.alpha, batch) * static_cast<double>(config.l2)));
}

LearnerState LearnerState::initial(const LearnerConfig& config, double reward_cost_ratio) {
  config.validate();
  if (!(reward_cost_ratio > 0.0)) throw std::invalid_argument("R/C must be positive");
  LearnerState state;
  state.config = config;
  state.reward_cost_ratio = reward_cost_ratio;
  return state;
}

Decision learner_on_arrival(LearnerState& state, const ArrivalObservation& obs,
                            double explore_draw) {
  ++state.arrival_index;
  observe_interarrival(state, obs.inter_arrival_time);
  state.phase_samples.insert(state.phase_samples.end(), obs.completed_service_times.begin(),
                             obs.completed_service_times.end());

  if (state.batch_index == 0) {
    start_batch(state, explore_draw);
  } else if (state.phase == Phase::Phase1 && state.phase1_count >= state.config.l1) {
    end_phase(state);
    enter_phase2(state);
  } else if (state.phase == Phase::Phase2 &&
             !phase2_should_continue(state, obs.queue_len_before)) {
    end_phase(state);
    start_batch(state, explore_draw);
  }

  if (state.phase == Phase::Phase1) {
    ++state.phase1_count;
    return {true, state.config.l1, true};
  }
  ++state.phase2_count;
  return {obs.queue_len_before < state.current_threshold, state.current_threshold, false};
}

void learner_on_phase_end(LearnerState& state, std::span<const double> completed_service_times) {
  for (double sample : completed_service_times) {
    absorb_mean(state.m_hat, state.service_sample_count, sample);
  }
}

bool phase2_should_continue(const LearnerState& state, Count queue_len_before_next_arrival) {
  if (state.phase != Phase::Phase2) throw std::logic_error("learner is not in phase 2");
  return state.phase2_count < phase2_quota(state.config, state.batch_index) ||
         queue_len_before_next_arrival > 0;
}

Threshold learner_phase2_threshold(const LearnerState& state) {
  const Threshold cap = threshold_cap(state.config, state.batch_index);
  if (state.service_sample_count == 0) return cap;
  return bracket_threshold(1.0 / state.m_hat, 1.0 / state.nu_hat, state.reward_cost_ratio, cap);
}

LearningDispatcher::LearningDispatcher(const LearnerConfig& config, const ModelParams& known,
                                       std::uint64_t seed)
    : state_(LearnerState::initial(config, known.reward_cost_ratio())), rng_(seed) {}

Decision LearningDispatcher::decide(const ArrivalObservation& obs) {
  // One draw per arrival keeps the exploration stream aligned with arrivals.
  return learner_on_arrival(state_, obs, rng_.uniform());
}

void alternating_genie_on_busy_cycle_start(GenieState& genie, Threshold reference_threshold,
                                           bool reference_exploring, Count genie_queue_len) {
  if (genie.mode != GenieMode::Alternating) throw std::logic_error("genie is not alternating");
  if (genie_queue_len != 0) throw std::logic_error("busy cycle can only start on an empty queue");
  if (genie.k_bar < 1) throw std::logic_error("alternating genie needs k_bar >= 1");

  ++genie.busy_cycle_index;
  const bool low = genie.busy_cycle_index == 1 || reference_exploring ||
                   reference_threshold <= genie.k_bar - 1;
  genie.current_threshold = low ? genie.k_bar - 1 : genie.k_bar;
}

AlternatingGenie::AlternatingGenie(Threshold k_bar, const AdmissionPolicy& reference,
                                   Count initial_queue_len)
    : reference_(&reference) {
  if (k_bar < 1) throw std::invalid_argument("alternating genie needs k_bar >= 1");
  genie_.mode = GenieMode::Alternating;
  genie_.k_bar = k_bar;
  genie_.current_threshold = k_bar - 1;
  // A nonempty start means the first busy cycle is already running at t = 0.
  if (initial_queue_len > 0) genie_.busy_cycle_index = 1;
}

Decision AlternatingGenie::decide(const ArrivalObservation& obs) {
  if (obs.queue_len_before == 0) {
    if (reference_->last_arrival_index() != obs.arrival_index) {
      throw std::logic_error("reference policy must decide an arrival before the genie");
    }
    alternating_genie_on_busy_cycle_start(genie_, reference_->last_threshold(),
                                          reference_->last_was_exploration(), 0);
  }
  return {obs.queue_len_before < genie_.current_threshold, genie_.current_threshold, false};
}

namespace {

void baseline_observe(BaselineState& state, const ArrivalObservation& obs) {
  ++state.arrival_index;
  state.nu_hat += (obs.inter_arrival_time - state.nu_hat) / static_cast<double>(state.arrival_index);
  for (double sample : obs.completed_service_times) {
    absorb_mean(state.m_hat, state.service_sample_count, sample);
  }
}

BaselineState make_baseline(BaselineKind kind, const ModelParams& known) {
  BaselineState state;
  state.kind = kind;
  state.reward_cost_ratio = known.reward_cost_ratio();
  if (!(state.reward_cost_ratio > 0.0)) throw std::invalid_argument("R/C must be positive");
  return state;
}

}  // namespace

BaselineState make_eto_state(Count budget, const ModelParams& known) {
  if (budget < 0) throw std::invalid_argument("ETO budget must be nonnegative");
  BaselineState state = make_baseline(BaselineKind::Eto, known);
  state.eto_budget = budget;
  return state;
}

BaselineState make_ucb_state(const UcbConfig& config, const ModelParams& known) {
  if (!(config.confidence > 0.0) || !(config.m_floor > 0.0)) {
    throw std::invalid_argument("UCB confidence and floor must be positive");
  }
  BaselineState state = make_baseline(BaselineKind::Ucb, known);
  state.ucb = config;
  return state;
}

Decision eto_on_arrival(BaselineState& state, const ArrivalObservation& obs) {
  baseline_observe(state, obs);
  if (!state.committed) {
    if (state.arrival_index <= state.eto_budget || state.service_sample_count == 0) {
      return {true, kUnboundedThreshold, true};
    }
    state.threshold =
        bracket_threshold(1.0 / state.m_hat, 1.0 / state.nu_hat, state.reward_cost_ratio);
    state.committed = true;
  }
  return {obs.queue_len_before < state.threshold, state.threshold, false};
}

double ucb_optimistic_service_time(const BaselineState& state) {
  if (state.service_sample_count == 0) return state.ucb.m_floor;
  const double bias =
      state.m_hat * std::sqrt(state.ucb.confidence *
                              std::log(static_cast<double>(std::max<Count>(state.arrival_index, 1))) /
                              static_cast<double>(state.service_sample_count));
  return std::max(state.m_hat - bias, state.ucb.m_floor);
}

Decision ucb_on_arrival(BaselineState& state, const ArrivalObservation& obs) {
  baseline_observe(state, obs);
  const double optimistic = ucb_optimistic_service_time(state);
  state.threshold = bracket_threshold_near(1.0 / optimistic, 1.0 / state.nu_hat,
                                           state.reward_cost_ratio, state.threshold);
  return {obs.queue_len_before < state.threshold, state.threshold, false};
}

std::string BaselinePolicy::name() const {
  return state_.kind == BaselineKind::Eto ? "eto" + std::to_string(state_.eto_budget) : "ucb";
}

}  // namespace qadmit
