#include "qadmit/engine.hpp"

#include <cstdio>
#include <ostream>
#include <utility>

namespace qadmit {

const char* to_string(EventKind kind) {
  return kind == EventKind::Arrival ? "arrival" : "potential_departure";
}

EventGenerator::EventGenerator(const ModelParams& params, std::uint64_t seed)
    : rng_(seed),
      total_rate_(params.lambda + params.mu),
      arrival_share_(params.lambda / (params.lambda + params.mu)) {
  params.validate();
}

Event EventGenerator::next() {
  clock_ += rng_.exponential(total_rate_);
  const bool arrival = rng_.bernoulli(arrival_share_);
  if (arrival) ++arrivals_;
  return {clock_, arrival ? EventKind::Arrival : EventKind::PotentialDeparture};
}

EventStream generate_stream(const ModelParams& params, Count n_arrivals, std::uint64_t seed) {
  if (n_arrivals < 1) throw std::invalid_argument("a stream needs at least one arrival");
  EventGenerator source(params, seed);
  EventStream stream;
  stream.seed = seed;
  stream.events.reserve(static_cast<std::size_t>(
      static_cast<double>(n_arrivals) * (1.0 + params.mu / params.lambda) * 1.05) + 16);
  while (source.arrivals_emitted() < n_arrivals) stream.events.push_back(source.next());
  stream.arrival_count = n_arrivals;
  return stream;
}

EventStream generate_stream_until(const ModelParams& params, double horizon, std::uint64_t seed) {
  EventGenerator source(params, seed);
  EventStream stream;
  stream.seed = seed;
  for (;;) {
    const Event event = source.next();
    if (event.time > horizon) break;
    stream.events.push_back(event);
    if (event.kind == EventKind::Arrival) ++stream.arrival_count;
  }
  return stream;
}

SystemState SystemState::with_initial_queue(Count initial_len, double start_time) {
  if (initial_len < 0) throw std::invalid_argument("initial queue length must be nonnegative");
  SystemState state;
  state.queue_len = initial_len;
  state.initial_queue_len = initial_len;
  state.arrival_epochs.assign(static_cast<std::size_t>(initial_len), start_time);
  state.head_service_start = start_time;
  state.last_event_time = start_time;
  return state;
}

EventEffect apply_event(SystemState& state, const Event& event, std::optional<bool> admit) {
  const bool is_arrival = event.kind == EventKind::Arrival;
  if (is_arrival != admit.has_value()) {
    throw std::logic_error(is_arrival ? "arrival requires an admission decision"
                                      : "potential departure cannot carry an admission decision");
  }
  if (event.time < state.last_event_time) {
    throw std::logic_error("events must be applied in time order");
  }

  state.holding_integral +=
      static_cast<double>(state.queue_len) * (event.time - state.last_event_time);
  state.last_event_time = event.time;

  EventEffect effect;
  if (is_arrival) {
    effect.starts_busy_cycle = state.queue_len == 0;
    if (effect.starts_busy_cycle) ++state.busy_cycles;
    if (*admit) {
      if (state.queue_len == 0) state.head_service_start = event.time;
      state.arrival_epochs.push_back(event.time);
      ++state.queue_len;
      ++state.join_count;
    }
  } else if (state.queue_len > 0) {
    effect.service_sample = event.time - state.head_service_start;
    state.arrival_epochs.pop_front();
    --state.queue_len;
    ++state.completion_count;
    // The next customer arrived before now, so its service starts now.
    state.head_service_start = event.time;
  }
  return effect;
}

CoupledRun::CoupledRun(std::vector<SystemState> initial, std::vector<AdmissionPolicy*> policies)
    : states_(std::move(initial)),
      policies_(std::move(policies)),
      pending_samples_(states_.size()),
      snapshots_(states_.size()) {
  if (states_.size() != policies_.size()) {
    throw std::invalid_argument("one policy per coupled system is required");
  }
  for (const auto* policy : policies_) {
    if (policy == nullptr) throw std::invalid_argument("null admission policy");
  }
  if (!states_.empty()) last_arrival_time_ = states_.front().last_event_time;
}

void CoupledRun::step(const Event& event) {
  if (event.kind == EventKind::PotentialDeparture) {
    for (std::size_t s = 0; s < states_.size(); ++s) {
      const EventEffect effect = apply_event(states_[s], event, std::nullopt);
      if (effect.service_sample) pending_samples_[s].push_back(*effect.service_sample);
    }
  } else {
    ++arrivals_;
    const double gap = event.time - last_arrival_time_;
    last_arrival_time_ = event.time;
    for (std::size_t s = 0; s < states_.size(); ++s) {
      SystemState& state = states_[s];
      const ArrivalObservation obs{arrivals_, state.queue_len, gap, pending_samples_[s]};
      bool admit = false;
      try {
        admit = policies_[s]->on_arrival(obs);
      } catch (const std::exception& e) {
        throw ReplicationError("policy '" + policies_[s]->name() + "' failed at arrival " +
                               std::to_string(arrivals_) + ": " + e.what());
      }
      pending_samples_[s].clear();
      snapshots_[s].queue_len_before = state.queue_len;
      apply_event(state, event, admit);
      snapshots_[s].admitted = admit;
      snapshots_[s].threshold = policies_[s]->last_threshold();
      snapshots_[s].join_count = state.join_count;
      snapshots_[s].completion_count = state.completion_count;
      snapshots_[s].holding_integral = state.holding_integral;
    }
    if (observer_.on_arrival) observer_.on_arrival({arrivals_, event.time, snapshots_});
  }
  if (observer_.on_event) observer_.on_event(events_, event, states_);
  ++events_;
}

std::vector<SystemState> run_coupled(const EventStream& stream, std::vector<SystemState> initial,
                                     std::vector<AdmissionPolicy*> policies,
                                     CoupledObserver observer) {
  CoupledRun run(std::move(initial), std::move(policies));
  run.observer() = std::move(observer);
  for (const Event& event : stream.events) run.step(event);
  return {run.states().begin(), run.states().end()};
}

std::vector<SystemState> run_coupled(EventGenerator& source, Count n_arrivals,
                                     std::vector<SystemState> initial,
                                     std::vector<AdmissionPolicy*> policies,
                                     CoupledObserver observer) {
  CoupledRun run(std::move(initial), std::move(policies));
  run.observer() = std::move(observer);
  while (run.arrivals() < n_arrivals) run.step(source.next());
  return {run.states().begin(), run.states().end()};
}

CoupledTrace record_coupled(const EventStream& stream, std::vector<SystemState> initial,
                            std::vector<AdmissionPolicy*> policies) {
  CoupledTrace trace;
  trace.system_count = initial.size();
  trace.arrival_times.reserve(static_cast<std::size_t>(stream.arrival_count));
  trace.rows.reserve(static_cast<std::size_t>(stream.arrival_count) * trace.system_count);
  CoupledObserver observer;
  observer.on_arrival = [&trace](const ArrivalRecord& record) {
    trace.arrival_times.push_back(record.time);
    trace.rows.insert(trace.rows.end(), record.systems.begin(), record.systems.end());
  };
  run_coupled(stream, std::move(initial), std::move(policies), std::move(observer));
  return trace;
}

CoupledObserver trace_csv_observer(std::ostream& out, std::span<const std::string> system_names) {
  out << "event_index,time,kind";
  for (const auto& name : system_names) out << ",q_" << name;
  out << '\n';
  CoupledObserver observer;
  observer.on_event = [&out](Count index, const Event& event, std::span<const SystemState> states) {
    char time_buf[32];
    std::snprintf(time_buf, sizeof time_buf, "%.17g", event.time);
    out << index << ',' << time_buf << ',' << to_string(event.kind);
    for (const auto& state : states) out << ',' << state.queue_len;
    out << '\n';
  };
  return observer;
}

}  // namespace qadmit
