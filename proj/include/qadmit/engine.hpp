#pragma once

// Coupled sample-path simulation of admission-controlled single-server queues.
//
// All systems share one arrival process and one rate-mu potential departure
// process: a potential departure serves the head-of-line customer of every
// nonempty system and is wasted on empty ones.

#include <cstdint>
#include <deque>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qadmit/naor.hpp"
#include "qadmit/rng.hpp"

namespace qadmit {

enum class EventKind : std::uint8_t { Arrival, PotentialDeparture };

const char* to_string(EventKind kind);

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Arrival;
};

struct EventStream {
  std::uint64_t seed = 0;
  std::vector<Event> events;
  Count arrival_count = 0;
};

/// Lazy source of the merged Poisson process: gaps are Exp(lambda + mu), each
/// event is an arrival with probability lambda / (lambda + mu).
class EventGenerator {
 public:
  EventGenerator(const ModelParams& params, std::uint64_t seed);

  Event next();
  Count arrivals_emitted() const { return arrivals_; }

 private:
  Rng rng_;
  double total_rate_;
  double arrival_share_;
  double clock_ = 0.0;
  Count arrivals_ = 0;
};

/// Exactly n_arrivals arrivals plus every potential departure before the last one.
EventStream generate_stream(const ModelParams& params, Count n_arrivals, std::uint64_t seed);

/// Every event with time <= horizon.
EventStream generate_stream_until(const ModelParams& params, double horizon, std::uint64_t seed);

/// One queue's state on the shared path. Customers are held FIFO by arrival
/// epoch; the front customer is in service since head_service_start.
struct SystemState {
  Count queue_len = 0;
  Count join_count = 0;
  Count completion_count = 0;
  double holding_integral = 0.0;  // integral of Q(u) du, customers in service included
  std::deque<double> arrival_epochs;
  double head_service_start = 0.0;
  Count busy_cycles = 0;  // arrivals that found the system empty
  double last_event_time = 0.0;
  Count initial_queue_len = 0;

  static SystemState with_initial_queue(Count initial_len, double start_time = 0.0);
};

struct EventEffect {
  std::optional<double> service_sample;  // departure epoch minus service start
  bool starts_busy_cycle = false;
};

/// Advance `state` through `event`. `admit` must be set for arrivals and only
/// for arrivals; throws std::logic_error otherwise.
EventEffect apply_event(SystemState& state, const Event& event, std::optional<bool> admit);

/// What a dispatcher sees when customer `arrival_index` arrives.
struct ArrivalObservation {
  Count arrival_index = 0;
  Count queue_len_before = 0;
  double inter_arrival_time = 0.0;
  std::span<const double> completed_service_times;  // since the previous arrival
};

struct Decision {
  bool admit = false;
  Threshold threshold = 0;   // K_i
  bool exploration = false;  // forced admission irrespective of the queue
};

/// Dispatcher plugged into a coupled run. Remembers its last decision so a
/// comparator processed later on the same arrival can react to it.
class AdmissionPolicy {
 public:
  virtual ~AdmissionPolicy() = default;

  bool on_arrival(const ArrivalObservation& obs) {
    last_ = decide(obs);
    last_arrival_ = obs.arrival_index;
    return last_.admit;
  }

  Threshold last_threshold() const { return last_.threshold; }
  bool last_was_exploration() const { return last_.exploration; }
  Count last_arrival_index() const { return last_arrival_; }

  virtual std::string name() const = 0;

 protected:
  virtual Decision decide(const ArrivalObservation& obs) = 0;

 private:
  Decision last_;
  Count last_arrival_ = 0;
};

struct SystemSnapshot {
  Count queue_len_before = 0;
  bool admitted = false;
  Threshold threshold = 0;
  Count join_count = 0;
  Count completion_count = 0;
  double holding_integral = 0.0;
};

struct ArrivalRecord {
  Count arrival_index = 0;
  double time = 0.0;
  std::span<const SystemSnapshot> systems;
};

struct CoupledObserver {
  std::function<void(const ArrivalRecord&)> on_arrival;
  std::function<void(Count event_index, const Event&, std::span<const SystemState>)> on_event;
};

class ReplicationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Drives several systems event by event on one shared path.
class CoupledRun {
 public:
  CoupledRun(std::vector<SystemState> initial, std::vector<AdmissionPolicy*> policies);

  void step(const Event& event);

  std::span<const SystemState> states() const { return states_; }
  Count arrivals() const { return arrivals_; }
  Count events() const { return events_; }
  CoupledObserver& observer() { return observer_; }

 private:
  std::vector<SystemState> states_;
  std::vector<AdmissionPolicy*> policies_;
  std::vector<std::vector<double>> pending_samples_;
  std::vector<SystemSnapshot> snapshots_;
  CoupledObserver observer_;
  double last_arrival_time_ = 0.0;
  Count arrivals_ = 0;
  Count events_ = 0;
};

/// Per-arrival records of every system, flattened arrival-major.
struct CoupledTrace {
  std::size_t system_count = 0;
  std::vector<double> arrival_times;
  std::vector<SystemSnapshot> rows;

  const SystemSnapshot& at(std::size_t arrival, std::size_t system) const {
    return rows[arrival * system_count + system];
  }
  std::size_t arrivals() const { return arrival_times.size(); }
};

std::vector<SystemState> run_coupled(const EventStream& stream, std::vector<SystemState> initial,
                                     std::vector<AdmissionPolicy*> policies,
                                     CoupledObserver observer = {});

/// Pulls from `source` until `n_arrivals` arrivals have been processed.
std::vector<SystemState> run_coupled(EventGenerator& source, Count n_arrivals,
                                     std::vector<SystemState> initial,
                                     std::vector<AdmissionPolicy*> policies,
                                     CoupledObserver observer = {});

CoupledTrace record_coupled(const EventStream& stream, std::vector<SystemState> initial,
                            std::vector<AdmissionPolicy*> policies);

/// Observer writing `event_index,time,kind,q_0,...,q_{n-1}` rows after every event.
CoupledObserver trace_csv_observer(std::ostream& out, std::span<const std::string> system_names);

}  // namespace qadmit
