#include "qadmit/regret.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "qadmit/rng.hpp"

namespace qadmit {

void ExperimentConfig::validate() const {
  try {
    params.validate();
  } catch (const DomainError& e) {
    throw std::invalid_argument(e.what());
  }
  if (n_arrivals < 1) throw std::invalid_argument("arrivals must be at least 1");
  if (replications < 1) throw std::invalid_argument("replications must be at least 1");
  if (initial_queue_len < 0) throw std::invalid_argument("initial_queue must be nonnegative");
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 1 || checkpoints[i] > n_arrivals) {
      throw std::invalid_argument("checkpoints must lie in [1, arrivals]");
    }
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1]) {
      throw std::invalid_argument("checkpoints must be strictly increasing");
    }
  }
  if (genie.kind == GenieKind::Static && genie.k < 0) {
    throw std::invalid_argument("genie threshold must be nonnegative");
  }
  switch (policy.kind) {
    case PolicyKind::Alg1:
      policy.learner.validate();
      break;
    case PolicyKind::Eto:
      if (policy.eto_budget < 0) throw std::invalid_argument("m must be nonnegative");
      break;
    case PolicyKind::Ucb:
      if (!(policy.ucb.confidence > 0.0)) throw std::invalid_argument("confidence must be > 0");
      if (!(policy.ucb.m_floor > 0.0)) throw std::invalid_argument("m_floor must be > 0");
      break;
    case PolicyKind::Static:
      if (policy.static_threshold < 0) throw std::invalid_argument("k must be nonnegative");
      break;
  }
}

ResolvedGenie resolve_genie(const ExperimentConfig& config) {
  ResolvedGenie resolved;
  if (config.genie.kind == GenieKind::Static) {
    resolved.k = config.genie.k;
    return resolved;
  }
  const ThresholdSolution solution = solve_threshold(config.params);
  resolved.k = solution.k_bar;
  if (!solution.unique) {
    resolved.kind = GenieKind::Alternating;
  } else {
    resolved.degraded = config.genie.kind == GenieKind::Alternating;
  }
  return resolved;
}

std::vector<Count> geometric_checkpoints(Count n, std::size_t count) {
  std::vector<Count> grid;
  if (n < 1 || count == 0) return grid;
  if (count == 1) return {n};
  const double ratio = std::log(static_cast<double>(n)) / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    auto value = static_cast<Count>(std::llround(std::exp(ratio * static_cast<double>(i))));
    value = std::clamp<Count>(value, 1, n);
    if (grid.empty() || value > grid.back()) grid.push_back(value);
  }
  if (grid.back() != n) grid.push_back(n);
  return grid;
}

std::vector<Count> effective_checkpoints(const ExperimentConfig& config) {
  return config.checkpoints.empty() ? geometric_checkpoints(config.n_arrivals)
                                    : config.checkpoints;
}

std::unique_ptr<AdmissionPolicy> make_policy(const PolicySpec& spec, const ModelParams& params,
                                             std::uint64_t seed) {
  switch (spec.kind) {
    case PolicyKind::Alg1:
      return std::make_unique<LearningDispatcher>(spec.learner, params, seed);
    case PolicyKind::Eto:
      return std::make_unique<BaselinePolicy>(make_eto_state(spec.eto_budget, params));
    case PolicyKind::Ucb:
      return std::make_unique<BaselinePolicy>(make_ucb_state(spec.ucb, params));
    case PolicyKind::Static:
      return std::make_unique<StaticThresholdPolicy>(spec.static_threshold);
  }
  throw std::invalid_argument("unknown policy kind");
}

double net_profit(Count join_count, double holding_integral, const ModelParams& params) {
  return params.reward * static_cast<double>(join_count) - params.cost * holding_integral;
}

double net_profit(const SystemState& state, const ModelParams& params, double at_time) {
  if (at_time < state.last_event_time) {
    throw std::invalid_argument("net profit cannot be evaluated before the state's clock");
  }
  const double integral =
      state.holding_integral +
      static_cast<double>(state.queue_len) * (at_time - state.last_event_time);
  return net_profit(state.join_count, integral, params);
}

ReplicationResult run_replication(
    const ExperimentConfig& config, Count rep_index,
    std::function<void(Count, const Event&, std::span<const SystemState>)> on_event) {
  const std::uint64_t rep_seed =
      replication_seed(config.base_seed, static_cast<std::uint64_t>(rep_index));
  const std::vector<Count> checkpoints = effective_checkpoints(config);
  const ResolvedGenie genie_choice = resolve_genie(config);

  PolicySpec learner_spec = config.policy;
  learner_spec.learner.initial_queue_len = config.initial_queue_len;
  auto learner = make_policy(learner_spec, config.params, stream_seed(rep_seed, Stream::Exploration));
  std::unique_ptr<AdmissionPolicy> genie;
  if (genie_choice.kind == GenieKind::Alternating) {
    genie = std::make_unique<AlternatingGenie>(genie_choice.k, *learner, config.initial_queue_len);
  } else {
    genie = std::make_unique<StaticThresholdPolicy>(genie_choice.k);
  }

  ReplicationResult result;
  result.difference.reserve(checkpoints.size());
  result.certificate.reserve(checkpoints.size());

  const ModelParams& params = config.params;
  const double weight = params.reward + params.cost / params.lambda;
  double mismatch_sum = 0.0;  // initial queues are equal, so the i = 0 term vanishes
  std::size_t next_checkpoint = 0;

  CoupledObserver observer;
  observer.on_event = std::move(on_event);
  observer.on_arrival = [&](const ArrivalRecord& record) {
    const SystemSnapshot& mine = record.systems[0];
    const SystemSnapshot& oracle = record.systems[1];
    mismatch_sum += std::abs(static_cast<double>(oracle.admitted) - static_cast<double>(mine.admitted)) +
                    std::abs(static_cast<double>(oracle.queue_len_before - mine.queue_len_before));
    if (next_checkpoint < checkpoints.size() && record.arrival_index == checkpoints[next_checkpoint]) {
      result.difference.push_back(net_profit(oracle.join_count, oracle.holding_integral, params) -
                                  net_profit(mine.join_count, mine.holding_integral, params));
      result.certificate.push_back(weight * mismatch_sum);
      ++next_checkpoint;
    }
    if (record.arrival_index == config.n_arrivals) {
      result.end_time = record.time;
      result.learner_profit = net_profit(mine.join_count, mine.holding_integral, params);
      result.genie_profit = net_profit(oracle.join_count, oracle.holding_integral, params);
    }
  };

  EventGenerator source(params, stream_seed(rep_seed, Stream::Events));
  std::vector<SystemState> initial(2, SystemState::with_initial_queue(config.initial_queue_len));
  run_coupled(source, config.n_arrivals, std::move(initial), {learner.get(), genie.get()},
              std::move(observer));
  return result;
}

MeanError mean_and_error(const std::vector<double>& values) {
  MeanError out;
  if (values.empty()) return out;
  // Welford, in index order.
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double delta = values[i] - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (values[i] - mean);
  }
  out.mean = mean;
  if (values.size() > 1) {
    const double n = static_cast<double>(values.size());
    out.std_err = std::sqrt(m2 / (n - 1.0)) / std::sqrt(n);
  }
  return out;
}

RegretCurve run_experiment(const ExperimentConfig& config,
                           const std::function<void(Count done)>& progress) {
  config.validate();
  const auto reps = static_cast<std::size_t>(config.replications);
  std::vector<ReplicationResult> results(reps);

  std::atomic<std::size_t> next{0};
  std::atomic<Count> done{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;

  auto worker = [&] {
    for (;;) {
      const std::size_t rep = next.fetch_add(1);
      if (rep >= reps) return;
      try {
        results[rep] = run_replication(config, static_cast<Count>(rep));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(reps);
        return;
      }
      const Count finished = ++done;
      if (progress) {
        std::lock_guard lock(failure_mutex);
        progress(finished);
      }
    }
  };

  const unsigned threads = std::min<unsigned>(config.jobs, static_cast<unsigned>(reps));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& thread : pool) thread.join();
  }
  if (failure) std::rethrow_exception(failure);

  RegretCurve curve;
  curve.checkpoints = effective_checkpoints(config);
  curve.replications = config.replications;
  std::vector<double> column(reps);
  for (std::size_t c = 0; c < curve.checkpoints.size(); ++c) {
    for (std::size_t r = 0; r < reps; ++r) column[r] = results[r].difference[c];
    const MeanError stats = mean_and_error(column);
    curve.mean_regret.push_back(stats.mean);
    curve.std_err.push_back(stats.std_err);
    for (std::size_t r = 0; r < reps; ++r) column[r] = results[r].certificate[c];
    curve.mean_certificate.push_back(mean_and_error(column).mean);
  }
  for (std::size_t r = 0; r < reps; ++r) {
    column[r] = results[r].genie_profit / results[r].end_time;
  }
  const MeanError rate = mean_and_error(column);
  curve.mean_genie_profit_rate = rate.mean;
  curve.genie_profit_rate_std_err = rate.std_err;
  return curve;
}

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_regret_csv(std::ostream& out, const RegretCurve& curve) {
  out << "arrival_index,mean_regret,std_err,replications\n";
  for (std::size_t i = 0; i < curve.checkpoints.size(); ++i) {
    out << curve.checkpoints[i] << ',' << format_double(curve.mean_regret[i]) << ','
        << format_double(curve.std_err[i]) << ',' << curve.replications << '\n';
  }
}

void write_certificate_csv(std::ostream& out, const RegretCurve& curve) {
  out << "arrival_index,mean_certificate,mean_regret\n";
  for (std::size_t i = 0; i < curve.checkpoints.size(); ++i) {
    out << curve.checkpoints[i] << ',' << format_double(curve.mean_certificate[i]) << ','
        << format_double(curve.mean_regret[i]) << '\n';
  }
}

RegretCurve read_regret_csv(std::istream& in) {
  static const char* const kColumns[] = {"arrival_index", "mean_regret", "std_err",
                                         "replications"};
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("missing header row");
  {
    std::istringstream header(line);
    std::string name;
    for (const char* expected : kColumns) {
      if (!std::getline(header, name, ',') || name != expected) {
        throw std::runtime_error(std::string("header column mismatch, expected ") + expected);
      }
    }
    if (std::getline(header, name, ',')) throw std::runtime_error("unexpected column " + name);
  }

  RegretCurve curve;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell[4];
    for (int c = 0; c < 4; ++c) {
      if (!std::getline(row, cell[c], ',') || cell[c].empty()) {
        throw std::runtime_error(std::string("missing value in column ") + kColumns[c]);
      }
    }
    try {
      curve.checkpoints.push_back(std::stoll(cell[0]));
      curve.mean_regret.push_back(std::stod(cell[1]));
      curve.std_err.push_back(std::stod(cell[2]));
      curve.replications = std::stoll(cell[3]);
    } catch (const std::logic_error&) {
      throw std::runtime_error("unparsable row: " + line);
    }
  }
  return curve;
}

}  // namespace qadmit
