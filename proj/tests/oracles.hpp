#pragma once

// Reference computations that do not share code with the library: dense
// linear solves of the underlying Markov chains and direct chain simulation.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "qadmit/engine.hpp"
#include "qadmit/naor.hpp"

namespace oracle {

// V(K, y, z) as the finite sum (1/y) * sum_{j<K} (K - j) (z/y)^j.
inline double v_sum(long k, double y, double z) {
  long double total = 0.0L;
  long double power = 1.0L;
  const long double r = static_cast<long double>(z) / y;
  for (long j = 0; j < k; ++j) {
    total += static_cast<long double>(k - j) * power;
    power *= r;
  }
  return static_cast<double>(total / y);
}

// Stationary law of the birth-death generator on {0..k} from the balance
// equations pi Q = 0 with one equation replaced by normalization.
inline std::vector<double> stationary(long k, double lambda, double mu) {
  const long n = k + 1;
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, n);
  for (long i = 0; i < n; ++i) {
    if (i < k) {
      q(i, i + 1) = lambda;
      q(i, i) -= lambda;
    }
    if (i > 0) {
      q(i, i - 1) = mu;
      q(i, i) -= mu;
    }
  }
  Eigen::MatrixXd a = q.transpose();
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::VectorXd pi = a.fullPivLu().solve(b);
  return {pi.data(), pi.data() + n};
}

inline double long_run_profit(long k, double lambda, double mu, double reward, double cost) {
  const auto pi = stationary(k, lambda, mu);
  double mean = 0.0;
  for (long i = 0; i <= k; ++i) mean += static_cast<double>(i) * pi[i];
  return lambda * reward * (1.0 - pi[k]) - cost * mean;
}

// Mean number of jumps to absorption at 0 of the embedded chain on {0..k}
// started at l; an arrival at k is a self-loop. Solves (I - P_T) g = 1.
inline double jump_count(long l, long k, double lambda, double mu) {
  const double up = lambda / (lambda + mu);
  const double down = 1.0 - up;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(k, k);  // states 1..k at rows 0..k-1
  for (long s = 1; s <= k; ++s) {
    const long row = s - 1;
    if (s < k) {
      a(row, row + 1) -= up;
    } else {
      a(row, row) -= up;
    }
    if (s > 1) a(row, row - 1) -= down;
  }
  Eigen::VectorXd g = a.fullPivLu().solve(Eigen::VectorXd::Ones(k));
  return g(l - 1);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe summarize(const std::vector<double>& xs) {
  MeanSe out;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= n;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = xs.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return out;
}

// Direct simulation of the jump chain, independent of the event engine.
inline MeanSe jump_count_mc(long l, long k, double lambda, double mu, int runs,
                            std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::bernoulli_distribution arrival(lambda / (lambda + mu));
  std::vector<double> counts(runs);
  for (int r = 0; r < runs; ++r) {
    long state = l;
    long jumps = 0;
    while (state > 0) {
      ++jumps;
      if (arrival(gen)) {
        if (state < k) ++state;
      } else {
        --state;
      }
    }
    counts[r] = static_cast<double>(jumps);
  }
  return summarize(counts);
}

// Time-average occupancy of a static threshold-k queue driven by the engine.
inline std::vector<double> simulated_occupancy(long k, double lambda, double mu, long events,
                                               std::uint64_t seed) {
  qadmit::ModelParams params{lambda, mu, 1.0, 1.0};
  qadmit::EventGenerator source(params, seed);
  qadmit::SystemState state;
  std::vector<double> time_in(k + 1, 0.0);
  double clock = 0.0;
  for (long e = 0; e < events; ++e) {
    const qadmit::Event ev = source.next();
    time_in[state.queue_len] += ev.time - clock;
    clock = ev.time;
    std::optional<bool> admit;
    if (ev.kind == qadmit::EventKind::Arrival) admit = state.queue_len < k;
    qadmit::apply_event(state, ev, admit);
  }
  for (double& t : time_in) t /= clock;
  return time_in;
}

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double tv = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return 0.5 * tv;
}

}  // namespace oracle
