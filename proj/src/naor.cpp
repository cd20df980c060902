#include "qadmit/naor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qadmit {

namespace {

void require_rate(double rate, const char* name) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw DomainError(std::string(name) + " must be a finite positive rate");
  }
}

bool within_tie(double value, double target) {
  return std::abs(value - target) <= kTieTolerance * std::abs(target);
}

}  // namespace

void ModelParams::validate() const {
  require_rate(lambda, "lambda");
  require_rate(mu, "mu");
  require_rate(reward, "reward");
  require_rate(cost, "cost");
}

bool rates_equal(double y, double z) {
  return std::abs(y - z) <= kEqualRateBand * std::max(y, z);
}

namespace {

// expm1(u) - u, accurate for small |u|.
double expm1_minus_arg(double u) {
  if (std::abs(u) >= 0.1) return std::expm1(u) - u;
  double term = u * u / 2.0;
  double sum = term;
  for (int n = 3; std::abs(term) > 1e-18 * std::abs(sum); ++n) {
    term *= u / n;
    sum += term;
  }
  return sum;
}

}  // namespace

double v_function(Threshold k, double y, double z) {
  require_rate(y, "y");
  require_rate(z, "z");
  if (k < 0) throw DomainError("threshold must be nonnegative");
  if (k == 0) return 0.0;

  const auto kd = static_cast<double>(k);
  if (rates_equal(y, z)) return kd * (kd + 1.0) / (2.0 * y);

  // x = ln(z / y); z - y is exact when the rates are close.
  const double x = std::log1p((z - y) / y);
  if (std::abs(x) < 0.5) {
    // With r = e^x the numerator K(1 - r) - r(1 - r^K) equals
    // psi(Kx) - K psi(x) + expm1(x) expm1(Kx), every term O(x^2).
    const double e1 = std::expm1(x);
    const double numerator =
        expm1_minus_arg(kd * x) - kd * expm1_minus_arg(x) + e1 * std::expm1(kd * x);
    return numerator / (e1 * e1) / y;
  }
  // 1 - (z/y)^K without losing digits when z/y is close to 1.
  const double one_minus_power = -std::expm1(kd * x);
  const double diff = y - z;
  return (kd * diff - z * one_minus_power) / (diff * diff);
}

double v_function_alt(Threshold k, double y, double z) {
  require_rate(y, "y");
  require_rate(z, "z");
  if (k < 1) throw DomainError("stationary form of V needs K >= 1");

  const StationaryProfile upper = stationary_profile(k, y, z);
  const StationaryProfile lower = stationary_profile(k - 1, y, z);
  const auto kd = static_cast<double>(k);

  // E_{K-1} - E_K = -p^K_K (K - E_{K-1}) and
  // p^K_K - p^{K-1}_{K-1} = -p^K_0 p^{K-1}_{K-1}; both are exact and avoid
  // subtracting nearly equal stationary quantities.
  const double len_drop = -upper.probs.back() * (kd - lower.expected_len);
  const double top_gain = -upper.probs.front() * lower.probs.back();
  return len_drop / top_gain / z;
}

StationaryProfile stationary_profile(Threshold k, double y, double z) {
  require_rate(y, "y");
  require_rate(z, "z");
  if (k < 0) throw DomainError("threshold must be nonnegative");

  StationaryProfile profile;
  profile.threshold = k;
  profile.probs.resize(static_cast<std::size_t>(k) + 1);

  const double ratio = z / y;
  if (rates_equal(y, z)) {
    std::fill(profile.probs.begin(), profile.probs.end(), 1.0);
  } else if (ratio < 1.0) {
    double w = 1.0;
    for (auto& p : profile.probs) {
      p = w;
      w *= ratio;
    }
  } else {
    // Anchor at the top state so large K with ratio > 1 cannot overflow.
    double w = 1.0;
    for (auto it = profile.probs.rbegin(); it != profile.probs.rend(); ++it) {
      *it = w;
      w /= ratio;
    }
  }

  double total = 0.0;
  for (double p : profile.probs) total += p;
  double mean = 0.0;
  for (std::size_t i = 0; i < profile.probs.size(); ++i) {
    profile.probs[i] /= total;
    mean += static_cast<double>(i) * profile.probs[i];
  }
  profile.expected_len = mean;
  return profile;
}

StationaryProfile stationary_distribution(Threshold k, const ModelParams& params) {
  params.validate();
  return stationary_profile(k, params.mu, params.lambda);
}

Threshold bracket_threshold(double y, double z, double ratio, Threshold cap) {
  require_rate(y, "y");
  require_rate(z, "z");
  if (!(ratio > 0.0)) throw DomainError("reward/cost ratio must be positive");
  if (cap <= 0) return 0;

  // Invariant: V(lo) <= ratio < V(hi).
  Threshold lo = 0;
  Threshold hi = 1;
  while (v_function(hi, y, z) <= ratio) {
    lo = hi;
    if (hi >= cap) return cap;
    hi = std::min(cap, hi * 2);
  }
  while (hi - lo > 1) {
    const Threshold mid = lo + (hi - lo) / 2;
    if (v_function(mid, y, z) <= ratio) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

Threshold bracket_threshold_near(double y, double z, double ratio, Threshold hint,
                                 Threshold cap) {
  require_rate(y, "y");
  require_rate(z, "z");
  if (!(ratio > 0.0)) throw DomainError("reward/cost ratio must be positive");
  if (cap <= 0) return 0;
  hint = std::clamp<Threshold>(hint, 0, cap);

  Threshold lo;
  Threshold hi;
  if (v_function(hint, y, z) <= ratio) {
    lo = hint;
    Threshold step = 1;
    for (;;) {
      if (lo >= cap) return cap;
      hi = std::min(cap, lo + step);
      if (v_function(hi, y, z) > ratio) break;
      if (hi == cap) return cap;
      lo = hi;
      step *= 2;
    }
  } else {
    hi = hint;
    Threshold step = 1;
    for (;;) {
      lo = std::max<Threshold>(0, hi - step);
      if (v_function(lo, y, z) <= ratio) break;
      hi = lo;
      step *= 2;
    }
  }
  while (hi - lo > 1) {
    const Threshold mid = lo + (hi - lo) / 2;
    if (v_function(mid, y, z) <= ratio) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

ThresholdSolution solve_threshold(const ModelParams& params) {
  params.validate();
  const double ratio = params.reward_cost_ratio();

  ThresholdSolution solution;
  solution.k_bar = bracket_threshold(params.mu, params.lambda, ratio);
  if (within_tie(v_function(solution.k_bar + 1, params.mu, params.lambda), ratio)) {
    ++solution.k_bar;
  }
  solution.unique =
      solution.k_bar == 0 || !within_tie(v_function(solution.k_bar, params.mu, params.lambda), ratio);
  if (solution.unique) {
    solution.optimal_set = {solution.k_bar};
  } else {
    solution.optimal_set = {solution.k_bar - 1, solution.k_bar};
  }
  return solution;
}

double long_run_profit(Threshold k, const ModelParams& params) {
  const StationaryProfile profile = stationary_distribution(k, params);
  return params.lambda * params.reward * (1.0 - profile.probs.back()) -
         params.cost * profile.expected_len;
}

double busy_cycle_arrival_mean(Threshold l, Threshold k, const ModelParams& params) {
  params.validate();
  if (l < 1 || l > k) throw DomainError("busy cycle start state must satisfy 1 <= l <= k");

  const auto ld = static_cast<double>(l);
  const auto kd = static_cast<double>(k);
  if (rates_equal(params.lambda, params.mu)) return ld * (2.0 * kd - ld + 1.0);

  const double rho = params.load();
  const double gap = rho - 1.0;
  const double head = std::pow(rho, kd - ld + 1.0) * std::expm1(ld * std::log(rho));
  return (1.0 + rho) / gap * (head / gap - ld);
}

std::string to_string(const ThresholdSolution& solution) {
  std::ostringstream out;
  out << "k_bar=" << solution.k_bar << (solution.unique ? " unique" : " tied") << " optimal_set={";
  for (std::size_t i = 0; i < solution.optimal_set.size(); ++i) {
    if (i) out << ',';
    out << solution.optimal_set[i];
  }
  out << '}';
  return out.str();
}

}  // namespace qadmit
