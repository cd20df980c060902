#pragma once

// Experiment configuration files.
//
// Flat `key = value` text with one [experiment] section and one or more
// [policy <label>] sections. `lambda`, `mu`, `reward` and `cost` accept
// comma-separated lists; the plan is their cross product times the policies.
// Unknown keys are rejected and all missing required keys are reported at once.

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qadmit/regret.hpp"

namespace qadmit {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct PlanOptions {
  bool full = false;  // use full_arrivals / full_replications when given
  unsigned jobs = 1;
};

struct RunSpec {
  std::string experiment;
  ExperimentConfig config;     // checkpoints resolved to an explicit grid
  std::string genie_text;      // genie key as written (auto, alternating, static:K)
  ResolvedGenie genie;
  ThresholdSolution solution;  // of the true parameters
  std::string file_stem;
};

struct ExperimentPlan {
  std::string name;
  std::vector<RunSpec> runs;
  std::vector<std::string> warnings;
};

ExperimentPlan parse_plan(std::string_view text, const PlanOptions& options = {});
ExperimentPlan load_plan(const std::filesystem::path& path, const PlanOptions& options = {});

/// Single-run config text that reproduces `run` bit for bit.
std::string resolved_config_text(const RunSpec& run);

const char* to_string(AlphaSchedule schedule);
const char* to_string(CapSchedule schedule);
const char* to_string(ExploreSchedule schedule);
const char* to_string(PolicyKind kind);
std::string to_string(const GenieSpec& genie);

}  // namespace qadmit
