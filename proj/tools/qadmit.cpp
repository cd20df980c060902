// qadmit: threshold solver and regret experiments for learning admission control.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qadmit/config.hpp"
#include "qadmit/naor.hpp"
#include "qadmit/regret.hpp"

namespace fs = std::filesystem;
using namespace qadmit;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitValidation = 3;
constexpr int kExitRuntime = 4;

struct Options {
  double lambda = 0, mu = 0, reward = 0, cost = 0;
  std::string config_path;
  std::string out_dir;
  unsigned jobs = 1;
  bool full = false;
  bool quiet = false;
  long long rep = 0;
  std::string trace_path;
};

int cmd_threshold(const Options& o) {
  const ModelParams params{o.lambda, o.mu, o.reward, o.cost};
  try {
    params.validate();
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  const ThresholdSolution solution = solve_threshold(params);
  std::cout << "K_bar = " << solution.k_bar << (solution.unique ? " (unique)" : " (tie)") << '\n';
  std::cout << "optimal set = {";
  for (std::size_t i = 0; i < solution.optimal_set.size(); ++i) {
    std::cout << (i ? ", " : "") << solution.optimal_set[i];
  }
  std::cout << "}\n";
  std::cout << "R/C = " << format_double(params.reward_cost_ratio()) << '\n';
  std::cout << "k,V\n";
  for (Threshold k = 0; k <= solution.k_bar + 2; ++k) {
    std::cout << k << ',' << format_double(v_function(k, params.mu, params.lambda)) << '\n';
  }
  return 0;
}

void print_warnings(const ExperimentPlan& plan) {
  for (const auto& w : plan.warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_validate(const Options& o) {
  const ExperimentPlan plan = load_plan(o.config_path, {o.full, o.jobs});
  print_warnings(plan);
  std::cout << "OK " << plan.name << ": " << plan.runs.size() << " run(s)\n";
  for (const RunSpec& run : plan.runs) {
    std::cout << "\n# " << run.file_stem << "  K_bar=" << run.solution.k_bar
              << (run.solution.unique ? " unique" : " tie") << ", genie="
              << (run.genie.kind == GenieKind::Alternating ? "alternating" : "static:") ;
    if (run.genie.kind != GenieKind::Alternating) std::cout << run.genie.k;
    std::cout << '\n' << resolved_config_text(run);
  }
  return 0;
}

fs::path output_dir(const Options& o) {
  if (!o.out_dir.empty()) return o.out_dir;
  if (const char* env = std::getenv("QADMIT_OUTPUT_DIR"); env && *env) return env;
  return "results";
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

int cmd_experiment(const Options& o) {
  const ExperimentPlan plan = load_plan(o.config_path, {o.full, o.jobs});
  print_warnings(plan);
  const fs::path dir = output_dir(o);
  fs::create_directories(dir);

  for (const RunSpec& run : plan.runs) {
    const auto start = std::chrono::steady_clock::now();
    const Count reps = run.config.replications;
    auto progress = [&](Count done) {
      if (!o.quiet) std::fprintf(stderr, "\r%s: %lld/%lld", run.file_stem.c_str(),
                                 static_cast<long long>(done), static_cast<long long>(reps));
    };
    const RegretCurve curve = run_experiment(run.config, progress);
    if (!o.quiet) std::fprintf(stderr, "\n");
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    const fs::path regret_path = dir / (run.file_stem + ".csv");
    const fs::path cert_path = dir / (run.file_stem + ".certificate.csv");
    const fs::path cfg_path = dir / (run.file_stem + ".cfg");
    {
      std::ofstream out(regret_path, std::ios::binary);
      write_regret_csv(out, curve);
      if (!out) throw std::runtime_error("cannot write " + regret_path.string());
    }
    {
      std::ofstream out(cert_path, std::ios::binary);
      write_certificate_csv(out, curve);
      if (!out) throw std::runtime_error("cannot write " + cert_path.string());
    }
    const std::string resolved = resolved_config_text(run);
    write_file(cfg_path, resolved);

    nlohmann::ordered_json manifest;
    manifest["config_path"] = fs::absolute(o.config_path).string();
    manifest["output_dir"] = fs::absolute(dir).string();
    manifest["resolved_config"] = resolved;
    manifest["base_seed"] = run.config.base_seed;
    manifest["version"] = QADMIT_VERSION;
    manifest["duration_seconds"] = seconds;
    manifest["policy"] = run.config.policy.label;
    manifest["genie"] = {{"requested", run.genie_text},
                         {"kind", run.genie.kind == GenieKind::Alternating ? "alternating" : "static"},
                         {"k", run.genie.k},
                         {"degraded", run.genie.degraded}};
    manifest["k_bar"] = run.solution.k_bar;
    manifest["k_bar_unique"] = run.solution.unique;
    manifest["genie_profit_rate"] = curve.mean_genie_profit_rate;
    manifest["files"] = {regret_path.filename().string(), cert_path.filename().string(),
                         cfg_path.filename().string()};
    write_file(dir / (run.file_stem + ".manifest.json"), manifest.dump(2) + "\n");

    std::cout << regret_path.string() << "  regret(N)=" << format_double(curve.mean_regret.back())
              << " +- " << format_double(curve.std_err.back()) << '\n';
  }
  return 0;
}

int cmd_simulate(const Options& o) {
  const ExperimentPlan plan = load_plan(o.config_path, {o.full, 1});
  print_warnings(plan);
  if (plan.runs.size() != 1) {
    std::cerr << "error: simulate needs a config with exactly one run, got " << plan.runs.size()
              << '\n';
    return kExitValidation;
  }
  const RunSpec& run = plan.runs.front();
  if (o.rep < 0 || o.rep >= run.config.replications) {
    std::cerr << "error: --rep must lie in [0, " << run.config.replications << ")\n";
    return kExitUsage;
  }
  std::ofstream trace;
  std::function<void(Count, const Event&, std::span<const SystemState>)> on_event;
  const std::vector<std::string> names{run.config.policy.label, "genie"};
  if (!o.trace_path.empty()) {
    trace.open(o.trace_path, std::ios::binary);
    if (!trace) throw std::runtime_error("cannot write " + o.trace_path);
    on_event = trace_csv_observer(trace, names).on_event;
  }
  const ReplicationResult result = run_replication(run.config, o.rep, on_event);
  std::cout << "arrivals = " << run.config.n_arrivals << '\n'
            << "end_time = " << format_double(result.end_time) << '\n'
            << "genie_profit = " << format_double(result.genie_profit) << '\n'
            << "learner_profit = " << format_double(result.learner_profit) << '\n'
            << "regret = " << format_double(result.difference.back()) << '\n'
            << "certificate = " << format_double(result.certificate.back()) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Threshold solver and regret experiments for learning admission control", "qadmit"};
  app.set_version_flag("--version", QADMIT_VERSION);
  app.require_subcommand(1);
  Options o;

  auto* threshold = app.add_subcommand("threshold", "Solve the optimal threshold for known rates");
  threshold->add_option("--lambda", o.lambda, "arrival rate")->required();
  threshold->add_option("--mu", o.mu, "service rate")->required();
  threshold->add_option("--reward", o.reward, "reward per admitted customer")->required();
  threshold->add_option("--cost", o.cost, "holding cost per unit time")->required();

  auto* experiment = app.add_subcommand("experiment", "Run a regret experiment from a config file");
  experiment->add_option("config", o.config_path, "config file")->required();
  experiment->add_option("--out", o.out_dir, "output directory (default $QADMIT_OUTPUT_DIR or ./results)");
  experiment->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
  experiment->add_flag("--full", o.full, "use full_arrivals / full_replications");
  experiment->add_flag("--quiet", o.quiet, "no progress output");

  auto* validate = app.add_subcommand("validate", "Check a config and print the resolved values");
  validate->add_option("config", o.config_path, "config file")->required();
  validate->add_flag("--full", o.full, "use full_arrivals / full_replications");

  auto* simulate = app.add_subcommand("simulate", "Run one seeded replication");
  simulate->add_option("config", o.config_path, "config file")->required();
  simulate->add_option("--rep", o.rep, "replication index");
  simulate->add_option("--trace", o.trace_path, "write an event trace CSV");
  simulate->add_flag("--full", o.full, "use full_arrivals / full_replications");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*threshold) return cmd_threshold(o);
    if (*experiment) return cmd_experiment(o);
    if (*validate) return cmd_validate(o);
    if (*simulate) return cmd_simulate(o);
  } catch (const ConfigError& e) {
    for (const auto& problem : e.problems()) std::cerr << "error: " << problem << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
