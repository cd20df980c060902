#include "qadmit/config.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace qadmit {

namespace {

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> items;
  std::stringstream in(value);
  std::string item;
  while (std::getline(in, item, ',')) items.push_back(trim(item));
  return items;
}

std::string short_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", value);
  return buf;
}

struct Section {
  std::string kind;   // "experiment" or "policy"
  std::string label;  // policy label
  std::map<std::string, std::string> entries;
  std::set<std::string> used;
};

// Collects every problem before failing so users see them all at once.
class Reader {
 public:
  explicit Reader(Section& section, std::vector<std::string>& problems)
      : section_(section), problems_(problems) {}

  std::optional<std::string> raw(const std::string& key) {
    section_.used.insert(key);
    const auto it = section_.entries.find(key);
    if (it == section_.entries.end()) return std::nullopt;
    return it->second;
  }

  std::optional<double> real(const std::string& key) {
    auto text = raw(key);
    if (!text) return std::nullopt;
    return parse_real(key, *text);
  }

  std::optional<long long> integer(const std::string& key) {
    auto text = raw(key);
    if (!text) return std::nullopt;
    return parse_integer(key, *text);
  }

  std::optional<double> parse_real(const std::string& key, const std::string& text) {
    errno = 0;
    char* end = nullptr;
    const double value = std::strtod(text.c_str(), &end);
    if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
      problem(key + ": expected a number, got '" + text + "'");
      return std::nullopt;
    }
    return value;
  }

  std::optional<long long> parse_integer(const std::string& key, const std::string& text) {
    errno = 0;
    char* end = nullptr;
    const long long value = std::strtoll(text.c_str(), &end, 10);
    if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE) {
      problem(key + ": expected an integer, got '" + text + "'");
      return std::nullopt;
    }
    return value;
  }

  void problem(const std::string& message) {
    problems_.push_back(where() + message);
  }

  void reject_unused() {
    for (const auto& [key, value] : section_.entries) {
      if (!section_.used.count(key)) problem("unknown key '" + key + "'");
    }
  }

  std::string where() const {
    return section_.kind == "policy" ? "[policy " + section_.label + "] " : "[experiment] ";
  }

 private:
  Section& section_;
  std::vector<std::string>& problems_;
};

std::vector<Section> split_sections(std::string_view text, std::vector<std::string>& problems) {
  std::vector<Section> sections;
  std::istringstream in{std::string(text)};
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    const std::string at = "line " + std::to_string(number) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.push_back(at + "unterminated section header");
        continue;
      }
      std::istringstream header(line.substr(1, line.size() - 2));
      Section section;
      header >> section.kind >> section.label;
      std::string extra;
      if (section.kind == "experiment" && section.label.empty()) {
        sections.push_back(std::move(section));
      } else if (section.kind == "policy" && !section.label.empty() && !(header >> extra)) {
        sections.push_back(std::move(section));
      } else {
        problems.push_back(at + "unknown section '" + line + "'");
        sections.push_back(Section{"ignored", {}, {}, {}});
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back(at + "expected 'key = value'");
      continue;
    }
    if (sections.empty()) {
      problems.push_back(at + "key outside of any section");
      continue;
    }
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (!sections.back().entries.emplace(key, value).second) {
      problems.push_back(at + "duplicate key '" + key + "'");
    }
  }
  return sections;
}

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(Reader& reader, const std::string& key,
                           const std::pair<const char*, Enum> (&table)[N]) {
  const auto text = reader.raw(key);
  if (!text) return std::nullopt;
  std::vector<std::string> names;
  for (const auto& [name, value] : table) {
    if (*text == name) return value;
    names.emplace_back(name);
  }
  reader.problem(key + ": expected one of " + join(names, ", ") + ", got '" + *text + "'");
  return std::nullopt;
}

constexpr std::pair<const char*, AlphaSchedule> kAlphaNames[] = {
    {"linear", AlphaSchedule::Linear},
    {"sqrt", AlphaSchedule::Sqrt},
    {"log", AlphaSchedule::Log},
    {"constant", AlphaSchedule::Constant}};
constexpr std::pair<const char*, CapSchedule> kCapNames[] = {{"log", CapSchedule::Log},
                                                             {"sqrt", CapSchedule::Sqrt},
                                                             {"linear", CapSchedule::Linear},
                                                             {"none", CapSchedule::None}};
constexpr std::pair<const char*, ExploreSchedule> kExploreNames[] = {
    {"log_eps", ExploreSchedule::LogPowOverJ},
    {"log4_j2", ExploreSchedule::Log4OverJ2},
    {"always", ExploreSchedule::Always}};
constexpr std::pair<const char*, PolicyKind> kPolicyNames[] = {{"alg1", PolicyKind::Alg1},
                                                               {"eto", PolicyKind::Eto},
                                                               {"ucb", PolicyKind::Ucb},
                                                               {"static", PolicyKind::Static}};

template <typename Enum, std::size_t N>
const char* name_of(Enum value, const std::pair<const char*, Enum> (&table)[N]) {
  for (const auto& [name, v] : table) {
    if (v == value) return name;
  }
  return "?";
}

std::optional<PolicySpec> read_policy(Section& section, std::vector<std::string>& problems) {
  Reader reader(section, problems);
  const std::size_t before = problems.size();
  PolicySpec spec;
  spec.label = section.label;
  const auto kind = lookup(reader, "type", kPolicyNames);
  if (!kind) {
    if (problems.size() == before) reader.problem("missing required key: type");
    reader.reject_unused();
    return std::nullopt;
  }
  spec.kind = *kind;
  switch (spec.kind) {
    case PolicyKind::Alg1: {
      if (auto v = reader.integer("l1")) spec.learner.l1 = *v;
      if (auto v = reader.integer("l2")) spec.learner.l2 = *v;
      if (auto v = reader.real("epsilon")) spec.learner.epsilon = *v;
      if (auto v = lookup(reader, "alpha", kAlphaNames)) spec.learner.alpha = *v;
      if (auto v = lookup(reader, "kstar", kCapNames)) spec.learner.cap = *v;
      if (auto v = lookup(reader, "explore", kExploreNames)) spec.learner.explore = *v;
      if (spec.learner.l1 < 1) reader.problem("l1 must be at least 1");
      if (spec.learner.l2 < 1) reader.problem("l2 must be at least 1");
      if (!(spec.learner.epsilon > 0.0)) reader.problem("epsilon must be positive");
      break;
    }
    case PolicyKind::Eto:
      if (auto v = reader.integer("m")) spec.eto_budget = *v;
      if (spec.eto_budget < 0) reader.problem("m must be nonnegative");
      break;
    case PolicyKind::Ucb:
      if (auto v = reader.real("confidence")) spec.ucb.confidence = *v;
      if (auto v = reader.real("m_floor")) spec.ucb.m_floor = *v;
      if (!(spec.ucb.confidence > 0.0)) reader.problem("confidence must be positive");
      if (!(spec.ucb.m_floor > 0.0)) reader.problem("m_floor must be positive");
      break;
    case PolicyKind::Static:
      if (auto v = reader.integer("k")) {
        spec.static_threshold = *v;
      } else {
        reader.problem("missing required key: k");
      }
      if (spec.static_threshold < 0) reader.problem("k must be nonnegative");
      break;
  }
  reader.reject_unused();
  if (problems.size() != before) return std::nullopt;
  return spec;
}

std::optional<GenieSpec> parse_genie(Reader& reader, const std::string& text) {
  if (text == "auto") return GenieSpec{GenieKind::Auto, 0};
  if (text == "alternating") return GenieSpec{GenieKind::Alternating, 0};
  if (text.rfind("static:", 0) == 0) {
    if (auto k = reader.parse_integer("genie", text.substr(7))) {
      if (*k >= 0) return GenieSpec{GenieKind::Static, *k};
    }
  }
  reader.problem("genie: expected auto, alternating or static:K, got '" + text + "'");
  return std::nullopt;
}

std::string sanitize(std::string text) {
  for (char& c : text) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '.' && c != '-') c = '_';
  }
  return text;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid config: " + join(problems, "; ")),
      problems_(std::move(problems)) {}

ExperimentPlan parse_plan(std::string_view text, const PlanOptions& options) {
  std::vector<std::string> problems;
  std::vector<Section> sections = split_sections(text, problems);

  Section* experiment = nullptr;
  std::vector<PolicySpec> policies;
  std::set<std::string> labels;
  for (auto& section : sections) {
    if (section.kind == "experiment") {
      if (experiment) {
        problems.push_back("duplicate [experiment] section");
        continue;
      }
      experiment = &section;
    } else if (section.kind == "policy") {
      if (!labels.insert(section.label).second) {
        problems.push_back("duplicate [policy " + section.label + "] section");
        continue;
      }
      if (auto spec = read_policy(section, problems)) policies.push_back(std::move(*spec));
    }
  }
  if (!experiment) {
    problems.push_back("missing [experiment] section");
    throw ConfigError(std::move(problems));
  }
  if (labels.empty()) problems.push_back("at least one [policy <label>] section is required");

  Reader reader(*experiment, problems);
  std::vector<std::string> missing;
  auto required = [&](const char* key) {
    auto value = reader.raw(key);
    if (!value) missing.emplace_back(key);
    return value;
  };

  ExperimentPlan plan;
  const auto name = required("name");
  auto list_of = [&](const char* key) {
    std::vector<double> values;
    if (auto text = required(key)) {
      for (const auto& item : split_list(*text)) {
        if (auto v = reader.parse_real(key, item)) {
          if (!(*v > 0.0)) {
            reader.problem(std::string(key) + ": must be positive");
          } else {
            values.push_back(*v);
          }
        }
      }
    }
    return values;
  };
  const std::vector<double> lambdas = list_of("lambda");
  const std::vector<double> mus = list_of("mu");
  const std::vector<double> rewards = list_of("reward");
  const std::vector<double> costs = list_of("cost");

  auto required_integer = [&](const char* key) -> std::optional<long long> {
    auto text = required(key);
    if (!text) return std::nullopt;
    return reader.parse_integer(key, *text);
  };
  auto arrivals = required_integer("arrivals");
  auto replications = required_integer("replications");
  const auto seed = required_integer("seed");
  const auto full_arrivals = reader.integer("full_arrivals");
  const auto full_replications = reader.integer("full_replications");
  const auto checkpoint_count = reader.integer("checkpoints");
  const auto checkpoint_list = reader.raw("checkpoint_list");
  const auto initial_queue = reader.integer("initial_queue");
  const auto genie_text = reader.raw("genie").value_or("auto");
  const auto genie = parse_genie(reader, genie_text);
  reader.reject_unused();

  if (!missing.empty()) reader.problem("missing required keys: " + join(missing, ", "));
  if (name && (name->empty() || name->find_first_of(" /\\\t") != std::string::npos)) {
    reader.problem("name must be a nonempty token without spaces or slashes");
  }
  if (options.full) {
    if (full_arrivals) arrivals = full_arrivals;
    if (full_replications) replications = full_replications;
  }
  if (arrivals && *arrivals < 1) reader.problem("arrivals must be at least 1");
  if (replications && *replications < 1) reader.problem("replications must be at least 1");
  if (seed && *seed < 0) reader.problem("seed must be nonnegative");
  if (initial_queue && *initial_queue < 0) reader.problem("initial_queue must be nonnegative");
  if (checkpoint_count && *checkpoint_count < 1) reader.problem("checkpoints must be at least 1");
  if (checkpoint_count && checkpoint_list) {
    reader.problem("checkpoints and checkpoint_list are mutually exclusive");
  }

  std::vector<Count> grid;
  if (checkpoint_list) {
    for (const auto& item : split_list(*checkpoint_list)) {
      if (auto v = reader.parse_integer("checkpoint_list", item)) grid.push_back(*v);
    }
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (grid[i] < 1 || (arrivals && grid[i] > *arrivals) || (i && grid[i] <= grid[i - 1])) {
        reader.problem("checkpoint_list must be strictly increasing within [1, arrivals]");
        break;
      }
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));

  if (!checkpoint_list) {
    grid = geometric_checkpoints(*arrivals, static_cast<std::size_t>(checkpoint_count.value_or(200)));
  }

  plan.name = *name;
  for (double lambda : lambdas) {
    for (double mu : mus) {
      for (double reward : rewards) {
        for (double cost : costs) {
          for (const PolicySpec& policy : policies) {
            RunSpec run;
            run.experiment = plan.name;
            run.genie_text = genie_text;
            ExperimentConfig& config = run.config;
            config.params = {lambda, mu, reward, cost};
            config.policy = policy;
            config.genie = *genie;
            config.n_arrivals = *arrivals;
            config.replications = *replications;
            config.checkpoints = grid;
            config.base_seed = static_cast<std::uint64_t>(*seed);
            config.initial_queue_len = initial_queue.value_or(0);
            config.policy.learner.initial_queue_len = config.initial_queue_len;
            config.jobs = std::max(1u, options.jobs);
            config.validate();
            run.solution = solve_threshold(config.params);
            run.genie = resolve_genie(config);
            if (run.genie.degraded) {
              plan.warnings.push_back("alternating genie requested but the optimal threshold is unique "
                                      "for lambda=" + short_double(lambda) + " mu=" + short_double(mu) +
                                      "; using static:" + std::to_string(run.genie.k));
            }
            run.file_stem = plan.name + "__" + sanitize(policy.label);
            run.file_stem += "__lambda" + sanitize(short_double(lambda)) + "_mu" +
                             sanitize(short_double(mu)) + "_R" + sanitize(short_double(reward)) +
                             "_C" + sanitize(short_double(cost));
            plan.runs.push_back(std::move(run));
          }
        }
      }
    }
  }
  return plan;
}

ExperimentPlan load_plan(const std::filesystem::path& path, const PlanOptions& options) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot read config file " + path.string()});
  std::ostringstream text;
  text << in.rdbuf();
  return parse_plan(text.str(), options);
}

std::string resolved_config_text(const RunSpec& run) {
  const ExperimentConfig& c = run.config;
  std::ostringstream out;
  out << "[experiment]\n"
      << "name = " << run.experiment << '\n'
      << "lambda = " << format_double(c.params.lambda) << '\n'
      << "mu = " << format_double(c.params.mu) << '\n'
      << "reward = " << format_double(c.params.reward) << '\n'
      << "cost = " << format_double(c.params.cost) << '\n'
      << "arrivals = " << c.n_arrivals << '\n'
      << "replications = " << c.replications << '\n'
      << "seed = " << c.base_seed << '\n'
      << "initial_queue = " << c.initial_queue_len << '\n'
      << "genie = " << to_string(c.genie) << '\n'
      << "checkpoint_list = ";
  for (std::size_t i = 0; i < c.checkpoints.size(); ++i) {
    if (i) out << ", ";
    out << c.checkpoints[i];
  }
  out << "\n\n[policy " << c.policy.label << "]\n"
      << "type = " << to_string(c.policy.kind) << '\n';
  switch (c.policy.kind) {
    case PolicyKind::Alg1:
      out << "l1 = " << c.policy.learner.l1 << '\n'
          << "l2 = " << c.policy.learner.l2 << '\n'
          << "epsilon = " << format_double(c.policy.learner.epsilon) << '\n'
          << "alpha = " << to_string(c.policy.learner.alpha) << '\n'
          << "kstar = " << to_string(c.policy.learner.cap) << '\n'
          << "explore = " << to_string(c.policy.learner.explore) << '\n';
      break;
    case PolicyKind::Eto:
      out << "m = " << c.policy.eto_budget << '\n';
      break;
    case PolicyKind::Ucb:
      out << "confidence = " << format_double(c.policy.ucb.confidence) << '\n'
          << "m_floor = " << format_double(c.policy.ucb.m_floor) << '\n';
      break;
    case PolicyKind::Static:
      out << "k = " << c.policy.static_threshold << '\n';
      break;
  }
  return out.str();
}

const char* to_string(AlphaSchedule schedule) { return name_of(schedule, kAlphaNames); }
const char* to_string(CapSchedule schedule) { return name_of(schedule, kCapNames); }
const char* to_string(ExploreSchedule schedule) { return name_of(schedule, kExploreNames); }
const char* to_string(PolicyKind kind) { return name_of(kind, kPolicyNames); }

std::string to_string(const GenieSpec& genie) {
  switch (genie.kind) {
    case GenieKind::Auto:
      return "auto";
    case GenieKind::Alternating:
      return "alternating";
    case GenieKind::Static:
      return "static:" + std::to_string(genie.k);
  }
  return "auto";
}

}  // namespace qadmit
