#include "aprl/policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string_view>

#include "aprl/csv.hpp"

namespace aprl {

const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "bias",
      "node_mean_perf",
      "node_best_perf",
      "estimator_mean_perf",
      "transform_mean_gain",
      "transform_best_gain",
      "time_remaining_frac",
      "time_total_norm",
      "numeric_count_norm",
      "categorical_count_norm",
      "has_datetime",
      "rho_x_node_mean",
      "rho_x_node_best",
      "node_depth_frac",
      "kind_transform",
      "kind_estimator",
      "kind_hpo",
  };
  return names;
}

void validate_policy(const PolicyWeights& p) {
  if (p.w.size() != kFeatureCount)
    throw std::invalid_argument("policy weight vector has wrong length");
  if (p.schema_version != kPolicySchemaVersion)
    throw std::invalid_argument("policy schema version mismatch");
  if (!(p.gamma >= 0.0 && p.gamma < 1.0))
    throw std::invalid_argument("policy gamma must lie in [0,1)");
  if (!(p.alpha > 0.0)) throw std::invalid_argument("policy alpha must be positive");
  if (!(p.epsilon >= 0.0 && p.epsilon <= 1.0))
    throw std::invalid_argument("policy epsilon must lie in [0,1]");
  if (p.training_episodes < 0)
    throw std::invalid_argument("policy episode count must be non-negative");
  for (double v : p.w)
    if (!std::isfinite(v)) throw std::invalid_argument("policy weight is not finite");
}

PolicyWeights zero_policy() { return PolicyWeights{}; }

PolicyWeights heuristic_policy() {
  PolicyWeights p;
  p.w[2] = 0.5;    // node_best_perf
  p.w[5] = 0.5;    // transform_best_gain
  p.w[11] = 0.2;   // rho_x_node_mean
  p.w[12] = 0.3;   // rho_x_node_best
  p.w[14] = 0.1;   // kind_transform
  p.w[15] = 0.15;  // kind_estimator
  p.w[16] = 0.05;  // kind_hpo
  return p;
}

double q_value(const PolicyWeights& p, const StateFeatures& f) {
  if (p.w.size() != f.size())
    throw std::invalid_argument("policy weight length does not match features");
  double q = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) q += p.w[i] * f[i];
  return q;
}

void td_update(PolicyWeights& p, const StateFeatures& f, double reward,
               double next_best_q, bool terminal) {
  const double target = terminal ? reward : reward + p.gamma * next_best_q;
  const double delta = target - q_value(p, f);
  for (std::size_t i = 0; i < f.size(); ++i) {
    p.w[i] += p.alpha * delta * f[i];
    if (!std::isfinite(p.w[i]))
      throw std::runtime_error("policy training diverged: weight is not finite");
  }
}

std::size_t select_greedy(const PolicyWeights& p,
                          const std::vector<StateFeatures>& actions) {
  if (actions.empty()) throw std::invalid_argument("no legal actions to select from");
  std::size_t best = 0;
  double best_q = q_value(p, actions[0]);
  for (std::size_t i = 1; i < actions.size(); ++i) {
    double q = q_value(p, actions[i]);
    if (q > best_q) {
      best_q = q;
      best = i;
    }
  }
  return best;
}

std::size_t select_epsilon_greedy(const PolicyWeights& p,
                                  const std::vector<StateFeatures>& actions,
                                  double epsilon, Rng& rng) {
  if (actions.empty()) throw std::invalid_argument("no legal actions to select from");
  if (rng.uniform() < epsilon)
    return static_cast<std::size_t>(rng.below(actions.size()));
  return select_greedy(p, actions);
}

PolicyWeights train_q(
    const std::function<std::unique_ptr<QEnvironment>(long long episode)>& make_env,
    const TrainOptions& options, std::uint64_t seed) {
  if (options.episodes < 0) throw std::invalid_argument("episode count must be non-negative");

  PolicyWeights p = zero_policy();
  p.alpha = options.alpha;
  p.gamma = options.gamma;
  p.epsilon = options.epsilon;
  validate_policy(p);

  Rng root(seed);
  for (long long episode = 0; episode < options.episodes; ++episode) {
    auto env = make_env(episode);
    env->reset(root.split("episode", static_cast<std::uint64_t>(episode)));
    Rng sel = root.split("select", static_cast<std::uint64_t>(episode));

    auto actions = env->action_features();
    while (!actions.empty()) {
      std::size_t chosen = select_epsilon_greedy(p, actions, options.epsilon, sel);
      StateFeatures taken = actions[chosen];
      double reward = env->step(chosen);

      auto next = env->action_features();
      bool terminal = next.empty();
      double next_best_q = 0.0;
      if (!terminal) {
        next_best_q = q_value(p, next[0]);
        for (std::size_t i = 1; i < next.size(); ++i)
          next_best_q = std::max(next_best_q, q_value(p, next[i]));
      }
      td_update(p, taken, reward, next_best_q, terminal);
      actions = std::move(next);
    }
  }
  p.training_episodes = options.episodes;
  return p;
}

namespace {

double parse_policy_double(std::string_view text, const std::string& what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::runtime_error("malformed policy file: bad " + what);
  return value;
}

long long parse_policy_int(std::string_view text, const std::string& what) {
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::runtime_error("malformed policy file: bad " + what);
  return value;
}

// Consumes "key=value" from the front of line (plus one leading space when
// not the first key) and returns the value text.
std::string_view take_kv(std::string_view& line, std::string_view key, bool first) {
  if (!first) {
    if (line.empty() || line.front() != ' ')
      throw std::runtime_error("malformed policy file: missing separator before " +
                               std::string(key));
    line.remove_prefix(1);
  }
  if (line.substr(0, key.size()) != key || line.size() <= key.size() ||
      line[key.size()] != '=')
    throw std::runtime_error("malformed policy file: expected " + std::string(key) + "=");
  line.remove_prefix(key.size() + 1);
  std::size_t end = line.find(' ');
  std::string_view value = end == std::string_view::npos ? line : line.substr(0, end);
  line.remove_prefix(value.size());
  return value;
}

}  // namespace

void save_policy(const PolicyWeights& p, const std::string& path) {
  validate_policy(p);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open policy file for writing: " + path);
  out << "aprl-policy v" << p.schema_version << "\n";
  out << "gamma=" << csv::format_double(p.gamma) << " alpha=" << csv::format_double(p.alpha)
      << " epsilon=" << csv::format_double(p.epsilon) << " episodes=" << p.training_episodes
      << "\n";
  for (std::size_t i = 0; i < kFeatureCount; ++i)
    out << feature_names()[i] << "\t" << csv::format_double(p.w[i]) << "\n";
  if (!out) throw std::runtime_error("failed writing policy file: " + path);
}

PolicyWeights load_policy(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open policy file: " + path);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  if (lines.size() != 2 + kFeatureCount)
    throw std::runtime_error("malformed policy file: expected " +
                             std::to_string(2 + kFeatureCount) + " lines");

  constexpr std::string_view kMagic = "aprl-policy v";
  if (lines[0].substr(0, kMagic.size()) != kMagic)
    throw std::runtime_error("malformed policy file: bad header line");
  long long version = parse_policy_int(
      std::string_view(lines[0]).substr(kMagic.size()), "schema version");
  if (version != kPolicySchemaVersion)
    throw std::runtime_error("policy schema version mismatch: file has v" +
                             std::to_string(version) + ", expected v" +
                             std::to_string(kPolicySchemaVersion));

  PolicyWeights p;
  p.schema_version = static_cast<int>(version);
  std::string_view meta(lines[1]);
  p.gamma = parse_policy_double(take_kv(meta, "gamma", true), "gamma");
  p.alpha = parse_policy_double(take_kv(meta, "alpha", false), "alpha");
  p.epsilon = parse_policy_double(take_kv(meta, "epsilon", false), "epsilon");
  p.training_episodes = parse_policy_int(take_kv(meta, "episodes", false), "episodes");
  if (!meta.empty())
    throw std::runtime_error("malformed policy file: trailing text on metadata line");

  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const std::string& row = lines[2 + i];
    std::size_t tab = row.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error("malformed policy file: feature line without tab");
    if (row.substr(0, tab) != feature_names()[i])
      throw std::runtime_error("malformed policy file: expected feature " +
                               feature_names()[i]);
    p.w[i] = parse_policy_double(std::string_view(row).substr(tab + 1),
                                 "weight for " + feature_names()[i]);
  }
  validate_policy(p);
  return p;
}

}  // namespace aprl
