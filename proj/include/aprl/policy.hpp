#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "aprl/rng.hpp"

namespace aprl {

inline constexpr int kPolicySchemaVersion = 1;
inline constexpr std::size_t kFeatureCount = 17;

// Action-conditioned state features. Index meanings (all finite, [6], [8],
// [9], [10], [13] in [0,1]):
//   [0]  bias, always 1
//   [1]  mean (1 - cv_error) over model nodes under the action's data node
//   [2]  best such value
//   [3]  mean (1 - cv_error) over model nodes of the action's estimator
//   [4]  mean historical gain of the action's transform
//   [5]  best such gain
//   [6]  remaining budget fraction rho
//   [7]  log(1 + total budget seconds) / log(1 + 7200)
//   [8]  log(1 + numeric column count) / log(1 + 1000)
//   [9]  log(1 + categorical column count) / log(1 + 1000)
//   [10] 1 when the dataset carried a datetime column
//   [11] rho * [1]
//   [12] rho * [2]
//   [13] data-node depth / depth cap
//   [14..16] action kind one-hot: transform, estimator, hpo
using StateFeatures = std::array<double, kFeatureCount>;

// Names in schema order; these are the row labels of the policy file.
const std::array<std::string, kFeatureCount>& feature_names();

struct PolicyWeights {
  std::vector<double> w = std::vector<double>(kFeatureCount, 0.0);
  int schema_version = kPolicySchemaVersion;
  double gamma = 0.99;
  double alpha = 0.05;
  double epsilon = 0.2;
  long long training_episodes = 0;
};

// Throws when the fields are outside their legal ranges (weight length,
// gamma in [0,1), alpha > 0, epsilon in [0,1]).
void validate_policy(const PolicyWeights& p);

PolicyWeights zero_policy();

// Hand-set fallback for users without a trained policy file: favors actions
// on strong nodes and transforms with a record of gains, with mild kind
// preferences so cold starts try transforms before estimator refits.
PolicyWeights heuristic_policy();

double q_value(const PolicyWeights& p, const StateFeatures& f);

// One Q-learning step: w += alpha * (r + gamma * next_best_q - Q(f)) * f.
// Terminal transitions bootstrap from 0. Throws when a weight turns
// non-finite, which aborts training as diverged.
void td_update(PolicyWeights& p, const StateFeatures& f, double reward,
               double next_best_q, bool terminal);

// Greedy argmax over candidate action features; ties keep the earliest
// index, so a zero policy walks the enumeration order.
std::size_t select_greedy(const PolicyWeights& p,
                          const std::vector<StateFeatures>& actions);

// With probability epsilon picks uniformly, otherwise greedy.
std::size_t select_epsilon_greedy(const PolicyWeights& p,
                                  const std::vector<StateFeatures>& actions,
                                  double epsilon, Rng& rng);

// Episodic environment driven by the trainer: action_features lists the
// legal actions of the current state (empty means terminal), step takes the
// chosen index and returns the reward.
class QEnvironment {
 public:
  virtual ~QEnvironment() = default;
  virtual void reset(Rng rng) = 0;
  virtual std::vector<StateFeatures> action_features() = 0;
  virtual double step(std::size_t action_index) = 0;
};

struct TrainOptions {
  double alpha = 0.05;
  double gamma = 0.99;
  double epsilon = 0.2;
  long long episodes = 0;
};

// Runs epsilon-greedy Q-learning from zero weights. make_env builds the
// environment for each episode (round-robin over a corpus happens there).
PolicyWeights train_q(
    const std::function<std::unique_ptr<QEnvironment>(long long episode)>& make_env,
    const TrainOptions& options, std::uint64_t seed);

void save_policy(const PolicyWeights& p, const std::string& path);

// Strict parse of the text format; throws on malformed content and on a
// schema version other than the one this build writes.
PolicyWeights load_policy(const std::string& path);

}  // namespace aprl
