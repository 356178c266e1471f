#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "alignmarket/core.hpp"

namespace alignmarket {

// Per-item scores from several agents next to the ground truth, rescaled to
// [0,1] on load via the #scale metadata line.
struct ScoreMatrix {
  std::vector<std::string> items;
  std::vector<double> truth;
  std::vector<std::string> agent_names;
  Matrix scores;       // items x agents
  double scale = 1.0;  // raw values were divided by this

  std::size_t num_items() const { return items.size(); }
  std::size_t num_agents() const { return agent_names.size(); }
  void validate() const;
};

// CSV with a first metadata line "#scale=<max>" and header
// "item,truth,<agent>,...".
ScoreMatrix load_scores(const std::string& path);
void save_scores(const ScoreMatrix& scores, const std::string& path);
ScoreMatrix scores_from_csv(const std::string& text);
std::string scores_to_csv(const ScoreMatrix& scores);

struct NoiseModel {
  enum class Kind { kUniform, kGaussian } kind = Kind::kUniform;
  double param = 0.1;  // half-width for uniform, sigma for gaussian
};

struct GeneratedAgents {
  ScoreMatrix scores;
  std::vector<double> realized_bias;  // per agent, mean(score - truth)
};

// Synthetic agents: truth plus mean-zero noise (uniform half-width, or
// gaussian truncated at 2 sigma), clamped to [0,1].  Clamping can bias the
// realized mean, hence the per-agent bias report.
GeneratedAgents generate_noisy_agents(const std::vector<double>& truth,
                                      int num_agents, NoiseModel model,
                                      std::uint64_t seed);

struct ScalingRecord {
  int k = 0;
  // Held-out metrics: mean/std over permutations of fold-averaged values.
  double best_mse_mean = 0, best_mse_std = 0;
  double avg_mse_mean = 0, avg_mse_std = 0;
  double nnls_mse_mean = 0, nnls_mse_std = 0;
  double simplex_mse_mean = 0, simplex_mse_std = 0;
  double nnls_support_mean = 0, nnls_support_std = 0;
  double simplex_support_mean = 0, simplex_support_std = 0;
  // Training-side means, kept for monotonicity diagnostics.
  double best_train_mse_mean = 0;
  double avg_train_mse_mean = 0;
  double nnls_train_mse_mean = 0;
  double simplex_train_mse_mean = 0;
};

struct ScalingCurve {
  std::vector<int> k_grid;
  int permutations = 0;
  int folds = 0;
  std::uint64_t seed = 0;
  std::vector<ScalingRecord> records;  // one per k, in k_grid order
  // Raw per-(permutation, k) fold-averaged train MSEs, for invariant checks:
  // indexed [perm][k_index].
  std::vector<std::vector<double>> nnls_train_by_perm;
};

// Committee-size sweep: for each agent permutation (seed + p), shuffle items
// once, split into contiguous folds, and for each k fit the first k agents of
// the permuted order on the train folds, scoring everything on the held-out
// fold.  Baselines (best single agent picked on train, uniform average) are
// evaluated on the same splits.
ScalingCurve k_scaling_experiment(const ScoreMatrix& scores,
                                  const std::vector<int>& k_grid,
                                  int permutations, int folds,
                                  std::uint64_t seed);

// Smallest committee size k with  k > (ln(2 A Y) - ln delta) / (2 eps^2).
int hoeffding_committee_size(int num_actions, int num_states, double epsilon,
                             double delta);

// Monte Carlo check of the committee-size rule: draw a random utility table
// in [0,1], give each of k agents a mean-zero perturbation of it (half-width
// capped so the mean is exact), and measure how often the committee average
// strays more than eps from the table anywhere.  Returns the failure rate,
// which the rule promises is at most delta.
double validate_alignment_probability(int num_actions, int num_states,
                                      double epsilon, double delta, int trials,
                                      std::uint64_t seed,
                                      double noise_half_width = 0.5);

}  // namespace alignmarket
