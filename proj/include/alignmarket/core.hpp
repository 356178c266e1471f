#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "alignmarket/errors.hpp"

namespace alignmarket {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense row-major matrix.  Small enough here that nothing fancier is needed.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rws);

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data[r * cols + c];
  }
  std::vector<std::vector<double>> to_rows() const;
  bool same_shape(const Matrix& o) const {
    return rows == o.rows && cols == o.cols;
  }
};

using BeliefVector = std::vector<double>;

// Tolerances used across the library.
inline constexpr double kInputTolerance = 1e-12;    // file/argument validation
inline constexpr double kComputeTolerance = 1e-9;   // derived quantities
inline constexpr double kKktTolerance = 1e-8;       // LP & fit optimality
inline constexpr double kSparsityThreshold = 1e-6;  // support counting

// One persuasion problem: states under a common prior, a shared action set,
// the receiver's utility ("alice") and one utility matrix per advisor
// ("bobs").  Utilities are indexed [state][action].
struct PersuasionInstance {
  std::vector<std::string> states;
  std::vector<std::string> actions;
  std::vector<double> prior;  // over states
  Matrix alice_utility;       // states x actions
  std::vector<std::string> bob_names;
  std::vector<Matrix> bob_utilities;

  std::size_t num_states() const { return states.size(); }
  std::size_t num_actions() const { return actions.size(); }
  std::size_t num_bobs() const { return bob_names.size(); }

  // Throws InvariantError / DimensionError.  Utilities must be finite and
  // non-negative; they are conventionally in [0,1] but the classic two-sided
  // advocacy example uses a 0..2 scale, so no upper bound is enforced.
  void validate() const;
};

// Row-stochastic map from states to messages.
struct SignalingScheme {
  Matrix rows;  // states x messages

  std::size_t message_count() const { return rows.cols; }

  // Deterministic scheme: state s emits message action_map[s] with prob 1.
  static SignalingScheme deterministic(const std::vector<int>& action_map,
                                       std::size_t message_count);

  // Throws InvariantError if a row is not a distribution (1e-12 tolerance),
  // DimensionError on state-count mismatch.
  void validate(std::size_t num_states) const;
};

// How the receiver treats a message.
enum class ReceiverMode {
  kObedient,              // message indexes an action, played as-is
  kPosteriorBestResponse  // Bayes update, then lowest-index argmax action
};

// Bayes posterior over states after observing `message`.
// Throws ZeroProbabilityMessageError if the message has zero marginal.
BeliefVector posterior(const PersuasionInstance& inst,
                       const SignalingScheme& scheme, std::size_t message);

// Lowest-index action maximizing expected receiver utility under `belief`.
int best_response(const PersuasionInstance& inst, const BeliefVector& belief);

// Expected value of `payoff` (any player's utility matrix) when the receiver
// handles `scheme` in the given mode.  Obedient mode requires the message
// space to be the action set.
double expected_utility(const PersuasionInstance& inst,
                        const SignalingScheme& scheme, ReceiverMode mode,
                        const Matrix& payoff);

// Receiver value under full information: sum_y prior[y] max_a u(y,a).
double first_best(const PersuasionInstance& inst);

// JSON de/serialization.  Schema:
//   {"states":[...], "actions":[...], "prior":[...], "alice":[[...]],
//    "bobs":[{"name":..., "u":[[...]]}]}
PersuasionInstance instance_from_json(const std::string& text);
std::string instance_to_json(const PersuasionInstance& inst);
PersuasionInstance load_instance(const std::string& path);
void save_instance(const PersuasionInstance& inst, const std::string& path);

// Embedded reference instances: "synthetic1", "synthetic2", "movielens",
// "appendix_b".
std::vector<std::string> fixture_names();
PersuasionInstance fixture(const std::string& name);

std::vector<double> uniform_prior(std::size_t n);
PersuasionInstance with_prior(PersuasionInstance inst,
                              std::vector<double> prior);

}  // namespace alignmarket
