#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "alignmarket/core.hpp"
#include "alignmarket/rng.hpp"

namespace alignmarket {

// Finite joint distribution over (x_a, x_b, y): the two parties' private
// features and the payoff-relevant state, plus the receiver utility u(y, a).
struct DiscreteJointPrior {
  std::vector<std::string> x_a_labels;
  std::vector<std::string> x_b_labels;
  std::vector<std::string> y_labels;
  std::vector<double> pmf;  // flattened [x_a][x_b][y]
  Matrix alice_utility;     // y x actions

  std::size_t num_x_a() const { return x_a_labels.size(); }
  std::size_t num_x_b() const { return x_b_labels.size(); }
  std::size_t num_y() const { return y_labels.size(); }
  std::size_t num_actions() const { return alice_utility.cols; }

  double p(std::size_t xa, std::size_t xb, std::size_t y) const {
    return pmf[(xa * num_x_b() + xb) * num_y() + y];
  }
  void validate() const;
};

// JSON schema: {"x_a":[...], "x_b":[...], "y":[...],
//               "pmf":[[[...]]], "alice_u":[[...]]}
DiscreteJointPrior joint_prior_from_json(const std::string& text);
std::string joint_prior_to_json(const DiscreteJointPrior& prior);
DiscreteJointPrior load_joint_prior(const std::string& path);
void save_joint_prior(const DiscreteJointPrior& prior, const std::string& path);

// Embedded conversation priors: "corr2", "xor2" (2x2x2), "pool3", "skew3"
// (3x3x2).
std::vector<std::string> joint_prior_fixture_names();
DiscreteJointPrior joint_prior_fixture(const std::string& name);

// One message is a vector of per-action values (belief vectors in the
// straightforward protocol).
struct TranscriptEntry {
  int round = 0;
  int speaker = 0;  // 0 = first party ("alice"), 1 = counterpart ("bob")
  std::vector<double> message;
};

struct Transcript {
  // One private history per counterpart, in counterpart order.
  std::vector<std::vector<TranscriptEntry>> histories;
  int rounds = 0;
};

// A counterpart rule sees its own feature and its private history; the
// first party's rule sees her feature and all k histories and must return
// one message per counterpart.
using BobRule = std::function<std::vector<double>(
    int x_b, const std::vector<TranscriptEntry>& history, Rng& rng)>;
using AliceRule = std::function<std::vector<std::vector<double>>(
    int x_a, const std::vector<std::vector<TranscriptEntry>>& histories,
    Rng& rng)>;

// Generic message loop: each round the first party messages every
// counterpart, then each counterpart replies on its own history.
Transcript sample_transcript(const AliceRule& alice_rule,
                             const std::vector<BobRule>& bob_rules, int x_a,
                             const std::vector<int>& x_b, int rounds,
                             std::uint64_t seed);

struct ConversationResult {
  Transcript transcript;
  // Index r holds the post-round-r beliefs; index 0 is pre-conversation.
  std::vector<std::vector<double>> alice_beliefs;
  std::vector<std::vector<double>> bob_beliefs;
};

// Two-party straightforward conversation: each round the first party reports
// her posterior mean of u(., y) per action, the counterpart replies with his,
// and both condition on the other's reports by refining the feasible set of
// opposing features (message preimages).  Deterministic.
// Throws ZeroProbabilityFeaturesError if (x_a, x_b) has zero probability.
ConversationResult run_straightforward_conversation(
    const DiscreteJointPrior& prior, int x_a, int x_b, int rounds);

// First round r with ||alice_beliefs[r] - bob_beliefs[r]||_inf <= zeta,
// or -1 if none.
int agreement_round(const ConversationResult& result, double zeta);

// Softmax choice p(a) proportional to exp(lambda * belief[a]), computed with
// max subtraction.  lambda = 0 gives the uniform distribution.
std::vector<double> quantal_response(const std::vector<double>& belief,
                                     double lambda);

// max_a belief[a] - sum_a p(a) belief[a]  (always in [0, log|A| / lambda]).
double quantal_gap(const std::vector<double>& belief, double lambda);

struct StabilityReport {
  double l1_distance = 0.0;
  double sup_distance = 0.0;
  double bound = 0.0;  // exp(2 lambda sup_distance) - 1
};

// L1 distance between the softmax responses to two value vectors, against
// the smoothness bound exp(2 lambda ||u - u'||_inf) - 1.
StabilityReport softmax_stability(const std::vector<double>& u,
                                  const std::vector<double>& u_prime,
                                  double lambda);

struct SubstitutesReport {
  bool holds = false;
  double max_violation = 0.0;  // positive if the inequality fails somewhere
  int witness_action = -1;
  std::vector<int> witness_a;  // feature subsets realizing the violation
  std::vector<int> witness_b;
  long long pairs_checked = 0;
};

// Diminishing-value check: for every action and every pair of feature
// subsets, learning the first party's exact feature must reduce mean squared
// prediction error less when the counterpart's exact feature is already
// known.  Exhaustive up to 12 features per side (SubsetSpaceTooLargeError
// beyond), or sampled subset pairs.
SubstitutesReport info_substitutes_check(const DiscreteJointPrior& prior,
                                         bool exhaustive = true,
                                         int samples = 1000,
                                         std::uint64_t seed = 0);

struct TheoremBounds {
  double zeta = 0.0;
  double estimation_error = 0.0;  // 2(10 z^{1/3} + d) + e^{40 l z^{1/3}} - 1 + d
  double quantal_gap = 0.0;       // log|A| / lambda
  double total_deficit = 0.0;     // 2 eps + estimation + quantal gap
  double corollary_deficit = 0.0;
  bool corollary_applicable = false;  // requires lambda * 10 z^{1/3} <= 1/4
  double rounds_for_zeta = 0.0;       // 3|A| / (zeta^2 delta_conv)
};

// Plug-in arithmetic for the end-to-end conversation guarantee: after K
// rounds the agreement gap is zeta = sqrt(3|A| / (K delta_conv)) and the
// receiver's value is within
//   2 eps + estimation_error + log|A|/lambda
// of optimal.  The corollary deficit replaces the exponential term by the
// linearization (20 + 40 e lambda) zeta^{1/3} + 3 delta_conv when
// lambda * 10 zeta^{1/3} <= 1/4.
TheoremBounds theorem_bounds(int num_actions, double rounds, double delta_conv,
                             double lambda, double epsilon);

// Inverse rule: rounds needed for a target agreement gap.
double rounds_for_agreement(int num_actions, double zeta, double delta_conv);

}  // namespace alignmarket
