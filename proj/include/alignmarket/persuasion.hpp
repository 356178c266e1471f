#pragma once

#include <vector>

#include "alignmarket/core.hpp"
#include "alignmarket/optim.hpp"

namespace alignmarket {

// Hard cap on deterministic-scheme enumeration (|actions|^|states|) and on
// the joint message space of oblivious evaluation.
inline constexpr long long kEnumerationCap = 10'000'000;

// Number of deterministic state->action maps; throws EnumerationTooLargeError
// past the cap.
long long deterministic_scheme_count(const PersuasionInstance& inst);

// Decode map index -> per-state action list, lexicographic order
// (state-major, lowest action index first).
std::vector<int> decode_scheme_map(const PersuasionInstance& inst,
                                   long long index);

struct MonopolyResult {
  std::vector<int> action_map;  // per-state recommended action
  SignalingScheme scheme;
  double sender_value = 0.0;
  double alice_value = 0.0;
};

// Best deterministic scheme (messages = actions) for one advisor acting
// alone, under the given receiver mode.  Ties break to the lexicographically
// smallest map.
MonopolyResult monopoly_deterministic_scheme(const PersuasionInstance& inst,
                                             int bob_index, ReceiverMode mode);

struct PersuasionLpResult {
  SignalingScheme scheme;  // states x actions, direct recommendations
  double sender_value = 0.0;
  double alice_value = 0.0;
  LpStatus status = LpStatus::kOptimal;
};

// Optimal obedient direct-recommendation scheme for an arbitrary sender
// utility: maximize sender value subject to row-stochasticity and the
// receiver's obedience constraints.
PersuasionLpResult optimal_persuasion_lp(const PersuasionInstance& inst,
                                         const Matrix& sender_utility);

// Receiver value when several schemes, designed in ignorance of each other,
// all report simultaneously: the receiver sees the joint message (independent
// across senders given the state), updates, and best-responds.
double oblivious_joint_evaluation(const PersuasionInstance& inst,
                                  const std::vector<SignalingScheme>& schemes);

// Fully revealing scheme (message = state identity); its receiver value is
// first_best under either receiver mode.
SignalingScheme alice_optimal_scheme(const PersuasionInstance& inst);

}  // namespace alignmarket
