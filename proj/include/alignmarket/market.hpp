#pragma once

#include <cstdint>
#include <vector>

#include "alignmarket/core.hpp"

namespace alignmarket {

// A subset of an instance's advisors competing for the receiver's attention.
struct Committee {
  PersuasionInstance instance;
  std::vector<int> members;  // indices into instance.bob_names, distinct

  std::size_t size() const { return members.size(); }
  void validate() const;  // throws DomainError / InvariantError
};

struct StableScheme {
  std::vector<int> action_map;
  double alice_value = 0.0;
  std::vector<double> member_values;  // aligned with committee.members
};

struct EquilibriumReport {
  std::vector<StableScheme> stable;  // lexicographic map order
  double min_alice_utility = 0.0;
  int argmin_index = -1;  // into `stable`
};

// A deterministic scheme f is a symmetric pure equilibrium iff no member j
// and deterministic f' exist with AliceValue(f') > AliceValue(f) and
// U_j(f') > U_j(f), both strict.  Exhaustive over |A|^|Y| maps.
EquilibriumReport enumerate_symmetric_equilibria(const Committee& committee,
                                                 ReceiverMode mode);

struct BrdStep {
  int round = 0;      // 0 for the initial commitment
  int deviator = -1;  // committee position that moved; -1 for the init step
  std::vector<int> scheme_map;  // scheme adopted at this step
  int selected = -1;            // committee position the receiver picks
  double alice_utility = 0.0;
  double deviator_value = 0.0;  // mover's value after the step
};

struct BrdTrajectory {
  std::vector<BrdStep> steps;
  bool converged = false;
  int rounds = 0;
  std::vector<int> final_map;
  double final_alice_utility = 0.0;
  int final_selected = -1;
};

// Best-response dynamics: members start at their monopoly schemes, the
// receiver picks her favorite (lowest index on ties), then non-selected
// members move in index order.  A deviation is adopted iff it strictly
// improves both the deviator and the receiver relative to the currently
// selected scheme; among qualifying deviations the mover takes the one
// maximizing his own value (lexicographic map order on ties).
// max_rounds < 0 selects the default cap |A|^|Y| * committee size * 4.
BrdTrajectory best_response_dynamics(const Committee& committee,
                                     ReceiverMode mode, long long max_rounds = -1);

struct MisalignmentScore {
  double epsilon = 0.0;
  std::vector<double> weights;  // simplex over committee members
  double offset = 0.0;          // additive constant c
};

// Smallest eps such that some simplex weighting w and offset c put the
// committee's weighted utility within eps below receiver utility on every
// equilibrium-realizable outcome and within eps above it on every
// receiver-optimal outcome.  Throws InvariantError on an empty report.
MisalignmentScore misalignment_epsilon(const Committee& committee,
                                       const EquilibriumReport& report,
                                       ReceiverMode mode);

struct BoundReport {
  double first_best = 0.0;
  double epsilon = 0.0;
  double bound = 0.0;  // first_best - 2 * epsilon
  double min_alice_utility = 0.0;
  double brd_utility = 0.0;
  bool satisfied = false;  // min_alice_utility >= bound - 1e-8
  double slack = 0.0;      // min_alice_utility - bound
};

// Convenience pipeline: enumerate equilibria, score misalignment, run the
// dynamics, and compare the worst equilibrium against first_best - 2 eps.
BoundReport check_theorem_bound(const Committee& committee, ReceiverMode mode);

struct PathRecord {
  int path_id = 0;
  int k = 0;             // committee size after the insertion
  int added_member = 0;  // advisor index added at this step
  std::vector<int> members;  // committee at this step, insertion order
  double min_alice_utility = 0.0;
  double epsilon = 0.0;
  double bound = 0.0;
  double brd_utility = 0.0;
};

// Random insertion orders over all advisors; for each prefix committee,
// record worst-equilibrium utility, misalignment, and the bound.  Path p
// uses seed + p, so results are reproducible path by path.
std::vector<PathRecord> committee_paths(const PersuasionInstance& inst,
                                        int num_paths, std::uint64_t seed,
                                        ReceiverMode mode);

}  // namespace alignmarket
