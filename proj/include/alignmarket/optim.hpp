#pragma once

#include <limits>
#include <vector>

#include "alignmarket/core.hpp"

namespace alignmarket {

// minimize objective^T x
//   s.t. a_ub x <= b_ub,  a_eq x = b_eq,  lower <= x <= upper
// (+/-inf bounds allowed; empty constraint blocks allowed).
struct LpProblem {
  std::vector<double> objective;
  Matrix a_ub;
  std::vector<double> b_ub;
  Matrix a_eq;
  std::vector<double> b_eq;
  std::vector<double> lower;  // defaults to 0 if empty
  std::vector<double> upper;  // defaults to +inf if empty
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;
  double objective = 0.0;
};

// Dense two-phase simplex; Dantzig pricing with lowest-index tie-breaks,
// falling back to Bland's rule after a run of degenerate pivots.  Throws
// NumericalFailure if the pivot tolerance cannot be maintained.
LpSolution solve_lp(const LpProblem& problem);

// Result of a constrained least-squares fit of agent columns to a target.
struct AlignmentFit {
  std::vector<double> weights;
  double mse = 0.0;  // per-item mean squared error at the solution
  int iterations = 0;
  std::vector<int> support;  // indices with weight > 1e-6
};

// min ||design w - target||^2  s.t.  w >= 0   (active-set method,
// iteration cap 10 * columns).
AlignmentFit nnls(const Matrix& design, const std::vector<double>& target);

// min ||design w - target||^2  s.t.  w >= 0, sum w = 1   (equality-
// constrained active set, same iteration cap).
AlignmentFit simplex_fit(const Matrix& design,
                         const std::vector<double>& target);

struct BaselineReport {
  int best_index = -1;   // single column with least MSE (lowest index on ties)
  double best_mse = 0.0;
  double average_mse = 0.0;  // uniform 1/k mix of all columns
};

BaselineReport least_squares_baselines(const Matrix& design,
                                       const std::vector<double>& target);

}  // namespace alignmarket
