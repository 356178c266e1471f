#include "alignmarket/persuasion.hpp"

#include <cmath>

#include "deterministic_eval.hpp"

namespace alignmarket {

long long deterministic_scheme_count(const PersuasionInstance& inst) {
  const long long a = static_cast<long long>(inst.num_actions());
  long long count = 1;
  for (std::size_t y = 0; y < inst.num_states(); ++y) {
    if (count > kEnumerationCap / a + 1) count = kEnumerationCap + 1;
    else count *= a;
    if (count > kEnumerationCap)
      throw EnumerationTooLargeError(
          "deterministic scheme space exceeds " +
          std::to_string(kEnumerationCap) + " maps");
  }
  return count;
}

std::vector<int> decode_scheme_map(const PersuasionInstance& inst,
                                   long long index) {
  const long long a = static_cast<long long>(inst.num_actions());
  const std::size_t ns = inst.num_states();
  std::vector<int> map(ns, 0);
  for (std::size_t y = ns; y-- > 0;) {
    map[y] = static_cast<int>(index % a);
    index /= a;
  }
  return map;
}

MonopolyResult monopoly_deterministic_scheme(const PersuasionInstance& inst,
                                             int bob_index,
                                             ReceiverMode mode) {
  inst.validate();
  if (bob_index < 0 || static_cast<std::size_t>(bob_index) >= inst.num_bobs())
    throw DomainError("advisor index out of range");
  const Matrix& bob_u = inst.bob_utilities[static_cast<std::size_t>(bob_index)];
  const long long count = deterministic_scheme_count(inst);
  internal::DeterministicEvaluator eval(inst, mode);

  MonopolyResult best;
  double best_value = -kInf;
  std::vector<int> actions;
  for (long long idx = 0; idx < count; ++idx) {
    const std::vector<int> map = decode_scheme_map(inst, idx);
    eval.actions_for(map, actions);
    const double v = eval.value(actions, bob_u);
    if (v > best_value) {
      best_value = v;
      best.action_map = map;
      best.sender_value = v;
      best.alice_value = eval.value(actions, inst.alice_utility);
    }
  }
  best.scheme = SignalingScheme::deterministic(best.action_map,
                                               inst.num_actions());
  return best;
}

PersuasionLpResult optimal_persuasion_lp(const PersuasionInstance& inst,
                                         const Matrix& sender_utility) {
  inst.validate();
  const std::size_t ns = inst.num_states();
  const std::size_t na = inst.num_actions();
  if (sender_utility.rows != ns || sender_utility.cols != na)
    throw DimensionError("sender utility shape does not match the instance");

  // Variables pi(a|y), indexed y * na + a.  Maximize the sender's value
  // subject to row-stochasticity and the receiver's obedience constraints.
  const std::size_t nv = ns * na;
  LpProblem lp;
  lp.objective.assign(nv, 0.0);
  for (std::size_t y = 0; y < ns; ++y)
    for (std::size_t a = 0; a < na; ++a)
      lp.objective[y * na + a] = -inst.prior[y] * sender_utility(y, a);

  lp.a_eq = Matrix(ns, nv, 0.0);
  lp.b_eq.assign(ns, 1.0);
  for (std::size_t y = 0; y < ns; ++y)
    for (std::size_t a = 0; a < na; ++a) lp.a_eq(y, y * na + a) = 1.0;

  lp.a_ub = Matrix(na * (na - 1), nv, 0.0);
  lp.b_ub.assign(na * (na - 1), 0.0);
  std::size_t row = 0;
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t ap = 0; ap < na; ++ap) {
      if (ap == a) continue;
      // Obedience to recommendation a versus switching to ap:
      //   sum_y prior[y] pi(a|y) (u_A(y,a) - u_A(y,ap)) >= 0
      for (std::size_t y = 0; y < ns; ++y)
        lp.a_ub(row, y * na + a) =
            inst.prior[y] *
            (inst.alice_utility(y, ap) - inst.alice_utility(y, a));
      ++row;
    }
  lp.lower.assign(nv, 0.0);
  lp.upper.assign(nv, kInf);

  const LpSolution sol = solve_lp(lp);
  PersuasionLpResult res;
  res.status = sol.status;
  if (sol.status != LpStatus::kOptimal) return res;

  res.scheme.rows = Matrix(ns, na, 0.0);
  for (std::size_t y = 0; y < ns; ++y) {
    double total = 0.0;
    for (std::size_t a = 0; a < na; ++a) {
      const double v = std::max(sol.x[y * na + a], 0.0);
      res.scheme.rows(y, a) = v;
      total += v;
    }
    for (std::size_t a = 0; a < na; ++a) res.scheme.rows(y, a) /= total;
  }
  res.sender_value = -sol.objective;
  res.alice_value = expected_utility(inst, res.scheme, ReceiverMode::kObedient,
                                     inst.alice_utility);
  return res;
}

double oblivious_joint_evaluation(
    const PersuasionInstance& inst,
    const std::vector<SignalingScheme>& schemes) {
  inst.validate();
  if (schemes.empty()) throw DomainError("no schemes to evaluate");
  long long joint = 1;
  for (const auto& s : schemes) {
    s.validate(inst.num_states());
    joint *= static_cast<long long>(s.message_count());
    if (joint > kEnumerationCap)
      throw EnumerationTooLargeError("joint message space exceeds " +
                                     std::to_string(kEnumerationCap));
  }

  const std::size_t ns = inst.num_states();
  std::vector<std::size_t> msg(schemes.size(), 0);
  std::vector<double> lik(ns);
  BeliefVector post(ns);
  double value = 0.0;
  for (long long it = 0; it < joint; ++it) {
    double marginal = 0.0;
    for (std::size_t y = 0; y < ns; ++y) {
      double l = 1.0;
      for (std::size_t s = 0; s < schemes.size(); ++s)
        l *= schemes[s].rows(y, msg[s]);
      lik[y] = l;
      marginal += inst.prior[y] * l;
    }
    if (marginal > 0.0) {
      for (std::size_t y = 0; y < ns; ++y)
        post[y] = inst.prior[y] * lik[y] / marginal;
      const int a = best_response(inst, post);
      for (std::size_t y = 0; y < ns; ++y)
        value += inst.prior[y] * lik[y] *
                 inst.alice_utility(y, static_cast<std::size_t>(a));
    }
    // Advance the mixed-radix message counter.
    for (std::size_t s = schemes.size(); s-- > 0;) {
      if (++msg[s] < schemes[s].message_count()) break;
      msg[s] = 0;
    }
  }
  return value;
}

SignalingScheme alice_optimal_scheme(const PersuasionInstance& inst) {
  inst.validate();
  SignalingScheme s;
  s.rows = Matrix(inst.num_states(), inst.num_states(), 0.0);
  for (std::size_t y = 0; y < inst.num_states(); ++y) s.rows(y, y) = 1.0;
  return s;
}

}  // namespace alignmarket
