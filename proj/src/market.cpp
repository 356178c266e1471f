#include "alignmarket/market.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "alignmarket/optim.hpp"
#include "alignmarket/persuasion.hpp"
#include "alignmarket/rng.hpp"
#include "deterministic_eval.hpp"

namespace alignmarket {

void Committee::validate() const {
  instance.validate();
  if (members.empty()) throw InvariantError("committee has no members");
  std::set<int> seen;
  for (int m : members) {
    if (m < 0 || static_cast<std::size_t>(m) >= instance.num_bobs())
      throw DomainError("committee member " + std::to_string(m) +
                        " out of range");
    if (!seen.insert(m).second)
      throw DomainError("duplicate committee member " + std::to_string(m));
  }
}

namespace {

// Receiver and member values for every deterministic map, indexed by the
// lexicographic map index.
struct ValueTables {
  long long count = 0;
  std::vector<double> alice;                // [count]
  std::vector<std::vector<double>> member;  // [committee position][count]
};

ValueTables build_tables(const Committee& c, ReceiverMode mode) {
  ValueTables t;
  t.count = deterministic_scheme_count(c.instance);
  t.alice.resize(static_cast<std::size_t>(t.count));
  t.member.assign(c.size(),
                  std::vector<double>(static_cast<std::size_t>(t.count)));
  internal::DeterministicEvaluator eval(c.instance, mode);
  std::vector<int> actions;
  for (long long idx = 0; idx < t.count; ++idx) {
    const std::vector<int> map = decode_scheme_map(c.instance, idx);
    eval.actions_for(map, actions);
    const std::size_t i = static_cast<std::size_t>(idx);
    t.alice[i] = eval.value(actions, c.instance.alice_utility);
    for (std::size_t j = 0; j < c.size(); ++j)
      t.member[j][i] = eval.value(
          actions,
          c.instance.bob_utilities[static_cast<std::size_t>(c.members[j])]);
  }
  return t;
}

bool is_stable(const ValueTables& t, std::size_t f) {
  for (std::size_t fp = 0; fp < static_cast<std::size_t>(t.count); ++fp) {
    if (!(t.alice[fp] > t.alice[f])) continue;
    for (const auto& uj : t.member)
      if (uj[fp] > uj[f]) return false;
  }
  return true;
}

}  // namespace

EquilibriumReport enumerate_symmetric_equilibria(const Committee& committee,
                                                 ReceiverMode mode) {
  committee.validate();
  const ValueTables t = build_tables(committee, mode);
  EquilibriumReport report;
  report.min_alice_utility = kInf;
  for (long long idx = 0; idx < t.count; ++idx) {
    const std::size_t f = static_cast<std::size_t>(idx);
    if (!is_stable(t, f)) continue;
    StableScheme s;
    s.action_map = decode_scheme_map(committee.instance, idx);
    s.alice_value = t.alice[f];
    s.member_values.reserve(committee.size());
    for (const auto& uj : t.member) s.member_values.push_back(uj[f]);
    if (s.alice_value < report.min_alice_utility) {
      report.min_alice_utility = s.alice_value;
      report.argmin_index = static_cast<int>(report.stable.size());
    }
    report.stable.push_back(std::move(s));
  }
  if (report.stable.empty())
    throw InvariantError("no stable scheme found; enumeration is buggy");
  return report;
}

BrdTrajectory best_response_dynamics(const Committee& committee,
                                     ReceiverMode mode, long long max_rounds) {
  committee.validate();
  const ValueTables t = build_tables(committee, mode);
  const std::size_t k = committee.size();
  if (max_rounds < 0) max_rounds = t.count * static_cast<long long>(k) * 4;

  // Each member opens with his monopoly map (lexicographically smallest
  // among his maximizers).
  std::vector<std::size_t> committed(k, 0);
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t best = 0;
    for (std::size_t f = 1; f < static_cast<std::size_t>(t.count); ++f)
      if (t.member[j][f] > t.member[j][best]) best = f;
    committed[j] = best;
  }
  auto pick_selected = [&]() {
    std::size_t sel = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (t.alice[committed[j]] > t.alice[committed[sel]]) sel = j;
    return sel;
  };
  std::size_t selected = pick_selected();

  BrdTrajectory traj;
  {
    BrdStep init;
    init.round = 0;
    init.deviator = -1;
    init.scheme_map =
        decode_scheme_map(committee.instance,
                          static_cast<long long>(committed[selected]));
    init.selected = static_cast<int>(selected);
    init.alice_utility = t.alice[committed[selected]];
    init.deviator_value = t.member[selected][committed[selected]];
    traj.steps.push_back(std::move(init));
  }

  for (long long round = 1; round <= max_rounds; ++round) {
    bool changed = false;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == selected) continue;
      const std::size_t cur = committed[selected];
      // Deviations must strictly improve both the mover and the receiver;
      // the mover takes his best one, lowest map index on ties.
      long long best_dev = -1;
      double best_val = -kInf;
      for (std::size_t f = 0; f < static_cast<std::size_t>(t.count); ++f) {
        if (!(t.alice[f] > t.alice[cur])) continue;
        if (!(t.member[j][f] > t.member[j][cur])) continue;
        if (t.member[j][f] > best_val) {
          best_val = t.member[j][f];
          best_dev = static_cast<long long>(f);
        }
      }
      if (best_dev < 0) continue;
      committed[j] = static_cast<std::size_t>(best_dev);
      selected = pick_selected();
      changed = true;
      BrdStep step;
      step.round = static_cast<int>(round);
      step.deviator = static_cast<int>(j);
      step.scheme_map = decode_scheme_map(committee.instance, best_dev);
      step.selected = static_cast<int>(selected);
      step.alice_utility = t.alice[committed[selected]];
      step.deviator_value = t.member[j][committed[selected]];
      traj.steps.push_back(std::move(step));
    }
    traj.rounds = static_cast<int>(round);
    if (!changed) {
      traj.converged = true;
      break;
    }
  }

  traj.final_map = decode_scheme_map(
      committee.instance, static_cast<long long>(committed[selected]));
  traj.final_alice_utility = t.alice[committed[selected]];
  traj.final_selected = static_cast<int>(selected);
  return traj;
}

MisalignmentScore misalignment_epsilon(const Committee& committee,
                                       const EquilibriumReport& report,
                                       ReceiverMode mode) {
  committee.validate();
  if (report.stable.empty())
    throw InvariantError("misalignment needs at least one stable scheme");
  const PersuasionInstance& inst = committee.instance;
  const std::size_t k = committee.size();
  const std::size_t ns = inst.num_states();

  // Realized (state, action) outcomes pooled over every stable scheme.
  internal::DeterministicEvaluator eval(inst, mode);
  std::set<std::pair<std::size_t, std::size_t>> ne_outcomes;
  std::vector<int> actions;
  for (const StableScheme& s : report.stable) {
    eval.actions_for(s.action_map, actions);
    for (std::size_t y = 0; y < ns; ++y) {
      if (inst.prior[y] <= 0.0 || actions[y] < 0) continue;
      ne_outcomes.emplace(y, static_cast<std::size_t>(actions[y]));
    }
  }
  // Receiver-optimal outcomes: lowest-index argmax per supported state.
  std::vector<std::pair<std::size_t, std::size_t>> opt_outcomes;
  for (std::size_t y = 0; y < ns; ++y) {
    if (inst.prior[y] <= 0.0) continue;
    std::size_t best = 0;
    for (std::size_t a = 1; a < inst.num_actions(); ++a)
      if (inst.alice_utility(y, a) > inst.alice_utility(y, best)) best = a;
    opt_outcomes.emplace_back(y, best);
  }

  // Variables [w_0..w_{k-1}, c, eps]: minimize eps subject to
  //   sum_j w_j U_j(y,a) + c - u_A(y,a) <= eps   on equilibrium outcomes,
  //   u_A(y,a) - c - sum_j w_j U_j(y,a) <= eps   on receiver-optimal ones,
  //   w on the simplex, c free.
  const std::size_t nv = k + 2;
  const std::size_t rows = ne_outcomes.size() + opt_outcomes.size();
  LpProblem lp;
  lp.objective.assign(nv, 0.0);
  lp.objective[k + 1] = 1.0;
  lp.a_ub = Matrix(rows, nv, 0.0);
  lp.b_ub.assign(rows, 0.0);
  std::size_t r = 0;
  auto member_u = [&](std::size_t j, std::size_t y, std::size_t a) {
    return inst
        .bob_utilities[static_cast<std::size_t>(committee.members[j])](y, a);
  };
  for (const auto& [y, a] : ne_outcomes) {
    for (std::size_t j = 0; j < k; ++j) lp.a_ub(r, j) = member_u(j, y, a);
    lp.a_ub(r, k) = 1.0;
    lp.a_ub(r, k + 1) = -1.0;
    lp.b_ub[r] = inst.alice_utility(y, a);
    ++r;
  }
  for (const auto& [y, a] : opt_outcomes) {
    for (std::size_t j = 0; j < k; ++j) lp.a_ub(r, j) = -member_u(j, y, a);
    lp.a_ub(r, k) = -1.0;
    lp.a_ub(r, k + 1) = -1.0;
    lp.b_ub[r] = -inst.alice_utility(y, a);
    ++r;
  }
  lp.a_eq = Matrix(1, nv, 0.0);
  for (std::size_t j = 0; j < k; ++j) lp.a_eq(0, j) = 1.0;
  lp.b_eq = {1.0};
  lp.lower.assign(nv, 0.0);
  lp.lower[k] = -kInf;  // offset c is free
  lp.upper.assign(nv, kInf);

  const LpSolution sol = solve_lp(lp);
  if (sol.status != LpStatus::kOptimal)
    throw NumericalFailure("misalignment program did not reach an optimum");

  MisalignmentScore score;
  score.weights.assign(sol.x.begin(), sol.x.begin() + static_cast<long>(k));
  double total = 0.0;
  for (double& w : score.weights) {
    if (w < 0.0) w = 0.0;
    total += w;
  }
  for (double& w : score.weights) w /= total;
  score.offset = sol.x[k];

  // Report the exact max violation of the cleaned weights; it must agree
  // with the programmed optimum.
  double eps = 0.0;
  auto weighted = [&](std::size_t y, std::size_t a) {
    double v = 0.0;
    for (std::size_t j = 0; j < k; ++j)
      v += score.weights[j] * member_u(j, y, a);
    return v;
  };
  for (const auto& [y, a] : ne_outcomes)
    eps = std::max(eps,
                   weighted(y, a) + score.offset - inst.alice_utility(y, a));
  for (const auto& [y, a] : opt_outcomes)
    eps = std::max(eps,
                   inst.alice_utility(y, a) - score.offset - weighted(y, a));
  if (std::abs(eps - sol.x[k + 1]) > kKktTolerance)
    throw NumericalFailure("misalignment certificate violates its optimum");
  score.epsilon = eps;
  return score;
}

BoundReport check_theorem_bound(const Committee& committee,
                                ReceiverMode mode) {
  const EquilibriumReport report =
      enumerate_symmetric_equilibria(committee, mode);
  const MisalignmentScore score =
      misalignment_epsilon(committee, report, mode);
  const BrdTrajectory traj = best_response_dynamics(committee, mode);

  BoundReport b;
  b.first_best = first_best(committee.instance);
  b.epsilon = score.epsilon;
  b.bound = b.first_best - 2.0 * score.epsilon;
  b.min_alice_utility = report.min_alice_utility;
  b.brd_utility = traj.final_alice_utility;
  b.slack = b.min_alice_utility - b.bound;
  b.satisfied = b.min_alice_utility >= b.bound - kKktTolerance;
  return b;
}

std::vector<PathRecord> committee_paths(const PersuasionInstance& inst,
                                        int num_paths, std::uint64_t seed,
                                        ReceiverMode mode) {
  inst.validate();
  if (num_paths <= 0) throw DomainError("need at least one path");
  const std::size_t nb = inst.num_bobs();
  if (nb > 63) throw DomainError("too many advisors for path enumeration");
  const double fb = first_best(inst);

  // Committees repeat across paths; cache by membership bitmask.
  struct Cached {
    double min_alice = 0.0, epsilon = 0.0, brd = 0.0;
  };
  std::map<std::uint64_t, Cached> cache;
  std::vector<PathRecord> records;
  records.reserve(static_cast<std::size_t>(num_paths) * nb);
  for (int p = 0; p < num_paths; ++p) {
    Rng rng(seed + static_cast<std::uint64_t>(p));
    const std::vector<int> order = rng.permutation(static_cast<int>(nb));
    Committee c;
    c.instance = inst;
    std::uint64_t mask = 0;
    for (std::size_t k = 0; k < nb; ++k) {
      const int added = order[k];
      c.members.push_back(added);
      mask |= std::uint64_t{1} << static_cast<unsigned>(added);
      auto it = cache.find(mask);
      if (it == cache.end()) {
        const EquilibriumReport rep = enumerate_symmetric_equilibria(c, mode);
        const MisalignmentScore sc = misalignment_epsilon(c, rep, mode);
        const BrdTrajectory traj = best_response_dynamics(c, mode);
        it = cache.emplace(mask, Cached{rep.min_alice_utility, sc.epsilon,
                                        traj.final_alice_utility})
                 .first;
      }
      PathRecord rec;
      rec.path_id = p;
      rec.k = static_cast<int>(k + 1);
      rec.added_member = added;
      rec.members = c.members;
      rec.min_alice_utility = it->second.min_alice;
      rec.epsilon = it->second.epsilon;
      rec.bound = fb - 2.0 * it->second.epsilon;
      rec.brd_utility = it->second.brd;
      records.push_back(rec);
    }
  }
  return records;
}

}  // namespace alignmarket
