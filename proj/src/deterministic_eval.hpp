#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "alignmarket/core.hpp"

namespace alignmarket::internal {

// Receiver behavior for deterministic schemes, memoized per message pool
// (bitmask of states sending the same message) so that enumeration matches
// posterior()/best_response() bit for bit.
class DeterministicEvaluator {
 public:
  DeterministicEvaluator(const PersuasionInstance& inst, ReceiverMode mode)
      : inst_(inst), mode_(mode) {
    if (inst.num_states() > 63)
      throw DomainError("deterministic enumeration supports at most 63 states");
  }

  // Action chosen on a pooled message; -1 if the pool has zero prior mass.
  int pool_action(std::uint64_t pool) {
    auto it = memo_.find(pool);
    if (it != memo_.end()) return it->second;
    BeliefVector post(inst_.num_states(), 0.0);
    double marginal = 0.0;
    for (std::size_t y = 0; y < inst_.num_states(); ++y) {
      if (pool >> y & 1) {
        post[y] = inst_.prior[y];
        marginal += post[y];
      }
    }
    int action = -1;
    if (marginal > 0.0) {
      for (double& v : post) v /= marginal;
      action = best_response(inst_, post);
    }
    memo_.emplace(pool, action);
    return action;
  }

  // Receiver action per state under the map (after pooling in
  // posterior-best-response mode).
  void actions_for(const std::vector<int>& map, std::vector<int>& out) {
    const std::size_t ns = inst_.num_states();
    out.assign(ns, -1);
    if (mode_ == ReceiverMode::kObedient) {
      for (std::size_t y = 0; y < ns; ++y) out[y] = map[y];
      return;
    }
    pools_.assign(inst_.num_actions(), 0);
    for (std::size_t y = 0; y < ns; ++y)
      pools_[static_cast<std::size_t>(map[y])] |= std::uint64_t{1} << y;
    for (std::size_t y = 0; y < ns; ++y)
      out[y] = pool_action(pools_[static_cast<std::size_t>(map[y])]);
  }

  double value(const std::vector<int>& actions, const Matrix& payoff) const {
    double v = 0.0;
    for (std::size_t y = 0; y < inst_.num_states(); ++y) {
      if (actions[y] < 0) continue;  // zero-mass pool, contributes nothing
      v += inst_.prior[y] * payoff(y, static_cast<std::size_t>(actions[y]));
    }
    return v;
  }

 private:
  const PersuasionInstance& inst_;
  ReceiverMode mode_;
  std::unordered_map<std::uint64_t, int> memo_;
  std::vector<std::uint64_t> pools_;
};

}  // namespace alignmarket::internal
