#pragma once

#include <vector>

#include "mdesign/chain.hpp"

namespace mdesign {

/// Per-pair cost r(x, a), minimized by the planner.
struct RewardTable {
  std::vector<double> values;
};

struct PlanResult {
  NonstationaryPolicy policy;
  Visitation density;
  /// E_{d0}[V_0] = H * sum_{x,a} d(x,a) r(x,a).
  double cost;
};

/// Exact finite-horizon planning by backward induction: V_H = 0,
/// Q_h(x,a) = r(x,a) + sum_x' p(x'|x,a) V_{h+1}(x'), argmin with the lowest
/// action index on ties.
PlanResult solve_rl(const TabularMdp& mdp, const RewardTable& reward);

}  // namespace mdesign
