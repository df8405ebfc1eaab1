#include "mdesign/planner.hpp"

#include <cmath>

#include "mdesign/density.hpp"
#include "mdesign/error.hpp"
#include "mdesign/kernels.hpp"

namespace mdesign {

PlanResult solve_rl(const TabularMdp& mdp, const RewardTable& reward) {
  if (reward.values.size() != mdp.n_pairs()) {
    throw DimensionError("solve_rl: reward table needs one entry per state-action pair");
  }
  for (double r : reward.values) {
    if (!std::isfinite(r)) throw InvalidArgument("solve_rl: non-finite reward");
  }
  std::vector<std::uint32_t> actions(mdp.horizon() * mdp.n_states());
  std::vector<double> value0(mdp.n_states());
  const double cost = kernels::backward_induction(mdp, reward.values, actions, value0);
  auto policy = NonstationaryPolicy::deterministic(mdp.horizon(), mdp.n_states(),
                                                   mdp.n_actions(), actions);
  auto density = propagate_density(mdp, policy);
  return PlanResult{std::move(policy), std::move(density), cost};
}

}  // namespace mdesign
