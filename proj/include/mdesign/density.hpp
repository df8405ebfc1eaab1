#pragma once

#include <cstdint>
#include <vector>

#include "mdesign/chain.hpp"

namespace mdesign {

/// Exact per-step state-action distributions of `policy` on `mdp`.
Visitation propagate_density(const TabularMdp& mdp, const NonstationaryPolicy& policy);

/// Weighted sum of the component densities.
Visitation mixture_density(const TabularMdp& mdp, const MixturePolicy& mix);

/// pi_h(a|x) = d_h(x,a) / sum_a d_h(x,a); uniform over actions where the
/// state has no mass at step h.
NonstationaryPolicy marginalize(const Visitation& v);

/// Counts of each pair in one trajectory (Z delta_tau before normalization).
struct TrajectoryCounts {
  std::size_t length = 0;
  std::vector<std::uint32_t> counts;  ///< indexed by pair

  /// counts / length; sums to one for a nonempty trajectory.
  std::vector<double> normalized() const;
};

TrajectoryCounts trajectory_visitation(const Trajectory& traj, std::size_t n_states,
                                       std::size_t n_actions);

/// Returns a copy of `m` with `traj` recorded.
EmpiricalMeasure update_empirical(EmpiricalMeasure m, const Trajectory& traj);

}  // namespace mdesign
