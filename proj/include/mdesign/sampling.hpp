#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "mdesign/chain.hpp"

namespace mdesign {

using Engine = std::mt19937_64;

/// Engine for (seed, stream). Seeding goes through std::seed_seq, whose
/// algorithm is fixed by the standard, so streams are portable.
Engine make_engine(RngSeed seed);
/// Engine for a sub-stream of `seed`, e.g. one episode within a rerun.
Engine make_engine(RngSeed seed, std::uint64_t substream);

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(Engine& engine) {
  return static_cast<double>(engine() >> 11) * 0x1.0p-53;
}

/// Inverse-CDF draw from a finite distribution. Zero-probability entries are
/// never returned.
std::size_t sample_index(std::span<const double> probs, Engine& engine);

/// x_0 ~ d0, a_h ~ pi_h(.|x_h), x_{h+1} ~ p(.|x_h, a_h). Returns H pairs.
Trajectory sample_trajectory(const TabularMdp& mdp, const NonstationaryPolicy& policy,
                             Engine& engine);
Trajectory sample_trajectory(const TabularMdp& mdp, const NonstationaryPolicy& policy,
                             RngSeed seed);

/// Every transition of `traj` has positive probability under `mdp`.
bool trajectory_consistent(const TabularMdp& mdp, const Trajectory& traj);

}  // namespace mdesign
