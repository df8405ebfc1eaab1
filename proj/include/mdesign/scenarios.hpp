#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "mdesign/chain.hpp"

namespace mdesign {

// ---------------------------------------------------------------------------
// Gridworld

enum GridAction : std::uint32_t { kUp = 0, kDown = 1, kLeft = 2, kRight = 3 };

struct Gridworld {
  std::size_t width;
  std::size_t height;
  TabularMdp mdp;
  /// Feature type per cell (state index row * width + col, row 0 at the
  /// bottom); -1 marks a featureless cell.
  std::vector<int> cell_types;
  std::size_t n_types;

  std::size_t cell(std::size_t col, std::size_t row) const { return row * width + col; }
};

/// With probability 1 - slip the chosen move is applied; with probability
/// slip a uniformly drawn move out of all four replaces it. Moves that leave
/// the grid keep the agent in place. The episode starts in the lower-left cell.
Gridworld make_gridworld(std::size_t width, std::size_t height, double slip,
                         std::size_t n_types, std::vector<int> cell_types,
                         std::size_t horizon);

// ---------------------------------------------------------------------------
// Measurement scheduling

enum ScheduleAction : std::uint32_t { kWait = 0, kMeasure = 1 };

/// Deterministic chain over (time, draws used, cooldown remaining). A measure
/// action is effective only with draws left and no cooldown active; otherwise
/// it behaves exactly like waiting.
struct SchedulingChain {
  std::size_t n_timesteps;
  std::size_t max_draws;
  std::size_t cooldown;
  TabularMdp mdp;

  struct Slot {
    std::size_t time;
    std::size_t draws_used;
    std::size_t cooldown_left;
  };

  std::size_t state(Slot s) const {
    return (s.time * (max_draws + 1) + s.draws_used) * (cooldown + 1) + s.cooldown_left;
  }
  Slot slot(std::size_t state) const;
  bool can_measure(std::size_t state) const;
  /// Time indices at which `traj` takes an effective measurement.
  std::vector<std::size_t> measurement_times(const Trajectory& traj) const;
};

SchedulingChain make_scheduling_chain(std::size_t n_timesteps, std::size_t max_draws,
                                      std::size_t cooldown);

// ---------------------------------------------------------------------------
// Small fixtures

/// n states and n actions; action i moves to state i; start in state 0.
TabularMdp make_selector_chain(std::size_t n, std::size_t horizon = 1);

/// Two states with actions stay (0) and go (1, switches state); start in 0.
TabularMdp make_two_state_chain(std::size_t horizon = 2);

}  // namespace mdesign
