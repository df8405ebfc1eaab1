#include "mdesign/scenarios.hpp"

#include <algorithm>
#include <string>

#include "mdesign/error.hpp"

namespace mdesign {

using Transition = TabularMdp::Transition;

Gridworld make_gridworld(std::size_t width, std::size_t height, double slip,
                         std::size_t n_types, std::vector<int> cell_types,
                         std::size_t horizon) {
  if (width == 0 || height == 0) throw InvalidArgument("gridworld: empty grid");
  if (!(slip >= 0.0 && slip <= 1.0)) throw InvalidArgument("gridworld: slip outside [0,1]");
  if (cell_types.size() != width * height) {
    throw InvalidArgument("gridworld: type layout has " + std::to_string(cell_types.size()) +
                          " cells, expected " + std::to_string(width * height));
  }
  for (int t : cell_types) {
    if (t < -1 || t >= static_cast<int>(n_types)) {
      throw InvalidArgument("gridworld: cell type " + std::to_string(t) + " out of range");
    }
  }

  const std::size_t S = width * height;
  auto move = [&](std::size_t x, std::uint32_t a) -> std::size_t {
    const std::size_t col = x % width;
    const std::size_t row = x / width;
    switch (a) {
      case kUp: return row + 1 < height ? x + width : x;
      case kDown: return row > 0 ? x - width : x;
      case kLeft: return col > 0 ? x - 1 : x;
      default: return col + 1 < width ? x + 1 : x;
    }
  };

  std::vector<std::vector<Transition>> rows(S * 4);
  for (std::size_t x = 0; x < S; ++x) {
    for (std::uint32_t a = 0; a < 4; ++a) {
      auto& row = rows[x * 4 + a];
      if (slip < 1.0) row.push_back({static_cast<std::uint32_t>(move(x, a)), 1.0 - slip});
      if (slip > 0.0) {
        for (std::uint32_t b = 0; b < 4; ++b) {
          row.push_back({static_cast<std::uint32_t>(move(x, b)), slip / 4.0});
        }
      }
    }
  }
  std::vector<double> d0(S, 0.0);
  d0[0] = 1.0;
  return Gridworld{width, height,
                   TabularMdp(S, 4, horizon, std::move(rows), std::move(d0)),
                   std::move(cell_types), n_types};
}

SchedulingChain::Slot SchedulingChain::slot(std::size_t state) const {
  Slot s;
  s.cooldown_left = state % (cooldown + 1);
  state /= (cooldown + 1);
  s.draws_used = state % (max_draws + 1);
  s.time = state / (max_draws + 1);
  return s;
}

bool SchedulingChain::can_measure(std::size_t state) const {
  const Slot s = slot(state);
  return s.draws_used < max_draws && s.cooldown_left == 0;
}

std::vector<std::size_t> SchedulingChain::measurement_times(const Trajectory& traj) const {
  std::vector<std::size_t> times;
  for (const auto& sa : traj.steps) {
    if (sa.action == kMeasure && can_measure(sa.state)) times.push_back(slot(sa.state).time);
  }
  return times;
}

SchedulingChain make_scheduling_chain(std::size_t n_timesteps, std::size_t max_draws,
                                      std::size_t cooldown) {
  if (n_timesteps == 0) throw InvalidArgument("scheduling chain: n_timesteps must be positive");
  if (max_draws == 0) throw InvalidArgument("scheduling chain: max_draws must be at least 1");

  SchedulingChain chain{n_timesteps, max_draws, cooldown,
                        TabularMdp(1, 1, 1, {{{0, 1.0}}}, {1.0})};
  const std::size_t S = n_timesteps * (max_draws + 1) * (cooldown + 1);
  std::vector<std::vector<Transition>> rows(S * 2);
  for (std::size_t x = 0; x < S; ++x) {
    const auto s = chain.slot(x);
    // the last slot loops onto itself; its successor is never observed
    const std::size_t next_time = std::min(s.time + 1, n_timesteps - 1);
    const SchedulingChain::Slot waited{next_time, s.draws_used,
                                       s.cooldown_left > 0 ? s.cooldown_left - 1 : 0};
    const auto wait_next = static_cast<std::uint32_t>(chain.state(waited));
    rows[x * 2 + kWait].push_back({wait_next, 1.0});
    if (chain.can_measure(x)) {
      const SchedulingChain::Slot measured{next_time, s.draws_used + 1, cooldown};
      rows[x * 2 + kMeasure].push_back({static_cast<std::uint32_t>(chain.state(measured)), 1.0});
    } else {
      rows[x * 2 + kMeasure].push_back({wait_next, 1.0});
    }
  }
  std::vector<double> d0(S, 0.0);
  d0[chain.state({0, 0, 0})] = 1.0;
  chain.mdp = TabularMdp(S, 2, n_timesteps, std::move(rows), std::move(d0));
  return chain;
}

TabularMdp make_selector_chain(std::size_t n, std::size_t horizon) {
  if (n == 0) throw InvalidArgument("selector chain: need at least one state");
  std::vector<std::vector<Transition>> rows(n * n);
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t a = 0; a < n; ++a) rows[x * n + a].push_back({static_cast<std::uint32_t>(a), 1.0});
  }
  std::vector<double> d0(n, 0.0);
  d0[0] = 1.0;
  return TabularMdp(n, n, horizon, std::move(rows), std::move(d0));
}

TabularMdp make_two_state_chain(std::size_t horizon) {
  std::vector<std::vector<Transition>> rows = {
      {{0, 1.0}},  // (0, stay)
      {{1, 1.0}},  // (0, go)
      {{1, 1.0}},  // (1, stay)
      {{0, 1.0}},  // (1, go)
  };
  return TabularMdp(2, 2, horizon, std::move(rows), {1.0, 0.0});
}

}  // namespace mdesign
