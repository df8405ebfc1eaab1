#include "mdesign/sampling.hpp"

#include "mdesign/error.hpp"

namespace mdesign {

namespace {

std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffULL); }
std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

}  // namespace

Engine make_engine(RngSeed seed) {
  std::seed_seq seq{lo32(seed.seed), hi32(seed.seed), lo32(seed.stream), hi32(seed.stream)};
  return Engine(seq);
}

Engine make_engine(RngSeed seed, std::uint64_t substream) {
  std::seed_seq seq{lo32(seed.seed),   hi32(seed.seed),   lo32(seed.stream),
                    hi32(seed.stream), lo32(substream),   hi32(substream),
                    0x9e3779b9u};
  return Engine(seq);
}

std::size_t sample_index(std::span<const double> probs, Engine& engine) {
  if (probs.empty()) throw InvalidArgument("sample_index: empty distribution");
  const double u = uniform01(engine);
  double cumulative = 0.0;
  std::size_t last_positive = probs.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    cumulative += probs[i];
    last_positive = i;
    if (u < cumulative) return i;
  }
  // rounding left u above the final cumulative sum
  if (last_positive == probs.size()) throw InvalidArgument("sample_index: no positive mass");
  return last_positive;
}

Trajectory sample_trajectory(const TabularMdp& mdp, const NonstationaryPolicy& policy,
                             Engine& engine) {
  if (policy.horizon() != mdp.horizon() || policy.n_states() != mdp.n_states() ||
      policy.n_actions() != mdp.n_actions()) {
    throw DimensionError("sample_trajectory: policy shape does not match the MDP");
  }
  Trajectory traj;
  traj.steps.reserve(mdp.horizon());
  std::size_t x = sample_index(mdp.initial(), engine);
  for (std::size_t h = 0; h < mdp.horizon(); ++h) {
    const std::size_t a = sample_index(policy.row(h, x), engine);
    traj.steps.push_back({static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(a)});
    if (h + 1 == mdp.horizon()) break;
    const auto row = mdp.row(x, a);
    if (row.size() == 1) {
      x = row[0].next;
      continue;
    }
    const double u = uniform01(engine);
    double cumulative = 0.0;
    std::size_t next = row.back().next;
    for (const auto& t : row) {
      cumulative += t.prob;
      if (u < cumulative) {
        next = t.next;
        break;
      }
    }
    x = next;
  }
  return traj;
}

Trajectory sample_trajectory(const TabularMdp& mdp, const NonstationaryPolicy& policy,
                             RngSeed seed) {
  Engine engine = make_engine(seed);
  return sample_trajectory(mdp, policy, engine);
}

bool trajectory_consistent(const TabularMdp& mdp, const Trajectory& traj) {
  if (traj.length() != mdp.horizon() || traj.steps.empty()) return false;
  if (mdp.initial()[traj.steps[0].state] <= 0.0) return false;
  for (std::size_t h = 0; h + 1 < traj.steps.size(); ++h) {
    const auto& cur = traj.steps[h];
    if (mdp.probability(cur.state, cur.action, traj.steps[h + 1].state) <= 0.0) return false;
  }
  return true;
}

}  // namespace mdesign
