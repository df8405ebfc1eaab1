#include "mdesign/density.hpp"

#include "mdesign/error.hpp"
#include "mdesign/kernels.hpp"

namespace mdesign {

Visitation propagate_density(const TabularMdp& mdp, const NonstationaryPolicy& policy) {
  std::vector<double> per_step(mdp.horizon() * mdp.n_pairs());
  kernels::propagate(mdp, policy, per_step);
  return Visitation(mdp.horizon(), mdp.n_states(), mdp.n_actions(), std::move(per_step));
}

Visitation mixture_density(const TabularMdp& mdp, const MixturePolicy& mix) {
  if (mix.empty()) throw InvalidArgument("mixture_density: empty mixture");
  std::vector<double> total(mdp.horizon() * mdp.n_pairs(), 0.0);
  std::vector<double> part(total.size());
  for (const auto& c : mix.components()) {
    if (c.weight == 0.0) continue;
    kernels::propagate(mdp, c.policy, part);
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += c.weight * part[i];
  }
  return Visitation(mdp.horizon(), mdp.n_states(), mdp.n_actions(), std::move(total));
}

NonstationaryPolicy marginalize(const Visitation& v) {
  const std::size_t H = v.horizon();
  const std::size_t S = v.n_states();
  const std::size_t A = v.n_actions();
  std::vector<double> probs(H * S * A);
  const double uniform = 1.0 / static_cast<double>(A);
  for (std::size_t h = 0; h < H; ++h) {
    const auto d = v.step(h);
    for (std::size_t x = 0; x < S; ++x) {
      double mass = 0.0;
      for (std::size_t a = 0; a < A; ++a) mass += d[x * A + a];
      double* out = probs.data() + (h * S + x) * A;
      if (mass > 0.0) {
        double total = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
          out[a] = d[x * A + a] > 0.0 ? d[x * A + a] / mass : 0.0;
          total += out[a];
        }
        // renormalize so rows pass the 1e-12 sum check after rounding
        for (std::size_t a = 0; a < A; ++a) out[a] /= total;
      } else {
        for (std::size_t a = 0; a < A; ++a) out[a] = uniform;
      }
    }
  }
  return NonstationaryPolicy(H, S, A, std::move(probs));
}

std::vector<double> TrajectoryCounts::normalized() const {
  std::vector<double> out(counts.size(), 0.0);
  if (length == 0) return out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = static_cast<double>(counts[i]) / static_cast<double>(length);
  }
  return out;
}

TrajectoryCounts trajectory_visitation(const Trajectory& traj, std::size_t n_states,
                                       std::size_t n_actions) {
  TrajectoryCounts tc;
  tc.length = traj.length();
  tc.counts.assign(n_states * n_actions, 0);
  for (const auto& sa : traj.steps) {
    if (sa.state >= n_states || sa.action >= n_actions) {
      throw DimensionError("trajectory_visitation: state or action out of range");
    }
    ++tc.counts[sa.state * n_actions + sa.action];
  }
  return tc;
}

EmpiricalMeasure update_empirical(EmpiricalMeasure m, const Trajectory& traj) {
  m.add(traj);
  return m;
}

}  // namespace mdesign
