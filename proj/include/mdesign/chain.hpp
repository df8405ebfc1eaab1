#pragma once

// Tabular Markov chain model and the value types that live on it: policies,
// mixtures, trajectories, visitation distributions and the running empirical
// measure of executed trajectories.
//
// Flat indexing conventions used throughout the library:
//   pair index        x * n_actions + a
//   per-step index    h * n_states * n_actions + x * n_actions + a

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace mdesign {

inline constexpr double kDistributionTol = 1e-12;

class TabularMdp {
 public:
  struct Transition {
    std::uint32_t next;
    double prob;
  };
  /// Incoming edge of a state: source pair index and probability.
  struct Inflow {
    std::uint32_t pair;
    double prob;
  };

  /// `rows` holds one sparse row per pair (x * n_actions + a). Duplicate
  /// targets inside a row are merged; zero-probability entries are dropped.
  TabularMdp(std::size_t n_states, std::size_t n_actions, std::size_t horizon,
             std::vector<std::vector<Transition>> rows, std::vector<double> initial);

  /// Dense constructor: `dense[(x * A + a) * S + x']`.
  static TabularMdp from_dense(std::size_t n_states, std::size_t n_actions,
                               std::size_t horizon, std::span<const double> dense,
                               std::vector<double> initial);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t n_pairs() const { return n_states_ * n_actions_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t pair(std::size_t x, std::size_t a) const { return x * n_actions_ + a; }

  std::span<const Transition> row(std::size_t x, std::size_t a) const;
  std::span<const Inflow> inflow(std::size_t next) const;
  std::span<const double> initial() const { return initial_; }
  double probability(std::size_t x, std::size_t a, std::size_t next) const;
  bool is_deterministic() const;

  TabularMdp with_horizon(std::size_t horizon) const;

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::size_t horizon_;
  std::vector<std::size_t> row_offsets_;
  std::vector<Transition> transitions_;
  std::vector<std::size_t> inflow_offsets_;
  std::vector<Inflow> inflows_;
  std::vector<double> initial_;
};

/// pi_h(a | x) for every step h < H. Deterministic policies are stored as one
/// action per (h, x); their rows point into a shared one-hot table.
class NonstationaryPolicy {
 public:
  NonstationaryPolicy(std::size_t horizon, std::size_t n_states, std::size_t n_actions,
                      std::vector<double> probs);

  static NonstationaryPolicy uniform(std::size_t horizon, std::size_t n_states,
                                     std::size_t n_actions);
  /// One-hot policy; `actions[h * S + x]` is the action taken.
  static NonstationaryPolicy deterministic(std::size_t horizon, std::size_t n_states,
                                           std::size_t n_actions,
                                           std::span<const std::uint32_t> actions);

  std::size_t horizon() const { return horizon_; }
  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  bool is_deterministic() const { return probs_.empty(); }

  double prob(std::size_t h, std::size_t x, std::size_t a) const { return row(h, x)[a]; }
  std::span<const double> row(std::size_t h, std::size_t x) const {
    if (probs_.empty()) {
      return {one_hot_->data() + actions_[h * n_states_ + x] * n_actions_, n_actions_};
    }
    return {probs_.data() + (h * n_states_ + x) * n_actions_, n_actions_};
  }
  /// Dense table indexed (h * S + x) * A + a.
  std::vector<double> dense() const;

  /// Equal action distributions, whatever the storage.
  bool operator==(const NonstationaryPolicy& other) const;

 private:
  NonstationaryPolicy() = default;

  std::size_t horizon_ = 0;
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<double> probs_;
  std::vector<std::uint32_t> actions_;
  std::shared_ptr<const std::vector<double>> one_hot_;
};

/// Convex combination of non-stationary policies, executed by drawing one
/// component per episode.
struct MixtureComponent {
  double weight;
  NonstationaryPolicy policy;
};

class MixturePolicy {
 public:
  MixturePolicy() = default;
  explicit MixturePolicy(std::vector<MixtureComponent> components);

  static MixturePolicy single(NonstationaryPolicy policy);

  std::size_t size() const { return components_.size(); }
  bool empty() const { return components_.empty(); }
  const MixtureComponent& operator[](std::size_t i) const { return components_[i]; }
  const std::vector<MixtureComponent>& components() const { return components_; }
  std::vector<double> weights() const;

  /// (1 - alpha) * this  U  {(alpha, policy)}. An identical existing component
  /// absorbs the new weight instead of being duplicated.
  void blend_in(double alpha, NonstationaryPolicy policy);

 private:
  std::vector<MixtureComponent> components_;
  std::vector<std::uint64_t> hashes_;
};

struct StateAction {
  std::uint32_t state;
  std::uint32_t action;
  bool operator==(const StateAction&) const = default;
};

struct Trajectory {
  std::vector<StateAction> steps;
  std::size_t length() const { return steps.size(); }
  bool operator==(const Trajectory&) const = default;
};

/// Per-step state-action distributions d_h and their horizon average.
class Visitation {
 public:
  Visitation() = default;
  Visitation(std::size_t horizon, std::size_t n_states, std::size_t n_actions,
             std::vector<double> per_step);

  static Visitation zeros(std::size_t horizon, std::size_t n_states, std::size_t n_actions);

  std::size_t horizon() const { return horizon_; }
  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t n_pairs() const { return n_states_ * n_actions_; }

  std::span<const double> per_step() const { return per_step_; }
  std::span<const double> step(std::size_t h) const {
    return {per_step_.data() + h * n_pairs(), n_pairs()};
  }
  std::span<const double> averaged() const { return averaged_; }

  /// this <- (1 - alpha) * this + alpha * other.
  void blend(double alpha, const Visitation& other);
  /// Largest absolute entry difference over per-step and averaged tables.
  double max_abs_diff(const Visitation& other) const;
  /// Largest violation of nonnegativity, per-step normalization or flow.
  double polytope_violation(const TabularMdp& mdp) const;

 private:
  void refresh_average();

  std::size_t horizon_ = 0;
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<double> per_step_;
  std::vector<double> averaged_;
};

/// Visit counts over executed trajectories. The normalized view is Z eta_t.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure(std::size_t horizon, std::size_t n_states, std::size_t n_actions);

  std::size_t episodes() const { return episodes_; }
  std::size_t horizon() const { return horizon_; }
  std::size_t n_pairs() const { return n_states_ * n_actions_; }
  std::span<const std::uint64_t> counts() const { return counts_; }
  std::span<const std::uint64_t> step_counts() const { return step_counts_; }

  /// counts / (t * H); the zero vector before the first episode.
  std::vector<double> normalized() const;
  /// Per-step empirical frequencies counts_h / t (zero when t = 0). Not a
  /// point of the polytope in general.
  Visitation as_visitation() const;

  void add(const Trajectory& traj);

 private:
  std::size_t horizon_;
  std::size_t n_states_;
  std::size_t n_actions_;
  std::size_t episodes_ = 0;
  std::vector<std::uint64_t> counts_;
  std::vector<std::uint64_t> step_counts_;
};

struct RngSeed {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

}  // namespace mdesign
