#pragma once

// Episode loop for sequential experiment design on a known chain. Each
// episode plans a policy from the executed history, samples one trajectory
// and folds it into the empirical measure Z eta_t.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mdesign/chain.hpp"
#include "mdesign/frank_wolfe.hpp"
#include "mdesign/objective.hpp"
#include "mdesign/planner.hpp"
#include "mdesign/sampling.hpp"

namespace mdesign {

enum class VariantKind { NonAdaptive, Tracking, OneStep, Exact };

const char* to_string(VariantKind v);
VariantKind parse_variant(const std::string& name);
inline constexpr VariantKind kAllVariants[] = {VariantKind::NonAdaptive, VariantKind::Tracking,
                                               VariantKind::OneStep, VariantKind::Exact};

enum class NonAdaptiveMode { Marginalized, Sampling };

using ObjectiveSpec = std::variant<DesignSpec, RobustSpec>;

std::unique_ptr<Objective> make_objective(const ObjectiveSpec& spec);
std::size_t objective_pairs(const ObjectiveSpec& spec);

struct ReferenceSolution {
  MixturePolicy mixture;
  Visitation density;
  double value = 0.0;
  double gap = 0.0;  ///< duality-gap certificate: value - U* <= gap
  std::size_t iterations = 0;
  bool converged = false;
};

/// Minimizes U over the polytope starting from the uniform policy.
/// Requires tight.gap_tol <= 1e-6.
ReferenceSolution reference_optimum(const TabularMdp& mdp, const Objective& objective,
                                    const FWConfig& tight);

// ---------------------------------------------------------------------------
// Per-episode planners

struct NonAdaptiveState {
  NonAdaptiveState(const MixturePolicy& mixture, const TabularMdp& mdp, NonAdaptiveMode mode);
  MixturePolicy mixture;
  NonstationaryPolicy marginalized;
  NonAdaptiveMode mode;
};

struct EpisodeChoice {
  std::size_t component;  ///< mixture index; 0 for single-policy planners
  NonstationaryPolicy policy;
};

/// Marginalized mode: the same policy every episode (no draw). Sampling
/// mode: component j with probability alpha_j.
EpisodeChoice plan_episode_nonadaptive(const NonAdaptiveState& state, Engine& engine);

struct TrackingState {
  explicit TrackingState(MixturePolicy mixture);
  MixturePolicy mixture;
  std::vector<std::uint64_t> executed;  ///< times each component was played
  std::uint64_t total = 0;
  void record(std::size_t component);
};

/// argmax_i (alpha_i - executed_i / t), lowest index on ties (alpha-hat = 0
/// before the first episode). Does not record the choice.
EpisodeChoice plan_episode_tracking(const TrackingState& state);

/// solve_rl with the gradient of U at Z eta_t as cost. Before the first
/// episode the gradient point is the zero measure, so M = rho I.
PlanResult plan_episode_onestep(const TabularMdp& mdp, const Objective& objective,
                                const EmpiricalMeasure& empirical);

struct UncertainPlan {
  PlanResult plan;
  std::size_t gamma;  ///< family member achieving the smallest oracle value
};

/// min over gamma of the one-step oracle value min_q <grad U_gamma(Z eta_t), q>.
UncertainPlan plan_episode_onestep_uncertain(const TabularMdp& mdp, const RobustSpec& rspec,
                                             const EmpiricalMeasure& empirical);

struct ExactPlan {
  NonstationaryPolicy policy;
  FWResult fw;
};

/// Frank-Wolfe on G_t(d) = U((t/(t+1)) Z eta_t + (1/(t+1)) d), started at the
/// pseudo-density Z eta_t with `prev_policy` as the only component (at t = 0
/// from prev_policy's own density). Returns the marginalized mixture; with
/// `drop_warm_start` the warm-start component is removed first when other
/// components exist.
ExactPlan plan_episode_exact(const TabularMdp& mdp, const Objective& objective,
                             const EmpiricalMeasure& empirical,
                             const NonstationaryPolicy& prev_policy, const FWConfig& fw_cfg,
                             bool drop_warm_start = false);

// ---------------------------------------------------------------------------
// Episode loop

struct EpisodeRecord {
  Trajectory trajectory;
  double objective_value = 0.0;  ///< F(eta_{t+1}) = U(Z eta_{t+1})
  double suboptimality = 0.0;    ///< objective_value - reference value
  std::size_t fw_iters = 0;      ///< mixture updates of the episode's inner solve
  double wall_ms = 0.0;
  std::size_t component = 0;     ///< mixture index (NonAdaptive/Tracking) or gamma (uncertain)
  double gradient_norm = 0.0;    ///< max |grad U(Z eta_{t+1})|
};

struct EpisodeLog {
  std::vector<EpisodeRecord> episodes;
  double reference_value = 0.0;
  double reference_gap = 0.0;
  std::optional<std::string> error;  ///< set when the run aborted early
};

/// Receives the log so far and the family in use; returns the family for the
/// next episode.
using GammaSchedule = std::function<RobustSpec(const EpisodeLog&, const RobustSpec&)>;

struct RunConfig {
  std::size_t episodes = 1;
  VariantKind variant = VariantKind::OneStep;
  NonAdaptiveMode nonadaptive_mode = NonAdaptiveMode::Marginalized;
  FWConfig fw;            ///< inner solves of the Exact variant
  FWConfig reference_fw;  ///< used when `reference` is empty
  RngSeed seed;
  ObjectiveSpec objective;
  std::shared_ptr<const ReferenceSolution> reference;
  /// OneStep with a robust objective: per-member oracle instead of the
  /// worst-case gradient.
  bool uncertain_oracle = false;
  bool drop_warm_start = false;
  GammaSchedule gamma_schedule;

  void validate() const;
};

/// Episode t draws from make_engine(seed, t). The logged objective is always
/// `cfg.objective`; a gamma schedule only changes what the planners see.
EpisodeLog run(const TabularMdp& mdp, const RunConfig& cfg);

/// Demo schedule: keeps the members within `radius` of `center` in family
/// order, where radius starts at the full width and halves every
/// `halflife` episodes.
GammaSchedule shrinking_family_schedule(RobustSpec full, std::size_t center, double halflife);

}  // namespace mdesign
