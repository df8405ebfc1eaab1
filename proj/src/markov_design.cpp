#include "mdesign/markov_design.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "mdesign/density.hpp"
#include "mdesign/error.hpp"

namespace mdesign {

const char* to_string(VariantKind v) {
  switch (v) {
    case VariantKind::NonAdaptive: return "nonadaptive";
    case VariantKind::Tracking: return "tracking";
    case VariantKind::OneStep: return "onestep";
    case VariantKind::Exact: return "exact";
  }
  return "?";
}

VariantKind parse_variant(const std::string& name) {
  for (VariantKind v : kAllVariants) {
    if (name == to_string(v)) return v;
  }
  throw InvalidArgument("unknown variant '" + name +
                        "' (expected nonadaptive, tracking, onestep or exact)");
}

std::unique_ptr<Objective> make_objective(const ObjectiveSpec& spec) {
  if (const auto* d = std::get_if<DesignSpec>(&spec)) return std::make_unique<DesignObjective>(*d);
  return std::make_unique<RobustObjective>(std::get<RobustSpec>(spec));
}

std::size_t objective_pairs(const ObjectiveSpec& spec) {
  if (const auto* d = std::get_if<DesignSpec>(&spec)) return d->n_pairs();
  const auto& r = std::get<RobustSpec>(spec);
  return r.family.empty() ? 0 : r.family.front().n_pairs();
}

ReferenceSolution reference_optimum(const TabularMdp& mdp, const Objective& objective,
                                    const FWConfig& tight) {
  if (tight.gap_tol > 1e-6) {
    throw InvalidArgument("reference_optimum: gap_tol must be at most 1e-6");
  }
  auto start = start_from_policy(
      mdp, NonstationaryPolicy::uniform(mdp.horizon(), mdp.n_states(), mdp.n_actions()));
  auto fw = frank_wolfe(mdp, objective, std::move(start), tight);
  return ReferenceSolution{std::move(fw.mixture), std::move(fw.density), fw.final_value,
                           std::max(fw.final_gap, 0.0), fw.iterations, fw.converged};
}

// ---------------------------------------------------------------------------

NonAdaptiveState::NonAdaptiveState(const MixturePolicy& mix, const TabularMdp& mdp,
                                   NonAdaptiveMode m)
    : mixture(mix), marginalized(marginalize(mixture_density(mdp, mix))), mode(m) {}

EpisodeChoice plan_episode_nonadaptive(const NonAdaptiveState& state, Engine& engine) {
  if (state.mode == NonAdaptiveMode::Marginalized) return {0, state.marginalized};
  const auto weights = state.mixture.weights();
  const std::size_t j = sample_index(weights, engine);
  return {j, state.mixture[j].policy};
}

TrackingState::TrackingState(MixturePolicy mix)
    : mixture(std::move(mix)), executed(mixture.size(), 0) {
  if (mixture.empty()) throw InvalidArgument("tracking: empty mixture");
}

void TrackingState::record(std::size_t component) {
  ++executed.at(component);
  ++total;
}

EpisodeChoice plan_episode_tracking(const TrackingState& state) {
  std::size_t best = 0;
  double best_deficit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < state.mixture.size(); ++i) {
    const double played =
        state.total == 0 ? 0.0
                         : static_cast<double>(state.executed[i]) / static_cast<double>(state.total);
    const double deficit = state.mixture[i].weight - played;
    if (deficit > best_deficit) {
      best_deficit = deficit;
      best = i;
    }
  }
  return {best, state.mixture[best].policy};
}

PlanResult plan_episode_onestep(const TabularMdp& mdp, const Objective& objective,
                                const EmpiricalMeasure& empirical) {
  std::vector<double> grad(mdp.n_pairs());
  objective.value_and_gradient(empirical.normalized(), grad);
  return solve_rl(mdp, RewardTable{std::move(grad)});
}

UncertainPlan plan_episode_onestep_uncertain(const TabularMdp& mdp, const RobustSpec& rspec,
                                             const EmpiricalMeasure& empirical) {
  rspec.validate();
  const auto point = empirical.normalized();
  std::optional<UncertainPlan> best;
  for (std::size_t k = 0; k < rspec.family.size(); ++k) {
    auto plan = solve_rl(mdp, RewardTable{objective_gradient(point, rspec.family[k])});
    if (!best || plan.cost < best->plan.cost) best = UncertainPlan{std::move(plan), k};
  }
  return std::move(*best);
}

ExactPlan plan_episode_exact(const TabularMdp& mdp, const Objective& objective,
                             const EmpiricalMeasure& empirical,
                             const NonstationaryPolicy& prev_policy, const FWConfig& fw_cfg,
                             bool drop_warm_start) {
  const std::size_t t = empirical.episodes();
  const double w = static_cast<double>(t) / static_cast<double>(t + 1);
  AnchoredObjective g(objective, empirical.normalized(), w);
  FWStart start = t == 0 ? start_from_policy(mdp, prev_policy)
                         : FWStart{MixturePolicy::single(prev_policy),
                                   empirical.as_visitation(), true};
  auto fw = frank_wolfe(mdp, g, std::move(start), fw_cfg);

  Visitation target = fw.mixture_density;
  if (drop_warm_start && t > 0 && fw.mixture.size() > 1) {
    std::vector<MixtureComponent> rest(fw.mixture.components().begin() + 1,
                                       fw.mixture.components().end());
    double total = 0.0;
    for (const auto& c : rest) total += c.weight;
    if (total > 0.0) {
      for (auto& c : rest) c.weight /= total;
      target = mixture_density(mdp, MixturePolicy(std::move(rest)));
    }
  }
  return ExactPlan{marginalize(target), std::move(fw)};
}

// ---------------------------------------------------------------------------

void RunConfig::validate() const {
  if (episodes == 0) throw InvalidArgument("RunConfig: episodes must be at least 1");
  if (const auto* r = std::get_if<RobustSpec>(&objective)) {
    r->validate();
  } else {
    std::get<DesignSpec>(objective).validate();
    if (gamma_schedule) throw InvalidArgument("RunConfig: gamma_schedule needs a robust objective");
    if (uncertain_oracle) {
      throw InvalidArgument("RunConfig: uncertain_oracle needs a robust objective");
    }
  }
}

EpisodeLog run(const TabularMdp& mdp, const RunConfig& cfg) {
  cfg.validate();
  if (objective_pairs(cfg.objective) != mdp.n_pairs()) {
    throw DimensionError("run: objective and chain disagree on the pair count");
  }
  using Clock = std::chrono::steady_clock;

  const auto evaluation = make_objective(cfg.objective);
  auto reference = cfg.reference;
  if (!reference) {
    reference = std::make_shared<ReferenceSolution>(
        reference_optimum(mdp, *evaluation, cfg.reference_fw));
  }
  EpisodeLog log;
  log.reference_value = reference->value;
  log.reference_gap = reference->gap;

  std::optional<NonAdaptiveState> nonadaptive;
  std::optional<TrackingState> tracking;
  if (cfg.variant == VariantKind::NonAdaptive) {
    nonadaptive.emplace(reference->mixture, mdp, cfg.nonadaptive_mode);
  } else if (cfg.variant == VariantKind::Tracking) {
    tracking.emplace(reference->mixture);
  }

  ObjectiveSpec planning_spec = cfg.objective;
  std::unique_ptr<Objective> scheduled;
  const Objective* planning = evaluation.get();

  EmpiricalMeasure empirical(mdp.horizon(), mdp.n_states(), mdp.n_actions());
  auto prev = NonstationaryPolicy::uniform(mdp.horizon(), mdp.n_states(), mdp.n_actions());
  std::vector<double> grad(mdp.n_pairs());
  log.episodes.reserve(cfg.episodes);

  try {
    for (std::size_t t = 0; t < cfg.episodes; ++t) {
      const auto started = Clock::now();
      if (cfg.gamma_schedule && t > 0) {
        planning_spec = cfg.gamma_schedule(log, std::get<RobustSpec>(planning_spec));
        scheduled = make_objective(planning_spec);
        if (objective_pairs(planning_spec) != mdp.n_pairs()) {
          throw DimensionError("gamma schedule returned a family of the wrong shape");
        }
        planning = scheduled.get();
      }
      Engine engine = make_engine(cfg.seed, t);
      EpisodeRecord rec;
      std::optional<NonstationaryPolicy> policy;

      switch (cfg.variant) {
        case VariantKind::NonAdaptive: {
          auto choice = plan_episode_nonadaptive(*nonadaptive, engine);
          rec.component = choice.component;
          policy = std::move(choice.policy);
          break;
        }
        case VariantKind::Tracking: {
          auto choice = plan_episode_tracking(*tracking);
          tracking->record(choice.component);
          rec.component = choice.component;
          policy = std::move(choice.policy);
          break;
        }
        case VariantKind::OneStep: {
          if (cfg.uncertain_oracle) {
            auto u = plan_episode_onestep_uncertain(mdp, std::get<RobustSpec>(planning_spec),
                                                    empirical);
            rec.component = u.gamma;
            policy = std::move(u.plan.policy);
          } else {
            policy = plan_episode_onestep(mdp, *planning, empirical).policy;
          }
          rec.fw_iters = 1;
          break;
        }
        case VariantKind::Exact: {
          auto plan = plan_episode_exact(mdp, *planning, empirical, prev, cfg.fw,
                                         cfg.drop_warm_start);
          rec.fw_iters = plan.fw.iterations;
          policy = std::move(plan.policy);
          break;
        }
      }

      rec.trajectory = sample_trajectory(mdp, *policy, engine);
      empirical.add(rec.trajectory);
      rec.objective_value = evaluation->value_and_gradient(empirical.normalized(), grad);
      rec.suboptimality = rec.objective_value - reference->value;
      double norm = 0.0;
      for (double g : grad) norm = std::max(norm, std::abs(g));
      rec.gradient_norm = norm;
      prev = std::move(*policy);
      rec.wall_ms =
          std::chrono::duration<double, std::milli>(Clock::now() - started).count();
      log.episodes.push_back(std::move(rec));
    }
  } catch (const std::exception& e) {
    log.error = e.what();
  }
  return log;
}

GammaSchedule shrinking_family_schedule(RobustSpec full, std::size_t center, double halflife) {
  full.validate();
  if (center >= full.family.size()) throw InvalidArgument("shrinking schedule: center out of range");
  if (!(halflife > 0.0)) throw InvalidArgument("shrinking schedule: halflife must be positive");
  const double width =
      static_cast<double>(std::max(center, full.family.size() - 1 - center));
  return [full = std::move(full), center, halflife, width](const EpisodeLog& log,
                                                           const RobustSpec&) {
    const double t = static_cast<double>(log.episodes.size());
    const double radius = width * std::exp2(-t / halflife);
    RobustSpec out;
    for (std::size_t k = 0; k < full.family.size(); ++k) {
      const double dist = std::abs(static_cast<double>(k) - static_cast<double>(center));
      if (dist <= radius) out.family.push_back(full.family[k]);
    }
    return out;
  };
}

}  // namespace mdesign
