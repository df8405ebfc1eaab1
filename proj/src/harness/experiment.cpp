#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include <omp.h>

#include "mdesign/error.hpp"
#include "mdesign/harness.hpp"

namespace mdesign::harness {

namespace fs = std::filesystem;

ReferenceSolution compute_reference(const Problem& problem, const ExperimentConfig& cfg) {
  const auto objective = make_objective(problem.objective);
  return reference_optimum(problem.mdp, *objective, cfg.reference_fw);
}

ExperimentResult execute(const ExperimentConfig& cfg, const Problem& problem,
                         std::ostream* progress) {
  ExperimentResult result;
  result.reference = compute_reference(problem, cfg);
  auto reference = std::make_shared<const ReferenceSolution>(result.reference);
  if (progress) {
    *progress << "reference value " << result.reference.value << " gap " << result.reference.gap
              << (result.reference.converged ? "" : " (not converged)") << '\n';
  }

  const std::size_t n_tasks = cfg.variants.size() * cfg.reruns;
  result.logs.resize(n_tasks);
  const int threads = cfg.workers > 0 ? cfg.workers : omp_get_max_threads();
  std::size_t done = 0;

#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::size_t task = 0; task < n_tasks; ++task) {
    const VariantKind variant = cfg.variants[task / cfg.reruns];
    const std::size_t rerun = task % cfg.reruns;
    RunConfig rc;
    rc.episodes = cfg.episodes;
    rc.variant = variant;
    rc.nonadaptive_mode = cfg.nonadaptive_mode;
    rc.fw = cfg.fw;
    rc.reference_fw = cfg.reference_fw;
    rc.seed = RngSeed{cfg.seed, rerun};
    rc.objective = problem.objective;
    rc.reference = reference;
    rc.uncertain_oracle = cfg.uncertain_oracle && variant == VariantKind::OneStep;
    rc.drop_warm_start = cfg.drop_warm_start;
    rc.gamma_schedule = problem.gamma_schedule;
    EpisodeLog log;
    try {
      log = run(problem.mdp, rc);
    } catch (const std::exception& e) {
      log.error = e.what();
    }
    result.logs[task] = std::move(log);
    if (progress) {
#pragma omp critical(mdesign_progress)
      {
        ++done;
        *progress << "[" << done << "/" << n_tasks << "] " << to_string(variant) << " rerun "
                  << rerun << (result.logs[task].error ? " failed" : " done") << '\n';
      }
    }
  }

  for (std::size_t task = 0; task < n_tasks; ++task) {
    const std::string name = to_string(cfg.variants[task / cfg.reruns]);
    const std::size_t rerun = task % cfg.reruns;
    const auto& log = result.logs[task];
    for (std::size_t t = 0; t < log.episodes.size(); ++t) {
      const auto& e = log.episodes[t];
      result.rows.push_back({name, rerun, t + 1, e.objective_value, e.suboptimality, e.fw_iters,
                             e.wall_ms});
    }
    if (log.error) {
      result.errors.push_back(name + " rerun " + std::to_string(rerun) + ": " + *log.error);
    }
  }
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const fs::path& out_dir,
                                std::ostream* progress) {
  const Problem problem = build_problem(cfg);
  if (progress) {
    for (const auto& w : problem.warnings) *progress << "warning: " << w << '\n';
  }
  fs::create_directories(out_dir);
  ExperimentResult result = execute(cfg, problem, progress);

  std::vector<RawRow> raw = result.rows;
  if (!cfg.record_wall_time) {
    for (auto& r : raw) r.wall_ms = 0.0;
  }
  write_raw_csv(out_dir / "raw.csv", raw);
  {
    std::ofstream timing(out_dir / "timing.csv");
    timing << "variant,rerun,episode,fw_iters,wall_ms\n";
    for (const auto& r : result.rows) {
      timing << r.variant << ',' << r.rerun << ',' << r.episode << ',' << r.fw_iters << ','
             << r.wall_ms << '\n';
    }
  }

  const double floor = std::max(result.reference.gap, 1e-15);
  json artifacts = json::array({"raw.csv", "timing.csv"});
  if (!result.rows.empty()) {
    const auto summary = summarize(result.rows);
    write_summary_csv(out_dir / "summary.csv", summary);
    std::map<std::string, double> slopes;
    try {
      slopes = summary_slopes(summary, floor);
    } catch (const InvalidArgument&) {
      // too few episodes for a tail fit
    }
    write_slopes_csv(out_dir / "slopes.csv", slopes, summary);
    write_svg(out_dir / "convergence.svg", render_svg(summary, floor));
    artifacts.push_back("summary.csv");
    artifacts.push_back("slopes.csv");
    artifacts.push_back("convergence.svg");
  }

  json seeds = json::array();
  for (std::size_t r = 0; r < cfg.reruns; ++r) {
    seeds.push_back({{"rerun", r}, {"seed", cfg.seed}, {"stream", r}});
  }
  const auto& ref = result.reference;
  json manifest{
      {"config", cfg.resolved},
      {"config_hash", config_hash(cfg.resolved)},
      {"library_version", kLibraryVersion},
      {"seeds", seeds},
      {"reference",
       {{"value", ref.value},
        {"gap", ref.gap},
        {"converged", ref.converged},
        {"iterations", ref.iterations},
        {"components", ref.mixture.size()}}},
      {"artifacts", artifacts},
      {"warnings", problem.warnings},
      {"errors", result.errors},
      {"status", result.errors.empty() ? "ok" : "partial"},
  };
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << '\n';
  return result;
}

}  // namespace mdesign::harness
