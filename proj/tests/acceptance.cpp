// Acceptance checks, one line per criterion. With no arguments every
// criterion runs; otherwise only the numbers given on the command line.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "mdesign/density.hpp"
#include "mdesign/harness.hpp"
#include "support.hpp"

using namespace mdesign;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mdesign_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

DesignSpec random_design(std::size_t S, std::size_t A, std::size_t m, Scalarization s,
                         std::mt19937_64& rng, std::size_t p = 0, double mu = 0.0) {
  std::uniform_real_distribution<double> sig(0.5, 2.0), rho(0.05, 1.0);
  DesignSpec spec;
  spec.features = random_features(S, A, m, rng);
  for (std::size_t i = 0; i < S * A; ++i) spec.sigma.push_back(sig(rng));
  spec.rho = rho(rng);
  spec.scalarization = s;
  spec.mu = mu;
  if (p > 0) spec.functional = random_matrix(p, m, rng);
  return spec;
}

// ---------------------------------------------------------------------------

Outcome conversion_lemma() {
  std::mt19937_64 rng(101);
  const auto trajs = fixture_b_trajectories();
  double worst = 0.0;
  for (auto s : {Scalarization::D, Scalarization::A, Scalarization::E}) {
    auto spec = random_design(2, 2, 3, s, rng, 0, s == Scalarization::E ? 0.05 : 0.0);
    for (int k = 0; k < 100; ++k) {
      auto eta = random_simplex(4, rng);
      std::vector<WeightedTrajectory> w;
      for (int t = 0; t < 4; ++t) w.push_back({eta[t], trajs[t]});
      const double lhs = trajectory_objective(w, spec);
      const double rhs = objective_value(fixture_b_density({eta[0], eta[1], eta[2], eta[3]}), spec);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return {worst <= 1e-12, fmt("max |F(eta) - U(Z eta)| = %.3g over 300 mixtures", worst)};
}

Outcome degenerate_coverage() {
  const std::size_t d = 8;
  auto mdp = fixture_a(d);
  auto spec = make_design_spec(std::make_shared<FeatureMap>(selector_features(d)), 1.0, 1.0,
                               Scalarization::D);
  RunConfig rc;
  rc.objective = spec;
  rc.episodes = d;
  rc.variant = VariantKind::OneStep;
  rc.reference_fw.gap_tol = 1e-9;
  rc.reference = std::make_shared<ReferenceSolution>(
      reference_optimum(mdp, DesignObjective(spec), rc.reference_fw));

  bool onestep_ok = true;
  std::vector<Trajectory> first;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    rc.seed = RngSeed{seed, 0};
    auto log = run(mdp, rc);
    std::set<std::uint32_t> seen;
    std::vector<Trajectory> trajs;
    for (const auto& e : log.episodes) {
      seen.insert(e.trajectory.steps[0].action);
      trajs.push_back(e.trajectory);
    }
    onestep_ok = onestep_ok && seen.size() == d && log.episodes.size() == d;
    if (seed == 0) first = trajs;
    onestep_ok = onestep_ok && trajs == first;
  }

  rc.variant = VariantKind::NonAdaptive;
  rc.nonadaptive_mode = NonAdaptiveMode::Sampling;
  rc.episodes = 160;
  const int reruns = 2000;
  double total = 0.0;
  int uncovered = 0;
  for (int r = 0; r < reruns; ++r) {
    rc.seed = RngSeed{202, static_cast<std::uint64_t>(r)};
    auto log = run(mdp, rc);
    std::set<std::uint32_t> seen;
    std::size_t cover = 0;
    for (std::size_t t = 0; t < log.episodes.size() && !cover; ++t) {
      seen.insert(log.episodes[t].trajectory.steps[0].action);
      if (seen.size() == d) cover = t + 1;
    }
    if (!cover) ++uncovered;
    total += static_cast<double>(cover);
  }
  double harmonic = 0.0;
  for (std::size_t k = 1; k <= d; ++k) harmonic += 1.0 / static_cast<double>(k);
  const double expect = static_cast<double>(d) * harmonic;
  const double mean = total / reruns;
  const bool na_ok = uncovered == 0 && std::abs(mean - expect) <= 0.05 * expect;
  return {onestep_ok && na_ok,
          std::string("OneStep covers 8 states in 8 episodes: ") + (onestep_ok ? "yes" : "no") +
              fmt("; NonAdaptive mean cover time %.3f", mean) + fmt(" vs 8 H_8 = %.3f", expect)};
}

// Gridworld runs are shared by criteria 3 and 4.
struct GridRun {
  std::string name;
  harness::ExperimentResult result;
  std::map<std::string, double> slopes;
};

const std::vector<GridRun>& gridworld_runs() {
  static std::vector<GridRun> runs = [] {
    std::vector<GridRun> out;
    for (const char* name : {"gridworld_slip0", "gridworld_slip01", "gridworld_slip03"}) {
      const fs::path path = fs::path(MDESIGN_SOURCE_DIR) / "configs" / (std::string(name) + ".json");
      auto cfg = harness::parse_config(harness::load_config_json(path), path.parent_path());
      auto problem = harness::build_problem(cfg);
      GridRun g{name, harness::execute(cfg, problem), {}};
      const double floor = std::max(g.result.reference.gap, 1e-15);
      g.slopes = harness::summary_slopes(harness::summarize(g.result.rows), floor);
      out.push_back(std::move(g));
    }
    return out;
  }();
  return runs;
}

Outcome rate_separation() {
  bool ok = true;
  std::string detail;
  for (const auto& g : gridworld_runs()) {
    const double one = g.slopes.at("onestep"), ex = g.slopes.at("exact"),
                 na = g.slopes.at("nonadaptive");
    const bool here = g.result.errors.empty() && one <= -1.0 && ex <= -1.0 && na >= -0.8 && na <= -0.3;
    ok = ok && here;
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s%s: onestep %.2f exact %.2f nonadaptive %.2f tracking %.2f",
                  detail.empty() ? "" : "; ", g.name.c_str(), one, ex, na, g.slopes.at("tracking"));
    detail += buf;
  }
  return {ok, detail};
}

Outcome benchmark_floor() {
  bool ok = true;
  double worst = std::numeric_limits<double>::infinity();
  double max_gap = 0.0;
  for (const auto& g : gridworld_runs()) {
    const double gap = g.result.reference.gap;
    max_gap = std::max(max_gap, gap);
    ok = ok && gap <= 1e-6;
    for (const auto& r : g.result.rows) {
      worst = std::min(worst, r.suboptimality);
      ok = ok && r.suboptimality >= -gap - 1e-9;
    }
  }
  return {ok, fmt("min suboptimality %.3g", worst) + fmt(", largest reference gap %.3g", max_gap)};
}

// Fixed-size oracle for the Fixture B grid: M(eta) = rho I + sum_k eta_k M_k.
struct FastGrid {
  std::array<Eigen::Matrix3d, 4> Mk;
  Eigen::Matrix3d base;
  Eigen::MatrixXd C;
  char kind;

  FastGrid(const PlainDesign& p) : C(p.C), kind(p.kind) {
    base = p.rho * Eigen::Matrix3d::Identity();
    for (std::size_t k = 0; k < 4; ++k) {
      std::array<double, 4> e{};
      e[k] = 1.0;
      const auto d = fixture_b_density(e);
      Mk[k].setZero();
      for (int i = 0; i < 4; ++i) {
        const Eigen::Vector3d f = p.phi.row(i).transpose();
        Mk[k] += d[static_cast<std::size_t>(i)] / (p.sigma[static_cast<std::size_t>(i)] *
                                                   p.sigma[static_cast<std::size_t>(i)]) *
                 f * f.transpose();
      }
    }
  }

  double value(const std::array<double, 4>& eta) const {
    Eigen::Matrix3d M = base;
    for (std::size_t k = 0; k < 4; ++k) M += eta[k] * Mk[k];
    const Eigen::MatrixXd S = C * M.inverse() * C.transpose();
    if (kind == 'A') return S.trace();
    return std::log(S.determinant());
  }

  double minimum(double step) const {
    const int n = static_cast<int>(std::lround(1.0 / step));
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; i + j <= n; ++j) {
        for (int k = 0; i + j + k <= n; ++k) {
          const int l = n - i - j - k;
          best = std::min(best, value({i * step, j * step, k * step, l * step}));
        }
      }
    }
    return best;
  }
};

Outcome certificate_soundness() {
  std::mt19937_64 rng(505);
  auto mdp = fixture_b();
  double worst = -std::numeric_limits<double>::infinity();
  bool ok = true;
  for (int k = 0; k < 20; ++k) {
    const auto s = k % 2 ? Scalarization::A : Scalarization::D;
    auto spec = random_design(2, 2, 3, s, rng, k % 4 < 2 ? 0 : 2);
    DesignObjective obj(spec);
    FWConfig cfg;
    cfg.gap_tol = 1e-6;
    cfg.max_iters = 2000;
    auto res = frank_wolfe(mdp, obj, start_from_policy(mdp, NonstationaryPolicy::uniform(2, 2, 2)), cfg);
    const double grid = FastGrid(plain(spec)).minimum(0.005);
    const double excess = res.final_value - grid - res.final_gap;
    worst = std::max(worst, excess);
    ok = ok && excess <= 5e-3;
  }
  return {ok, fmt("max of U(d_final) - U(grid) - gap = %.3g over 20 instances", worst)};
}

Outcome gradient_correctness() {
  std::mt19937_64 rng(606);
  double worst = 0.0;
  auto check = [&](const std::function<double(const std::vector<double>&)>& f,
                   const std::vector<double>& grad, const std::vector<double>& d) {
    worst = std::max(worst, relative_error(grad, finite_difference(f, d, 1e-6)));
  };
  for (auto s : {Scalarization::D, Scalarization::A, Scalarization::E}) {
    for (int k = 0; k < 20; ++k) {
      auto spec = random_design(3, 2, 4, s, rng, k % 2 ? 2 : 0, s == Scalarization::E ? 0.1 : 0.0);
      auto d = random_simplex(6, rng);
      check([&](const std::vector<double>& x) { return objective_value(x, spec); },
            objective_gradient(d, spec), d);
    }
  }
  int robust = 0;
  while (robust < 20) {
    auto f = random_features(3, 2, 4, rng);
    RobustSpec r;
    for (int g = 0; g < 3; ++g) {
      r.family.push_back(make_design_spec(f, 1.0, 0.3, Scalarization::A, random_matrix(2, 4, rng)));
    }
    auto d = random_simplex(6, rng);
    std::vector<double> vals;
    for (const auto& m : r.family) vals.push_back(objective_value(d, m));
    std::sort(vals.begin(), vals.end());
    if (vals[2] - vals[1] < 1e-2 * std::abs(vals[2])) continue;
    check([&](const std::vector<double>& x) { return robust_value_and_gradient(x, r).value; },
          robust_value_and_gradient(d, r).gradient, d);
    ++robust;
  }
  return {worst <= 1e-5, fmt("max relative error %.3g over D, A, smoothed E and robust", worst)};
}

Outcome smoothing_sandwich() {
  std::mt19937_64 rng(707);
  bool ok = true;
  double slack = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double mu = 0.01 + 0.1 * (k % 7);
    auto spec = random_design(3, 3, 4, Scalarization::E, rng, k % 2 ? 3 : 0, mu);
    auto d = random_simplex(9, rng);
    const auto p = plain(spec);
    const Eigen::MatrixXd Sigma = p.C * plain_moment(p, d).inverse() * p.C.transpose();
    const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(Sigma).eigenvalues().maxCoeff();
    const double v = objective_value(d, spec);
    const double upper = top + mu * std::log(static_cast<double>(Sigma.rows()));
    slack = std::max({slack, top - v, v - upper});
    ok = ok && v >= top - 1e-12 && v <= upper + 1e-12;
  }
  return {ok, fmt("largest violation %.3g on 50 instances", std::max(slack, 0.0))};
}

Outcome scheduling_feasibility() {
  const fs::path path = fs::path(MDESIGN_SOURCE_DIR) / "configs" / "scheduling.json";
  auto cfg = harness::parse_config(harness::load_config_json(path), path.parent_path());
  auto problem = harness::build_problem(cfg);
  const auto& chain = *problem.scheduling;
  auto res = harness::execute(cfg, problem);
  const std::size_t cd = chain.cooldown + 1, draws = chain.max_draws + 1;
  std::size_t checked = 0, bad = 0, most = 0;
  for (const auto& log : res.logs) {
    for (const auto& e : log.episodes) {
      ++checked;
      std::vector<std::size_t> times;
      bool consistent = e.trajectory.length() == chain.n_timesteps;
      for (std::size_t h = 0; h < e.trajectory.length(); ++h) {
        // state index = (time * draws + used) * cd + cooldown_left
        const std::size_t x = e.trajectory.steps[h].state;
        const std::size_t left = x % cd, used = (x / cd) % draws, time = x / (cd * draws);
        consistent = consistent && time == h;
        if (e.trajectory.steps[h].action == 1 && used < chain.max_draws && left == 0) times.push_back(h);
        if (h > 0) {
          const std::size_t px = e.trajectory.steps[h - 1].state;
          const bool measured = !times.empty() && times.back() == h - 1;
          consistent = consistent && (x / cd) % draws == (px / cd) % draws + (measured ? 1 : 0);
        }
      }
      bool spaced = true;
      for (std::size_t i = 1; i < times.size(); ++i) spaced = spaced && times[i] - times[i - 1] >= cd;
      most = std::max(most, times.size());
      if (!consistent || !spaced || times.size() > chain.max_draws) ++bad;
    }
  }
  const bool ok = res.errors.empty() && bad == 0 && checked == cfg.reruns * cfg.variants.size() * 128;
  return {ok, std::to_string(checked) + " trajectories checked, " + std::to_string(bad) +
                  " infeasible, at most " + std::to_string(most) + " draws"};
}

Outcome resampling_bound() {
  const std::size_t d = 8, T = 256;
  auto mdp = fixture_a(d);
  auto spec = make_design_spec(std::make_shared<FeatureMap>(selector_features(d)), 1.0,
                               1.0 / static_cast<double>(T), Scalarization::D);
  RunConfig rc;
  rc.objective = spec;
  rc.episodes = T;
  rc.reference_fw.gap_tol = 1e-9;
  rc.reference = std::make_shared<ReferenceSolution>(
      reference_optimum(mdp, DesignObjective(spec), rc.reference_fw));
  auto median_final = [&](VariantKind v) {
    rc.variant = v;
    rc.nonadaptive_mode = NonAdaptiveMode::Sampling;
    std::vector<double> finals;
    for (std::uint64_t r = 0; r < 51; ++r) {
      rc.seed = RngSeed{909, r};
      finals.push_back(run(mdp, rc).episodes.back().suboptimality);
    }
    std::sort(finals.begin(), finals.end());
    return harness::quantile(finals, 0.5);
  };
  const double na = median_final(VariantKind::NonAdaptive);
  const double one = median_final(VariantKind::OneStep);
  const bool ok = na > 0.0 && na >= 5.0 * std::max(one, 0.0);
  return {ok, fmt("median at T=256: NonAdaptive %.3g", na) + fmt(", OneStep %.3g", one)};
}

Outcome reproducibility() {
  auto a = scratch("a"), b = scratch("b"), c = scratch("c");
  harness::json cfg = harness::json::parse(R"({
    "scenario": {"kind": "gridworld", "width": 4, "height": 4, "n_types": 3, "slip": 0.2,
                 "horizon": 6, "layout": ["0120", "1201", "2012", "0120"]},
    "objective": {"scalarization": "A", "sigma": 1.0, "lambda": 1.0},
    "episodes": 24, "reruns": 4, "seed": 31,
    "variants": ["nonadaptive", "tracking", "onestep", "exact"],
    "nonadaptive_mode": "sampling"
  })");
  harness::run_experiment(harness::parse_config(cfg, "."), a);
  // same manifest through the library and through the CLI with a different worker count
  harness::run_experiment(
      harness::parse_config(harness::load_config_json(a / "manifest.json"), a), b);
  const std::string cmd = std::string(MDESIGN_CLI) + " run -q --workers 1 --config " +
                          (a / "manifest.json").string() + " --out " + c.string() + " >/dev/null";
  const int rc = std::system(cmd.c_str());
  const std::string raw = slurp(a / "raw.csv");
  const bool ok = !raw.empty() && rc == 0 && raw == slurp(b / "raw.csv") && raw == slurp(c / "raw.csv");
  return {ok, "raw.csv " + std::to_string(raw.size()) + " bytes; library rerun " +
                  (raw == slurp(b / "raw.csv") ? "identical" : "differs") + ", CLI rerun " +
                  (raw == slurp(c / "raw.csv") ? "identical" : "differs")};
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*check)();
};

const Criterion kCriteria[] = {
    {1, "conversion lemma", conversion_lemma},
    {2, "degenerate-design coverage", degenerate_coverage},
    {3, "rate separation", rate_separation},
    {4, "benchmark floor", benchmark_floor},
    {5, "FW certificate soundness", certificate_soundness},
    {6, "gradient correctness", gradient_correctness},
    {7, "smoothing sandwich", smoothing_sandwich},
    {8, "scheduling feasibility", scheduling_feasibility},
    {9, "resampling bound shape", resampling_bound},
    {10, "reproducibility", reproducibility},
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& c : kCriteria) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %-28s %s  (%.1fs) %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", secs,
                o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
