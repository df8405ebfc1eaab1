#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mdesign/error.hpp"
#include "mdesign/harness.hpp"

namespace fs = std::filesystem;
using namespace mdesign;
using harness::json;

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

struct Overrides {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reruns;
  std::optional<std::size_t> episodes;
  std::vector<std::string> variants;
  std::optional<int> workers;
  bool quiet = false;
};

void add_config_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "experiment config (JSON) or a manifest.json")
      ->required();
  app->add_option("--seed", o.seed, "base seed");
  app->add_option("--reruns", o.reruns, "number of reruns")->check(CLI::PositiveNumber);
  app->add_option("--episodes", o.episodes, "episodes per rerun")->check(CLI::PositiveNumber);
  app->add_option("--variants", o.variants, "comma-separated variant list")->delimiter(',');
  app->add_option("--workers", o.workers, "OpenMP threads (0: default)")
      ->check(CLI::NonNegativeNumber);
  app->add_flag("-q,--quiet", o.quiet, "no progress output");
}

harness::ExperimentConfig resolve(const Overrides& o) {
  json raw = harness::load_config_json(o.config);
  if (!raw.is_object()) throw ConfigError("config: top level must be an object");
  if (o.seed) raw["seed"] = *o.seed;
  if (o.reruns) raw["reruns"] = *o.reruns;
  if (o.episodes) raw["episodes"] = *o.episodes;
  if (!o.variants.empty()) raw["variants"] = o.variants;
  if (o.workers) raw["workers"] = *o.workers;
  return harness::parse_config(raw, fs::path(o.config).parent_path());
}

double floor_from_manifest(const fs::path& dir) {
  const fs::path manifest = dir / "manifest.json";
  if (!fs::exists(manifest)) return 1e-15;
  std::ifstream in(manifest);
  const json m = json::parse(in, nullptr, false);
  if (m.is_discarded() || !m.contains("reference")) return 1e-15;
  return std::max(m["reference"].value("gap", 0.0), 1e-15);
}

template <typename F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential experiment design on known Markov chains"};
  app.require_subcommand(1);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "run an experiment and write its artifacts");
  add_config_flags(run, run_opts);
  run->add_option("--out", run_opts.out, "output directory (default: config 'output')");

  Overrides ref_opts;
  auto* reference = app.add_subcommand("reference", "compute the offline optimum only");
  add_config_flags(reference, ref_opts);
  reference->add_option("--out", ref_opts.out, "write the result as JSON here");

  std::string raw_path, summary_out;
  std::optional<double> sum_floor;
  auto* summarize = app.add_subcommand("summarize", "quantiles and tail slopes of a raw CSV");
  summarize->add_option("raw", raw_path, "raw.csv or a run directory")->required();
  summarize->add_option("--out", summary_out, "directory for summary.csv and slopes.csv");
  summarize->add_option("--floor", sum_floor, "clamp before the log (default: reference gap)");

  std::string summary_path, svg_out;
  std::optional<double> plot_floor;
  auto* plot = app.add_subcommand("plot", "render a summary CSV as a log-log SVG");
  plot->add_option("summary", summary_path, "summary.csv or a run directory")->required();
  plot->add_option("--out", svg_out, "SVG path (default: convergence.svg next to the input)");
  plot->add_option("--floor", plot_floor, "clamp before the log (default: reference gap)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  if (run->parsed()) {
    harness::ExperimentConfig cfg;
    if (int rc = guarded([&] { cfg = resolve(run_opts); return 0; })) return rc;
    fs::path out = run_opts.out.empty() ? fs::path(cfg.output) : fs::path(run_opts.out);
    if (out.empty()) {
      std::cerr << "config error: output: no --out given and the config has no 'output'\n";
      return kConfigError;
    }
    return guarded([&] {
      auto result = harness::run_experiment(cfg, out, run_opts.quiet ? nullptr : &std::cerr);
      for (const auto& e : result.errors) std::cerr << "run failed: " << e << '\n';
      std::cout << out.string() << '\n';
      return result.errors.empty() ? 0 : kRuntimeError;
    });
  }

  if (reference->parsed()) {
    return guarded([&] {
      const auto cfg = resolve(ref_opts);
      const auto problem = harness::build_problem(cfg);
      const auto ref = harness::compute_reference(problem, cfg);
      json j{{"value", ref.value},
             {"gap", ref.gap},
             {"converged", ref.converged},
             {"iterations", ref.iterations},
             {"components", ref.mixture.size()},
             {"config_hash", harness::config_hash(cfg.resolved)}};
      if (ref_opts.out.empty()) {
        std::cout << j.dump(2) << '\n';
      } else {
        std::ofstream(ref_opts.out) << j.dump(2) << '\n';
      }
      return 0;
    });
  }

  if (summarize->parsed()) {
    return guarded([&] {
      fs::path in = raw_path;
      if (fs::is_directory(in)) in /= "raw.csv";
      const fs::path dir = summary_out.empty() ? in.parent_path() : fs::path(summary_out);
      const double floor = sum_floor ? *sum_floor : floor_from_manifest(in.parent_path());
      const auto rows = harness::read_raw_csv(in);
      if (rows.empty()) throw InvalidArgument("no rows in " + in.string());
      const auto summary = harness::summarize(rows);
      const auto slopes = harness::summary_slopes(summary, floor);
      fs::create_directories(dir.empty() ? fs::path(".") : dir);
      harness::write_summary_csv(dir / "summary.csv", summary);
      harness::write_slopes_csv(dir / "slopes.csv", slopes, summary);
      for (const auto& [variant, slope] : slopes) {
        std::printf("%-12s tail slope %+.3f\n", variant.c_str(), slope);
      }
      return 0;
    });
  }

  if (plot->parsed()) {
    return guarded([&] {
      fs::path in = summary_path;
      if (fs::is_directory(in)) in /= "summary.csv";
      const fs::path out = svg_out.empty() ? in.parent_path() / "convergence.svg" : fs::path(svg_out);
      const double floor = plot_floor ? *plot_floor : floor_from_manifest(in.parent_path());
      harness::write_svg(out, harness::render_svg(harness::read_summary_csv(in), floor));
      std::cout << out.string() << '\n';
      return 0;
    });
  }
  return 0;
}
