#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <gtest/gtest.h>

#include "mdesign/error.hpp"
#include "mdesign/harness.hpp"

using namespace mdesign;
using namespace mdesign::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mdesign_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

json selector_config() {
  return json::parse(R"({
    "scenario": {"kind": "selector", "n": 3},
    "objective": {"scalarization": "D", "sigma": 1.0, "lambda": 3.0},
    "episodes": 3,
    "variants": ["onestep"],
    "seed": 1
  })");
}

std::string config_error(const json& raw) {
  try {
    parse_config(raw, ".");
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::vector<double> numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string tok;
  while (in >> tok) {
    for (auto& c : tok) {
      if (c == ',') c = ' ';
    }
    std::stringstream pair(tok);
    double v;
    while (pair >> v) out.push_back(v);
  }
  return out;
}

std::string attribute(const std::string& svg, const std::string& element_prefix,
                      const std::string& name) {
  const auto at = svg.find(element_prefix);
  if (at == std::string::npos) return "";
  const auto key = svg.find(name + "=\"", at);
  const auto start = key + name.size() + 2;
  return svg.substr(start, svg.find('"', start) - start);
}

}  // namespace

// ---------------------------------------------------------------------------
// config

TEST(Config, DefaultsAreResolved) {
  auto cfg = parse_config(selector_config(), ".");
  EXPECT_EQ(cfg.episodes, 3u);
  EXPECT_EQ(cfg.reruns, 1u);
  EXPECT_EQ(cfg.nonadaptive_mode, NonAdaptiveMode::Marginalized);
  EXPECT_LE(cfg.reference_fw.gap_tol, 1e-6);
  EXPECT_EQ(cfg.resolved["reruns"], 1);
  EXPECT_EQ(cfg.resolved["nonadaptive_mode"], "marginalized");
  EXPECT_TRUE(cfg.resolved.contains("fw"));
  EXPECT_TRUE(cfg.resolved.contains("reference"));
  // resolving twice is a fixed point
  EXPECT_EQ(parse_config(cfg.resolved, ".").resolved, cfg.resolved);
}

TEST(Config, ErrorsNameTheField) {
  auto c = selector_config();
  c.erase("episodes");
  EXPECT_NE(config_error(c).find("episodes"), std::string::npos);

  c = selector_config();
  c["variants"] = json::array({"greedy"});
  EXPECT_NE(config_error(c).find("variants"), std::string::npos);

  c = selector_config();
  c["variants"] = json::array();
  EXPECT_NE(config_error(c).find("variants"), std::string::npos);

  c = selector_config();
  c["reruns"] = 0;
  EXPECT_NE(config_error(c).find("reruns"), std::string::npos);

  c = selector_config();
  c["reference"] = {{"gap_tol", 1e-3}};
  EXPECT_NE(config_error(c).find("reference.gap_tol"), std::string::npos);

  c = selector_config();
  c["objective"]["lambda"] = -1.0;
  EXPECT_NE(config_error(c).find("objective.lambda"), std::string::npos);

  c = selector_config();
  c["objective"]["scalarization"] = "Q";
  EXPECT_NE(config_error(c).find("objective.scalarization"), std::string::npos);

  c = selector_config();
  c["scenario"]["kind"] = "maze";
  EXPECT_NE(config_error(c).find("scenario.kind"), std::string::npos);

  c = selector_config();
  c["scenario"] = {{"kind", "gridworld"}, {"width", 2}, {"height", 2}, {"n_types", 2}};
  EXPECT_NE(config_error(c).find("scenario.layout"), std::string::npos);

  c = selector_config();
  c["uncertain_oracle"] = true;
  EXPECT_NE(config_error(c).find("uncertain_oracle"), std::string::npos);

  c = selector_config();
  c.erase("scenario");
  EXPECT_NE(config_error(c).find("scenario"), std::string::npos);
}

TEST(Config, GridworldLayout) {
  auto c = selector_config();
  c["scenario"] = json::parse(R"({"kind": "gridworld", "width": 3, "height": 2, "n_types": 2,
                                 "slip": 0.1, "horizon": 4, "layout": ["01.", "10."]})");
  auto cfg = parse_config(c, ".");
  auto p = build_problem(cfg);
  EXPECT_EQ(p.mdp.n_states(), 6u);
  EXPECT_EQ(p.mdp.horizon(), 4u);
  EXPECT_EQ(p.features->dim(), 2u);

  c["scenario"]["layout"] = json::array({"01.", "1x."});
  EXPECT_NE(config_error(c).find("scenario.layout"), std::string::npos);
}

TEST(Config, CustomScenarioReadsCsv) {
  auto dir = scratch("custom");
  std::ofstream(dir / "P.csv") << "0,1\n1,0\n1,0\n0,1\n";
  std::ofstream(dir / "phi.csv") << "1,0\n0,1\n1,1\n0,0.5\n";
  json c = json::parse(R"({
    "scenario": {"kind": "custom", "n_states": 2, "n_actions": 2, "horizon": 2,
                 "transitions": {"csv": "P.csv"},
                 "features": {"kind": "dense", "table": {"csv": "phi.csv"}}},
    "objective": {"scalarization": "A"},
    "episodes": 4
  })");
  auto cfg = parse_config(c, dir);
  auto p = build_problem(cfg);
  EXPECT_TRUE(p.mdp.is_deterministic());
  EXPECT_EQ(p.features->table()(2, 1), 1.0);
  // the resolved config carries the matrices, not the file names
  EXPECT_TRUE(cfg.resolved["scenario"]["transitions"].is_array());

  std::ofstream(dir / "bad.csv") << "0,x\n";
  c["scenario"]["transitions"] = {{"csv", "bad.csv"}};
  try {
    parse_config(c, dir);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("transitions"), std::string::npos);
  }
}

TEST(Config, HashIsStableAndSensitive) {
  auto a = parse_config(selector_config(), ".");
  auto b = parse_config(selector_config(), ".");
  EXPECT_EQ(config_hash(a.resolved), config_hash(b.resolved));
  EXPECT_EQ(config_hash(a.resolved).size(), 16u);
  auto c = selector_config();
  c["seed"] = 2;
  EXPECT_NE(config_hash(parse_config(c, ".").resolved), config_hash(a.resolved));
}

TEST(Config, SyntheticFamilyNeedsScheduling) {
  auto c = selector_config();
  c["objective"]["family"] = {{"synthetic_rates", {1.0, 2.0}}};
  EXPECT_NE(config_error(c).find("family"), std::string::npos);

  c = json::parse(R"({
    "scenario": {"kind": "scheduling", "n_timesteps": 12, "max_draws": 2, "cooldown": 1, "n_basis": 4},
    "objective": {"scalarization": "A", "family": {"synthetic_rates": [1.0, 2.0, 3.0]}},
    "episodes": 2
  })");
  auto p = build_problem(parse_config(c, "."));
  ASSERT_TRUE(std::holds_alternative<RobustSpec>(p.objective));
  EXPECT_EQ(std::get<RobustSpec>(p.objective).family.size(), 3u);
  EXPECT_TRUE(p.scheduling.has_value());
}

// ---------------------------------------------------------------------------
// statistics

TEST(Summary, QuantilesInterpolateLinearly) {
  std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0.1), 1.3);
  EXPECT_DOUBLE_EQ(quantile(v, 0.9), 3.7);
  EXPECT_DOUBLE_EQ(quantile({5.0}, 0.1), 5.0);
}

TEST(Summary, PerVariantEpisodeQuantiles) {
  std::vector<RawRow> rows;
  for (std::size_t r = 0; r < 11; ++r) {
    for (std::size_t t = 1; t <= 3; ++t) {
      rows.push_back({"b", r, t, 0.0, static_cast<double>(r) * t, 1, 0.0});
      rows.push_back({"a", r, t, 0.0, 1.0, 1, 0.0});
    }
  }
  auto s = summarize(rows);
  ASSERT_EQ(s.size(), 6u);
  EXPECT_EQ(s[0].variant, "b");
  EXPECT_EQ(s[3].variant, "a");
  EXPECT_DOUBLE_EQ(s[1].median, 10.0);
  EXPECT_DOUBLE_EQ(s[1].q10, 2.0);
  EXPECT_DOUBLE_EQ(s[1].q90, 18.0);
  for (const auto& r : s) {
    EXPECT_LE(r.q10, r.median);
    EXPECT_LE(r.median, r.q90);
  }
}

TEST(Summary, TailSlopes) {
  std::vector<double> inv_sq, inv_sqrt, flat;
  for (int t = 1; t <= 128; ++t) {
    inv_sq.push_back(3.0 / (t * t));
    inv_sqrt.push_back(0.7 / std::sqrt(t));
    flat.push_back(0.25);
  }
  EXPECT_NEAR(tail_slope(inv_sq, 1e-15), -2.0, 0.01);
  EXPECT_NEAR(tail_slope(inv_sqrt, 1e-15), -0.5, 0.01);
  EXPECT_NEAR(tail_slope(flat, 1e-15), 0.0, 1e-12);
  EXPECT_THROW(tail_slope({1.0}, 1e-15), InvalidArgument);
}

TEST(Summary, NonPositiveValuesClampAtTheFloor) {
  std::vector<double> v(20, 0.0);
  for (int i = 0; i < 10; ++i) v[i] = 1.0;
  v[15] = -3.0;
  EXPECT_NEAR(tail_slope(v, 1e-6), 0.0, 1e-12);
}

TEST(Summary, CsvRoundTrip) {
  auto dir = scratch("csv");
  std::vector<RawRow> rows{{"onestep", 0, 1, -1.25, 0.1 / 3.0, 1, 0.0},
                           {"exact", 2, 7, 3.0e-300, -1e-17, 42, 1.5}};
  write_raw_csv(dir / "raw.csv", rows);
  auto back = read_raw_csv(dir / "raw.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].variant, "exact");
  EXPECT_EQ(back[1].rerun, 2u);
  EXPECT_EQ(back[1].episode, 7u);
  EXPECT_EQ(back[1].fw_iters, 42u);
  EXPECT_EQ(back[0].suboptimality, rows[0].suboptimality);
  EXPECT_EQ(back[1].objective_value, rows[1].objective_value);

  auto s = summarize(rows);
  write_summary_csv(dir / "summary.csv", s);
  auto s2 = read_summary_csv(dir / "summary.csv");
  ASSERT_EQ(s2.size(), s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_EQ(s2[i].variant, s[i].variant);
    EXPECT_EQ(s2[i].median, s[i].median);
  }
  std::ofstream(dir / "broken.csv") << "variant,rerun\n";
  EXPECT_ANY_THROW(read_raw_csv(dir / "broken.csv"));
}

// ---------------------------------------------------------------------------
// plot

TEST(Plot, SingleVariantSingleEpisode) {
  auto svg = render_svg({{"onestep", 1, 0.1, 0.2, 0.3}}, 1e-15);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  auto pts = numbers(attribute(svg, "data-role=\"median\"", "points"));
  EXPECT_EQ(pts.size(), 2u);
  EXPECT_THROW(render_svg({}, 1e-15), InvalidArgument);
}

TEST(Plot, DeterministicOutput) {
  std::vector<SummaryRow> s;
  for (std::size_t t = 1; t <= 50; ++t) s.push_back({"v", t, 0.5 / t, 1.0 / t, 2.0 / t});
  EXPECT_EQ(render_svg(s, 1e-15), render_svg(s, 1e-15));
}

TEST(Plot, BandsInvertToTheQuantiles) {
  std::vector<SummaryRow> s;
  for (std::size_t t = 1; t <= 40; ++t) {
    s.push_back({"fast", t, 0.5 / (t * t), 1.0 / (t * t), 2.0 / (t * t)});
    s.push_back({"slow", t, 0.5 / std::sqrt(t), 1.0 / std::sqrt(t), 2.0 / std::sqrt(t)});
  }
  const double floor = 1e-12;
  auto svg = render_svg(s, floor);
  auto lx = numbers(attribute(svg, "<svg", "data-log-x"));
  auto ly = numbers(attribute(svg, "<svg", "data-log-y"));
  auto box = numbers(attribute(svg, "<svg", "data-box"));
  ASSERT_EQ(box.size(), 4u);
  auto inv_x = [&](double px) { return lx[0] + (px - box[0]) / (box[2] - box[0]) * (lx[1] - lx[0]); };
  auto inv_y = [&](double py) { return ly[0] + (box[3] - py) / (box[3] - box[1]) * (ly[1] - ly[0]); };
  for (const std::string v : {"fast", "slow"}) {
    auto band = numbers(attribute(svg, "data-variant=\"" + v + "\" data-role=\"band\"", "points"));
    ASSERT_EQ(band.size(), 2u * 2u * 40u);
    for (std::size_t t = 1; t <= 40; ++t) {
      const auto& row = s[2 * (t - 1) + (v == "slow")];
      const std::size_t up = 2 * (t - 1), down = 2 * (2 * 40 - t);
      EXPECT_NEAR(inv_x(band[up]), std::log10(static_cast<double>(t)), 1e-5);
      EXPECT_NEAR(inv_y(band[up + 1]), std::log10(row.q90), 1e-5);
      EXPECT_NEAR(inv_x(band[down]), std::log10(static_cast<double>(t)), 1e-5);
      EXPECT_NEAR(inv_y(band[down + 1]), std::log10(row.q10), 1e-5);
    }
  }
}

// ---------------------------------------------------------------------------
// end to end

TEST(Experiment, SelectorRunWritesEveryArtifact) {
  auto dir = scratch("selector");
  auto cfg = parse_config(selector_config(), ".");
  auto res = run_experiment(cfg, dir);
  ASSERT_TRUE(res.errors.empty());
  ASSERT_EQ(res.rows.size(), 3u);
  EXPECT_LE(std::abs(res.rows.back().suboptimality), 1e-9);
  for (const char* f : {"raw.csv", "timing.csv", "summary.csv", "slopes.csv", "convergence.svg",
                        "manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  auto m = json::parse(slurp(dir / "manifest.json"));
  for (const char* k : {"config", "config_hash", "library_version", "seeds", "reference",
                        "artifacts", "warnings", "errors", "status"}) {
    EXPECT_TRUE(m.contains(k)) << k;
  }
  EXPECT_EQ(m["status"], "ok");
  EXPECT_EQ(m["config_hash"], config_hash(cfg.resolved));
  EXPECT_TRUE(m["reference"].contains("gap"));
}

TEST(Experiment, RerunFromManifestIsByteIdentical) {
  auto a = scratch("repro_a");
  auto b = scratch("repro_b");
  auto c = selector_config();
  c["scenario"] = json::parse(R"({"kind": "gridworld", "width": 3, "height": 3, "n_types": 3,
                                 "slip": 0.2, "horizon": 5,
                                 "layout": ["012", "120", "201"]})");
  c["episodes"] = 12;
  c["reruns"] = 3;
  c["variants"] = {"nonadaptive", "onestep", "exact"};
  c["nonadaptive_mode"] = "sampling";
  run_experiment(parse_config(c, "."), a);
  run_experiment(parse_config(load_config_json(a / "manifest.json"), a), b);
  EXPECT_EQ(slurp(a / "raw.csv"), slurp(b / "raw.csv"));
}

TEST(Experiment, WorkerCountDoesNotChangeResults) {
  auto c = selector_config();
  c["scenario"] = json::parse(R"({"kind": "gridworld", "width": 3, "height": 3, "n_types": 3,
                                 "slip": 0.3, "horizon": 5,
                                 "layout": ["012", "120", "201"]})");
  c["episodes"] = 10;
  c["reruns"] = 4;
  c["variants"] = {"tracking", "onestep"};
  c["workers"] = 1;
  auto serial = parse_config(c, ".");
  c["workers"] = 4;
  auto parallel = parse_config(c, ".");
  auto p = build_problem(serial);
  auto r1 = execute(serial, p);
  auto r2 = execute(parallel, p);
  ASSERT_EQ(r1.rows.size(), r2.rows.size());
  for (std::size_t i = 0; i < r1.rows.size(); ++i) {
    EXPECT_EQ(r1.rows[i].variant, r2.rows[i].variant);
    EXPECT_EQ(r1.rows[i].objective_value, r2.rows[i].objective_value);
  }
}

TEST(Experiment, DeterministicGridworldRerunsCoincide) {
  auto c = selector_config();
  c["scenario"] = json::parse(R"({"kind": "gridworld", "width": 3, "height": 3, "n_types": 3,
                                 "slip": 0.0, "horizon": 5,
                                 "layout": ["012", "120", "201"]})");
  c["episodes"] = 8;
  c["reruns"] = 5;
  auto cfg = parse_config(c, ".");
  auto res = execute(cfg, build_problem(cfg));
  for (std::size_t i = 0; i < res.rows.size(); ++i) {
    const auto& first = res.rows[i % 8];
    EXPECT_EQ(res.rows[i].objective_value, first.objective_value);
  }
}

#ifdef MDESIGN_CLI
TEST(Cli, ExitCodes) {
  auto dir = scratch("cli");
  std::ofstream(dir / "bad.json") << R"({"scenario": {"kind": "selector", "n": 3}, "objective": {}})";
  const std::string cli = MDESIGN_CLI;
  const std::string bad = cli + " run -q --config " + (dir / "bad.json").string() + " --out " +
                          (dir / "o").string() + " 2>/dev/null";
  EXPECT_EQ(WEXITSTATUS(std::system(bad.c_str())), 2);
  std::ofstream(dir / "good.json") << selector_config().dump();
  const std::string good = cli + " run -q --config " + (dir / "good.json").string() + " --out " +
                           (dir / "o").string() + " >/dev/null";
  EXPECT_EQ(WEXITSTATUS(std::system(good.c_str())), 0);
  const std::string sum = cli + " summarize " + (dir / "o").string() + " >/dev/null";
  EXPECT_EQ(WEXITSTATUS(std::system(sum.c_str())), 0);
  const std::string plot = cli + " plot " + (dir / "o").string() + " >/dev/null";
  EXPECT_EQ(WEXITSTATUS(std::system(plot.c_str())), 0);
  const std::string ref = cli + " reference --config " + (dir / "good.json").string() +
                          " --out " + (dir / "ref.json").string();
  EXPECT_EQ(WEXITSTATUS(std::system(ref.c_str())), 0);
  EXPECT_TRUE(json::parse(slurp(dir / "ref.json")).contains("gap"));
  EXPECT_EQ(WEXITSTATUS(std::system((cli + " bogus 2>/dev/null >/dev/null").c_str())), 2);
}
#endif
