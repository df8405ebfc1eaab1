#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mdesign/error.hpp"
#include "mdesign/harness.hpp"

namespace mdesign::harness {

namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

std::vector<std::vector<double>> read_csv_matrix(const fs::path& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) fail(field, "cannot open CSV file '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        fail(field, "non-numeric CSV entry '" + cell + "' in " + path.string());
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Replaces every {"csv": path} object by the matrix it names.
void inline_csv(json& node, const fs::path& base_dir, const std::string& field) {
  if (node.is_object()) {
    if (node.size() == 1 && node.contains("csv") && node["csv"].is_string()) {
      fs::path p = node["csv"].get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      node = read_csv_matrix(p, field);
      return;
    }
    for (auto it = node.begin(); it != node.end(); ++it) {
      inline_csv(it.value(), base_dir, field.empty() ? it.key() : field + "." + it.key());
    }
  } else if (node.is_array()) {
    for (std::size_t i = 0; i < node.size(); ++i) {
      inline_csv(node[i], base_dir, field + "[" + std::to_string(i) + "]");
    }
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& field) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail(field + "." + key, "has the wrong type");
  }
}

template <typename T>
T get_req(const json& obj, const char* key, const std::string& field) {
  if (!obj.contains(key)) fail(field + "." + key, "is required");
  return get_or<T>(obj, key, T{}, field);
}

std::size_t positive(const json& obj, const char* key, std::size_t fallback,
                     const std::string& field, bool required = false) {
  if (required && !obj.contains(key)) fail(field + "." + key, "is required");
  const auto& v = obj.contains(key) ? obj.at(key) : json(fallback);
  if (!v.is_number_integer() || v.get<long long>() < 1) {
    fail(field + "." + key, "must be a positive integer");
  }
  return v.get<std::size_t>();
}

Eigen::MatrixXd to_matrix(const json& node, const std::string& field) {
  if (!node.is_array() || node.empty()) fail(field, "must be a nonempty matrix");
  const auto rows = static_cast<Eigen::Index>(node.size());
  if (!node[0].is_array() || node[0].empty()) fail(field, "must be a nonempty matrix");
  const auto cols = static_cast<Eigen::Index>(node[0].size());
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& r = node[static_cast<std::size_t>(i)];
    if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != cols) {
      fail(field, "rows must all have " + std::to_string(cols) + " entries");
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      if (!r[static_cast<std::size_t>(j)].is_number()) fail(field, "entries must be numbers");
      M(i, j) = r[static_cast<std::size_t>(j)].get<double>();
    }
  }
  return M;
}

FWConfig parse_fw(const json& node, FWConfig defaults, const std::string& field) {
  FWConfig cfg = defaults;
  if (node.is_null()) return cfg;
  if (!node.is_object()) fail(field, "must be an object");
  cfg.gap_tol = get_or<double>(node, "gap_tol", cfg.gap_tol, field);
  if (!(cfg.gap_tol > 0.0)) fail(field + ".gap_tol", "must be positive");
  cfg.max_iters = positive(node, "max_iters", cfg.max_iters, field);
  cfg.linesearch_tol = get_or<double>(node, "linesearch_tol", cfg.linesearch_tol, field);
  if (!(cfg.linesearch_tol > 0.0)) fail(field + ".linesearch_tol", "must be positive");
  const auto rule = get_or<std::string>(node, "step_rule", "line_search", field);
  if (rule == "line_search") {
    cfg.step_rule = StepRule::LineSearch;
  } else if (rule == "fixed") {
    cfg.step_rule = StepRule::Fixed;
  } else {
    fail(field + ".step_rule", "must be 'line_search' or 'fixed'");
  }
  cfg.fixed_step = get_or<double>(node, "fixed_step", cfg.fixed_step, field);
  if (!(cfg.fixed_step > 0.0 && cfg.fixed_step <= 1.0)) {
    fail(field + ".fixed_step", "must lie in (0, 1]");
  }
  return cfg;
}

json fw_to_json(const FWConfig& cfg) {
  return json{{"gap_tol", cfg.gap_tol},
              {"max_iters", cfg.max_iters},
              {"linesearch_tol", cfg.linesearch_tol},
              {"step_rule", cfg.step_rule == StepRule::LineSearch ? "line_search" : "fixed"},
              {"fixed_step", cfg.fixed_step}};
}

std::vector<int> parse_layout(const json& node, std::size_t width, std::size_t height,
                              std::size_t n_types, const std::string& field) {
  // rows listed top first; strings use '.' for featureless cells
  if (!node.is_array() || node.size() != height) {
    fail(field, "needs " + std::to_string(height) + " rows");
  }
  std::vector<int> types(width * height, -1);
  for (std::size_t i = 0; i < height; ++i) {
    const std::size_t row = height - 1 - i;
    const auto& r = node[i];
    for (std::size_t col = 0; col < width; ++col) {
      int t = -1;
      if (r.is_string()) {
        const auto s = r.get<std::string>();
        if (s.size() != width) fail(field, "row " + std::to_string(i) + " needs " +
                                               std::to_string(width) + " cells");
        const char c = s[col];
        if (c == '.') {
          t = -1;
        } else if (c >= '0' && c <= '9') {
          t = c - '0';
        } else {
          fail(field, std::string("unknown cell type '") + c + "'");
        }
      } else if (r.is_array() && r.size() == width && r[col].is_number_integer()) {
        t = r[col].get<int>();
      } else {
        fail(field, "row " + std::to_string(i) + " must be a string or integer array of width " +
                        std::to_string(width));
      }
      if (t >= static_cast<int>(n_types) || t < -1) {
        fail(field, "cell type " + std::to_string(t) + " outside [-1, n_types)");
      }
      types[row * width + col] = t;
    }
  }
  return types;
}

}  // namespace

// ---------------------------------------------------------------------------

json load_config_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config: invalid JSON in '" + path.string() + "': " + e.what());
  }
  if (raw.is_object() && raw.contains("config") && raw.contains("config_hash")) {
    return raw.at("config");
  }
  return raw;
}

ExperimentConfig load_config(const fs::path& path) {
  return parse_config(load_config_json(path), path.parent_path());
}

ExperimentConfig parse_config(const json& raw, const fs::path& base_dir) {
  if (!raw.is_object()) throw ConfigError("config: top level must be an object");
  json r = raw;
  inline_csv(r, base_dir, "");

  ExperimentConfig cfg;
  if (!r.contains("scenario") || !r["scenario"].is_object()) {
    fail("scenario", "is required and must be an object");
  }
  if (!r.contains("objective") || !r["objective"].is_object()) {
    fail("objective", "is required and must be an object");
  }
  cfg.episodes = positive(r, "episodes", 0, "config", true);
  cfg.reruns = positive(r, "reruns", 1, "config");
  r["reruns"] = cfg.reruns;
  if (r.contains("seed") && !r["seed"].is_number_unsigned() &&
      !(r["seed"].is_number_integer() && r["seed"].get<std::int64_t>() >= 0)) {
    fail("seed", "must be an unsigned 64-bit integer");
  }
  cfg.seed = get_or<std::uint64_t>(r, "seed", 0, "config");
  r["seed"] = cfg.seed;
  cfg.workers = get_or<int>(r, "workers", 0, "config");
  if (cfg.workers < 0) fail("workers", "must be nonnegative");

  if (!r.contains("variants")) r["variants"] = json::array({"onestep"});
  if (!r["variants"].is_array() || r["variants"].empty()) {
    fail("variants", "must list at least one variant");
  }
  for (const auto& v : r["variants"]) {
    if (!v.is_string()) fail("variants", "entries must be strings");
    try {
      cfg.variants.push_back(parse_variant(v.get<std::string>()));
    } catch (const InvalidArgument& e) {
      fail("variants", e.what());
    }
  }

  const auto mode = get_or<std::string>(r, "nonadaptive_mode", "marginalized", "config");
  if (mode == "marginalized") {
    cfg.nonadaptive_mode = NonAdaptiveMode::Marginalized;
  } else if (mode == "sampling") {
    cfg.nonadaptive_mode = NonAdaptiveMode::Sampling;
  } else {
    fail("nonadaptive_mode", "must be 'marginalized' or 'sampling'");
  }
  r["nonadaptive_mode"] = mode;

  FWConfig inner;
  inner.gap_tol = 1e-4;
  inner.max_iters = 2000;
  cfg.fw = parse_fw(r.value("fw", json()), inner, "fw");
  r["fw"] = fw_to_json(cfg.fw);
  FWConfig tight;
  tight.gap_tol = 1e-6;
  tight.max_iters = 100000;
  cfg.reference_fw = parse_fw(r.value("reference", json()), tight, "reference");
  if (cfg.reference_fw.gap_tol > 1e-6) fail("reference.gap_tol", "must be at most 1e-6");
  r["reference"] = fw_to_json(cfg.reference_fw);

  cfg.uncertain_oracle = get_or<bool>(r, "uncertain_oracle", false, "config");
  cfg.drop_warm_start = get_or<bool>(r, "drop_warm_start", false, "config");
  cfg.record_wall_time = get_or<bool>(r, "record_wall_time", false, "config");
  cfg.output = get_or<std::string>(r, "output", "", "config");
  r["uncertain_oracle"] = cfg.uncertain_oracle;
  r["drop_warm_start"] = cfg.drop_warm_start;
  r["record_wall_time"] = cfg.record_wall_time;

  cfg.resolved = std::move(r);
  // Scenario and objective are checked by constructing them once.
  build_problem(cfg);
  return cfg;
}

std::string config_hash(const json& resolved) {
  const std::string text = resolved.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<Eigen::MatrixXd> synthetic_decay_family(const Eigen::MatrixXd& time_basis,
                                                    const std::vector<double>& rates) {
  const auto n = time_basis.rows();
  std::vector<Eigen::MatrixXd> out;
  for (double rate : rates) {
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2, time_basis.cols());
    for (Eigen::Index t = 0; t < n; ++t) {
      const double s = n > 1 ? static_cast<double>(t) / static_cast<double>(n - 1) : 0.0;
      const double w = std::exp(-rate * s);
      C.row(0) += w * time_basis.row(t);
      C.row(1) += s * w * time_basis.row(t);
    }
    for (Eigen::Index i = 0; i < 2; ++i) {
      const double norm = C.row(i).norm();
      if (norm > 0.0) C.row(i) /= norm;
    }
    out.push_back(std::move(C));
  }
  return out;
}

Problem build_problem(const ExperimentConfig& cfg) {
  const json& sc = cfg.resolved.at("scenario");
  const json& ob = cfg.resolved.at("objective");
  const std::string kind = get_req<std::string>(sc, "kind", "scenario");

  std::optional<TabularMdp> mdp;
  std::shared_ptr<const FeatureMap> features;
  std::optional<SchedulingChain> scheduling;
  Eigen::MatrixXd time_basis;

  try {
    if (kind == "gridworld") {
      const auto width = positive(sc, "width", 0, "scenario", true);
      const auto height = positive(sc, "height", 0, "scenario", true);
      const auto horizon = positive(sc, "horizon", 20, "scenario");
      const auto n_types = positive(sc, "n_types", 0, "scenario", true);
      const double slip = get_or<double>(sc, "slip", 0.0, "scenario");
      if (!(slip >= 0.0 && slip <= 1.0)) fail("scenario.slip", "must lie in [0, 1]");
      if (!sc.contains("layout")) fail("scenario.layout", "is required");
      auto types = parse_layout(sc["layout"], width, height, n_types, "scenario.layout");
      auto g = make_gridworld(width, height, slip, n_types, types, horizon);
      features = std::make_shared<FeatureMap>(unit_by_type(g.cell_types, n_types, 4));
      mdp = std::move(g.mdp);
    } else if (kind == "scheduling") {
      const auto n_t = positive(sc, "n_timesteps", 0, "scenario", true);
      const auto draws = positive(sc, "max_draws", 0, "scenario", true);
      const auto cooldown = get_or<std::size_t>(sc, "cooldown", 0, "scenario");
      const auto n_basis = positive(sc, "n_basis", 24, "scenario");
      const double bw = get_or<double>(sc, "bandwidth", 0.06, "scenario");
      const double scale = get_or<double>(sc, "scale", 1.0, "scenario");
      if (!(bw > 0.0)) fail("scenario.bandwidth", "must be positive");
      scheduling = make_scheduling_chain(n_t, draws, cooldown);
      features = std::make_shared<FeatureMap>(scheduling_features(*scheduling, n_basis, bw, scale));
      time_basis = scheduling_time_basis(n_t, n_basis, bw, scale);
      mdp = scheduling->mdp;
    } else if (kind == "selector") {
      const auto n = positive(sc, "n", 0, "scenario", true);
      const auto horizon = positive(sc, "horizon", 1, "scenario");
      mdp = make_selector_chain(n, horizon);
      features = std::make_shared<FeatureMap>(selector_features(n));
    } else if (kind == "two_state") {
      const auto horizon = positive(sc, "horizon", 2, "scenario");
      mdp = make_two_state_chain(horizon);
    } else if (kind == "custom") {
      const auto S = positive(sc, "n_states", 0, "scenario", true);
      const auto A = positive(sc, "n_actions", 0, "scenario", true);
      const auto horizon = positive(sc, "horizon", 0, "scenario", true);
      if (!sc.contains("transitions")) fail("scenario.transitions", "is required");
      const Eigen::MatrixXd P = to_matrix(sc["transitions"], "scenario.transitions");
      if (P.rows() != static_cast<Eigen::Index>(S * A) || P.cols() != static_cast<Eigen::Index>(S)) {
        fail("scenario.transitions", "must be (n_states * n_actions) x n_states");
      }
      std::vector<double> dense(S * A * S);
      for (std::size_t i = 0; i < S * A; ++i) {
        for (std::size_t j = 0; j < S; ++j) {
          dense[i * S + j] = P(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
      }
      std::vector<double> initial(S, 0.0);
      initial[0] = 1.0;
      if (sc.contains("initial")) {
        initial = get_or<std::vector<double>>(sc, "initial", initial, "scenario");
      }
      mdp = TabularMdp::from_dense(S, A, horizon, dense, initial);
    } else {
      fail("scenario.kind", "unknown scenario '" + kind +
                                "' (expected gridworld, scheduling, selector, two_state or custom)");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail("scenario", e.what());
  }

  // Explicit feature maps override the scenario default.
  if (sc.contains("features")) {
    const json& f = sc["features"];
    const std::string fkind = get_req<std::string>(f, "kind", "scenario.features");
    try {
      if (fkind == "dense") {
        if (!f.contains("table")) fail("scenario.features.table", "is required");
        const Eigen::MatrixXd T = to_matrix(f["table"], "scenario.features.table");
        if (T.rows() != static_cast<Eigen::Index>(mdp->n_pairs())) {
          fail("scenario.features.table", "needs one row per state-action pair");
        }
        features = std::make_shared<FeatureMap>(mdp->n_states(), mdp->n_actions(), FeatureMatrix(T));
      } else if (fkind == "unit_by_type") {
        const auto n_types = positive(f, "n_types", 0, "scenario.features", true);
        auto types = get_req<std::vector<int>>(f, "types", "scenario.features");
        if (types.size() != mdp->n_states()) {
          fail("scenario.features.types", "needs one entry per state");
        }
        features = std::make_shared<FeatureMap>(unit_by_type(types, n_types, mdp->n_actions()));
      } else if (fkind == "rbf") {
        if (!f.contains("coords") || !f.contains("centers")) {
          fail("scenario.features", "rbf needs coords and centers");
        }
        const Eigen::MatrixXd coords = to_matrix(f["coords"], "scenario.features.coords");
        const Eigen::MatrixXd centers = to_matrix(f["centers"], "scenario.features.centers");
        if (coords.rows() != static_cast<Eigen::Index>(mdp->n_states())) {
          fail("scenario.features.coords", "needs one row per state");
        }
        const double bw = get_or<double>(f, "bandwidth", 1.0, "scenario.features");
        const double scale = get_or<double>(f, "scale", 1.0, "scenario.features");
        features = std::make_shared<FeatureMap>(
            rbf_features(coords, centers, bw, scale, mdp->n_actions()));
      } else {
        fail("scenario.features.kind", "must be dense, unit_by_type or rbf");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      fail("scenario.features", e.what());
    }
  }
  if (!features) fail("scenario.features", "is required for this scenario");

  // Objective
  const std::string scal_name = get_or<std::string>(ob, "scalarization", "D", "objective");
  Scalarization scal;
  try {
    scal = parse_scalarization(scal_name);
  } catch (const InvalidArgument& e) {
    fail("objective.scalarization", e.what());
  }
  const double lambda = get_or<double>(ob, "lambda", 1.0, "objective");
  if (!(lambda > 0.0)) fail("objective.lambda", "must be positive");
  const double rho = lambda / static_cast<double>(cfg.episodes);
  const double mu = get_or<double>(ob, "mu", 0.0, "objective");
  if (!(mu >= 0.0)) fail("objective.mu", "must be nonnegative");

  auto sigma_table = [&](const json& node, const std::string& field) {
    std::vector<double> sigma;
    if (node.is_number()) {
      sigma.assign(features->n_pairs(), node.get<double>());
    } else if (node.is_array() && node.size() == features->n_pairs()) {
      for (const auto& v : node) {
        if (!v.is_number()) fail(field, "entries must be numbers");
        sigma.push_back(v.get<double>());
      }
    } else {
      fail(field, "must be a number or one entry per state-action pair");
    }
    for (double s : sigma) {
      if (!(s > 0.0)) fail(field, "must be positive");
    }
    return sigma;
  };
  auto make_spec = [&](const json& member, const std::string& field) {
    DesignSpec spec;
    spec.features = features;
    spec.sigma = sigma_table(member.contains("sigma") ? member["sigma"] : ob.value("sigma", json(1.0)),
                             field + ".sigma");
    spec.rho = rho;
    spec.scalarization = scal;
    spec.mu = mu;
    const json* C = member.contains("functional") ? &member["functional"]
                    : ob.contains("functional")    ? &ob["functional"]
                                                   : nullptr;
    if (C) spec.functional = to_matrix(*C, field + ".functional");
    return spec;
  };

  Problem out{std::move(*mdp), features, DesignSpec{}, scheduling, {}, {}};
  try {
    if (ob.contains("family")) {
      const json& fam = ob["family"];
      RobustSpec rspec;
      if (fam.is_object() && fam.contains("synthetic_rates")) {
        if (!scheduling) fail("objective.family", "synthetic_rates needs the scheduling scenario");
        const auto rates =
            get_req<std::vector<double>>(fam, "synthetic_rates", "objective.family");
        if (rates.empty()) fail("objective.family.synthetic_rates", "must be nonempty");
        for (auto& C : synthetic_decay_family(time_basis, rates)) {
          DesignSpec spec = make_spec(json::object(), "objective");
          spec.functional = std::move(C);
          rspec.family.push_back(std::move(spec));
        }
      } else if (fam.is_array() && !fam.empty()) {
        for (std::size_t i = 0; i < fam.size(); ++i) {
          rspec.family.push_back(
              make_spec(fam[i], "objective.family[" + std::to_string(i) + "]"));
        }
      } else {
        fail("objective.family", "must be a nonempty list or {synthetic_rates: [...]}");
      }
      for (const auto& s : rspec.family) {
        for (auto& w : s.validate()) out.warnings.push_back(w);
      }
      rspec.validate();
      out.objective = std::move(rspec);
    } else {
      DesignSpec spec = make_spec(json::object(), "objective");
      out.warnings = spec.validate();
      out.objective = std::move(spec);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail("objective", e.what());
  }

  if (cfg.resolved.contains("gamma_schedule")) {
    const json& gs = cfg.resolved["gamma_schedule"];
    if (!std::holds_alternative<RobustSpec>(out.objective)) {
      fail("gamma_schedule", "needs objective.family");
    }
    const auto gkind = get_req<std::string>(gs, "kind", "gamma_schedule");
    if (gkind != "shrinking") fail("gamma_schedule.kind", "only 'shrinking' is available");
    const auto& rspec = std::get<RobustSpec>(out.objective);
    const auto center = get_or<std::size_t>(gs, "center", 0, "gamma_schedule");
    if (center >= rspec.family.size()) fail("gamma_schedule.center", "outside the family");
    const double halflife = get_or<double>(gs, "halflife", 16.0, "gamma_schedule");
    if (!(halflife > 0.0)) fail("gamma_schedule.halflife", "must be positive");
    out.gamma_schedule = shrinking_family_schedule(rspec, center, halflife);
  }
  if (cfg.uncertain_oracle && !std::holds_alternative<RobustSpec>(out.objective)) {
    fail("uncertain_oracle", "needs objective.family");
  }
  return out;
}

}  // namespace mdesign::harness
