#include "mdesign/chain.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mdesign/error.hpp"

namespace mdesign {

namespace {

void check_distribution(std::span<const double> probs, const char* what) {
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw InvalidArgument(std::string(what) + ": negative or non-finite probability");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kDistributionTol) {
    std::ostringstream msg;
    msg << what << ": probabilities sum to " << total << ", expected 1";
    throw InvalidArgument(msg.str());
  }
}

std::uint64_t hash_policy(const NonstationaryPolicy& policy) {
  // FNV-1a over the raw bit patterns of every row, so both storage forms agree
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t step = 0; step < policy.horizon(); ++step) {
    for (std::size_t x = 0; x < policy.n_states(); ++x) {
      for (double p : policy.row(step, x)) {
        h ^= std::bit_cast<std::uint64_t>(p);
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

}  // namespace

// ---------------------------------------------------------------------------
// TabularMdp

TabularMdp::TabularMdp(std::size_t n_states, std::size_t n_actions, std::size_t horizon,
                       std::vector<std::vector<Transition>> rows,
                       std::vector<double> initial)
    : n_states_(n_states), n_actions_(n_actions), horizon_(horizon),
      initial_(std::move(initial)) {
  if (n_states == 0 || n_actions == 0) {
    throw InvalidArgument("TabularMdp: need at least one state and one action");
  }
  if (horizon == 0) throw InvalidArgument("TabularMdp: horizon must be at least 1");
  if (rows.size() != n_states * n_actions) {
    throw DimensionError("TabularMdp: expected one transition row per state-action pair");
  }
  if (initial_.size() != n_states) {
    throw DimensionError("TabularMdp: initial distribution has wrong length");
  }
  check_distribution(initial_, "TabularMdp initial distribution");

  row_offsets_.reserve(rows.size() + 1);
  row_offsets_.push_back(0);
  std::vector<double> scratch(n_states, 0.0);
  std::vector<std::uint32_t> touched;
  for (std::size_t p = 0; p < rows.size(); ++p) {
    touched.clear();
    for (const auto& t : rows[p]) {
      if (t.next >= n_states) throw DimensionError("TabularMdp: next state out of range");
      if (!(t.prob >= 0.0)) throw InvalidArgument("TabularMdp: negative transition probability");
      if (scratch[t.next] == 0.0) touched.push_back(t.next);
      scratch[t.next] += t.prob;
    }
    std::sort(touched.begin(), touched.end());
    double total = 0.0;
    for (auto next : touched) {
      if (scratch[next] > 0.0) {
        transitions_.push_back({next, scratch[next]});
        total += scratch[next];
      }
      scratch[next] = 0.0;
    }
    if (std::abs(total - 1.0) > kDistributionTol) {
      std::ostringstream msg;
      msg << "TabularMdp: row (x=" << p / n_actions << ", a=" << p % n_actions
          << ") sums to " << total;
      throw InvalidArgument(msg.str());
    }
    row_offsets_.push_back(transitions_.size());
  }

  // reverse adjacency, ordered by source pair, for pull-style propagation
  std::vector<std::size_t> in_degree(n_states, 0);
  for (const auto& t : transitions_) ++in_degree[t.next];
  inflow_offsets_.assign(n_states + 1, 0);
  for (std::size_t x = 0; x < n_states; ++x) {
    inflow_offsets_[x + 1] = inflow_offsets_[x] + in_degree[x];
  }
  inflows_.resize(transitions_.size());
  std::vector<std::size_t> fill(inflow_offsets_.begin(), inflow_offsets_.end() - 1);
  for (std::size_t p = 0; p < n_states * n_actions; ++p) {
    for (std::size_t k = row_offsets_[p]; k < row_offsets_[p + 1]; ++k) {
      const auto& t = transitions_[k];
      inflows_[fill[t.next]++] = {static_cast<std::uint32_t>(p), t.prob};
    }
  }
}

TabularMdp TabularMdp::from_dense(std::size_t n_states, std::size_t n_actions,
                                  std::size_t horizon, std::span<const double> dense,
                                  std::vector<double> initial) {
  if (dense.size() != n_states * n_actions * n_states) {
    throw DimensionError("TabularMdp::from_dense: table has wrong size");
  }
  std::vector<std::vector<Transition>> rows(n_states * n_actions);
  for (std::size_t p = 0; p < rows.size(); ++p) {
    for (std::size_t next = 0; next < n_states; ++next) {
      double prob = dense[p * n_states + next];
      if (prob != 0.0) rows[p].push_back({static_cast<std::uint32_t>(next), prob});
    }
  }
  return TabularMdp(n_states, n_actions, horizon, std::move(rows), std::move(initial));
}

std::span<const TabularMdp::Transition> TabularMdp::row(std::size_t x, std::size_t a) const {
  const std::size_t p = pair(x, a);
  return {transitions_.data() + row_offsets_[p], row_offsets_[p + 1] - row_offsets_[p]};
}

std::span<const TabularMdp::Inflow> TabularMdp::inflow(std::size_t next) const {
  return {inflows_.data() + inflow_offsets_[next],
          inflow_offsets_[next + 1] - inflow_offsets_[next]};
}

double TabularMdp::probability(std::size_t x, std::size_t a, std::size_t next) const {
  for (const auto& t : row(x, a)) {
    if (t.next == next) return t.prob;
  }
  return 0.0;
}

bool TabularMdp::is_deterministic() const {
  return std::all_of(transitions_.begin(), transitions_.end(),
                     [](const Transition& t) { return t.prob == 1.0; });
}

TabularMdp TabularMdp::with_horizon(std::size_t horizon) const {
  TabularMdp copy = *this;
  if (horizon == 0) throw InvalidArgument("TabularMdp: horizon must be at least 1");
  copy.horizon_ = horizon;
  return copy;
}

// ---------------------------------------------------------------------------
// NonstationaryPolicy

NonstationaryPolicy::NonstationaryPolicy(std::size_t horizon, std::size_t n_states,
                                         std::size_t n_actions, std::vector<double> probs)
    : horizon_(horizon), n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
  if (probs_.size() != horizon * n_states * n_actions) {
    throw DimensionError("NonstationaryPolicy: probability table has wrong size");
  }
  for (std::size_t h = 0; h < horizon; ++h) {
    for (std::size_t x = 0; x < n_states; ++x) {
      check_distribution(row(h, x), "NonstationaryPolicy");
    }
  }
}

NonstationaryPolicy NonstationaryPolicy::uniform(std::size_t horizon, std::size_t n_states,
                                                 std::size_t n_actions) {
  return NonstationaryPolicy(
      horizon, n_states, n_actions,
      std::vector<double>(horizon * n_states * n_actions, 1.0 / static_cast<double>(n_actions)));
}

NonstationaryPolicy NonstationaryPolicy::deterministic(std::size_t horizon, std::size_t n_states,
                                                       std::size_t n_actions,
                                                       std::span<const std::uint32_t> actions) {
  if (actions.size() != horizon * n_states) {
    throw DimensionError("NonstationaryPolicy::deterministic: action table has wrong size");
  }
  if (n_actions == 0) throw DimensionError("NonstationaryPolicy: no actions");
  for (std::uint32_t a : actions) {
    if (a >= n_actions) throw DimensionError("NonstationaryPolicy: action out of range");
  }
  auto one_hot = std::make_shared<std::vector<double>>(n_actions * n_actions, 0.0);
  for (std::size_t a = 0; a < n_actions; ++a) (*one_hot)[a * n_actions + a] = 1.0;
  NonstationaryPolicy out;
  out.horizon_ = horizon;
  out.n_states_ = n_states;
  out.n_actions_ = n_actions;
  out.actions_.assign(actions.begin(), actions.end());
  out.one_hot_ = std::move(one_hot);
  return out;
}

std::vector<double> NonstationaryPolicy::dense() const {
  if (!probs_.empty()) return probs_;
  std::vector<double> out(horizon_ * n_states_ * n_actions_, 0.0);
  for (std::size_t i = 0; i < actions_.size(); ++i) out[i * n_actions_ + actions_[i]] = 1.0;
  return out;
}

bool NonstationaryPolicy::operator==(const NonstationaryPolicy& other) const {
  if (horizon_ != other.horizon_ || n_states_ != other.n_states_ ||
      n_actions_ != other.n_actions_) {
    return false;
  }
  if (is_deterministic() && other.is_deterministic()) return actions_ == other.actions_;
  if (!is_deterministic() && !other.is_deterministic()) return probs_ == other.probs_;
  for (std::size_t h = 0; h < horizon_; ++h) {
    for (std::size_t x = 0; x < n_states_; ++x) {
      const auto r1 = row(h, x);
      const auto r2 = other.row(h, x);
      if (!std::equal(r1.begin(), r1.end(), r2.begin())) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// MixturePolicy

MixturePolicy::MixturePolicy(std::vector<MixtureComponent> components)
    : components_(std::move(components)) {
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight >= 0.0)) throw InvalidArgument("MixturePolicy: negative weight");
    total += c.weight;
    hashes_.push_back(hash_policy(c.policy));
  }
  if (!components_.empty() && std::abs(total - 1.0) > kDistributionTol) {
    throw InvalidArgument("MixturePolicy: weights do not sum to 1");
  }
}

MixturePolicy MixturePolicy::single(NonstationaryPolicy policy) {
  std::vector<MixtureComponent> c;
  c.push_back({1.0, std::move(policy)});
  return MixturePolicy(std::move(c));
}

std::vector<double> MixturePolicy::weights() const {
  std::vector<double> w;
  w.reserve(components_.size());
  for (const auto& c : components_) w.push_back(c.weight);
  return w;
}

void MixturePolicy::blend_in(double alpha, NonstationaryPolicy policy) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("MixturePolicy: alpha outside [0,1]");
  if (components_.empty()) {
    components_.push_back({1.0, std::move(policy)});
    hashes_.push_back(hash_policy(components_.back().policy));
    return;
  }
  for (auto& c : components_) c.weight *= (1.0 - alpha);
  for (std::size_t i = components_.size(); i-- > 0;) {
    if (components_[i].weight == 0.0) {
      components_.erase(components_.begin() + static_cast<std::ptrdiff_t>(i));
      hashes_.erase(hashes_.begin() + static_cast<std::ptrdiff_t>(i));
    }
  }
  const std::uint64_t h = hash_policy(policy);
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (hashes_[i] == h && components_[i].policy == policy) {
      components_[i].weight += alpha;
      return;
    }
  }
  components_.push_back({alpha, std::move(policy)});
  hashes_.push_back(h);
}

// ---------------------------------------------------------------------------
// Visitation

Visitation::Visitation(std::size_t horizon, std::size_t n_states, std::size_t n_actions,
                       std::vector<double> per_step)
    : horizon_(horizon), n_states_(n_states), n_actions_(n_actions),
      per_step_(std::move(per_step)) {
  if (per_step_.size() != horizon * n_states * n_actions) {
    throw DimensionError("Visitation: per-step table has wrong size");
  }
  refresh_average();
}

Visitation Visitation::zeros(std::size_t horizon, std::size_t n_states, std::size_t n_actions) {
  return Visitation(horizon, n_states, n_actions,
                    std::vector<double>(horizon * n_states * n_actions, 0.0));
}

void Visitation::refresh_average() {
  const std::size_t n = n_pairs();
  averaged_.assign(n, 0.0);
  for (std::size_t h = 0; h < horizon_; ++h) {
    const double* src = per_step_.data() + h * n;
    for (std::size_t i = 0; i < n; ++i) averaged_[i] += src[i];
  }
  const double inv = horizon_ > 0 ? 1.0 / static_cast<double>(horizon_) : 0.0;
  for (double& v : averaged_) v *= inv;
}

void Visitation::blend(double alpha, const Visitation& other) {
  if (other.per_step_.size() != per_step_.size()) {
    throw DimensionError("Visitation::blend: shapes differ");
  }
  const double keep = 1.0 - alpha;
  for (std::size_t i = 0; i < per_step_.size(); ++i) {
    per_step_[i] = keep * per_step_[i] + alpha * other.per_step_[i];
  }
  for (std::size_t i = 0; i < averaged_.size(); ++i) {
    averaged_[i] = keep * averaged_[i] + alpha * other.averaged_[i];
  }
}

double Visitation::max_abs_diff(const Visitation& other) const {
  if (other.per_step_.size() != per_step_.size()) {
    throw DimensionError("Visitation::max_abs_diff: shapes differ");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < per_step_.size(); ++i) {
    worst = std::max(worst, std::abs(per_step_[i] - other.per_step_[i]));
  }
  for (std::size_t i = 0; i < averaged_.size(); ++i) {
    worst = std::max(worst, std::abs(averaged_[i] - other.averaged_[i]));
  }
  return worst;
}

double Visitation::polytope_violation(const TabularMdp& mdp) const {
  if (mdp.n_states() != n_states_ || mdp.n_actions() != n_actions_ ||
      mdp.horizon() != horizon_) {
    throw DimensionError("Visitation::polytope_violation: shape differs from the MDP");
  }
  double worst = 0.0;
  std::vector<double> inflow(n_states_);
  for (std::size_t h = 0; h < horizon_; ++h) {
    auto d = step(h);
    double total = 0.0;
    for (double v : d) {
      worst = std::max(worst, -v);
      total += v;
    }
    worst = std::max(worst, std::abs(total - 1.0));
    if (h == 0) {
      for (std::size_t x = 0; x < n_states_; ++x) inflow[x] = mdp.initial()[x];
    } else {
      std::fill(inflow.begin(), inflow.end(), 0.0);
      auto prev = step(h - 1);
      for (std::size_t x = 0; x < n_states_; ++x) {
        for (std::size_t a = 0; a < n_actions_; ++a) {
          const double mass = prev[x * n_actions_ + a];
          if (mass == 0.0) continue;
          for (const auto& t : mdp.row(x, a)) inflow[t.next] += mass * t.prob;
        }
      }
    }
    for (std::size_t x = 0; x < n_states_; ++x) {
      double out = 0.0;
      for (std::size_t a = 0; a < n_actions_; ++a) out += d[x * n_actions_ + a];
      worst = std::max(worst, std::abs(out - inflow[x]));
    }
  }
  return worst;
}

// ---------------------------------------------------------------------------
// EmpiricalMeasure

EmpiricalMeasure::EmpiricalMeasure(std::size_t horizon, std::size_t n_states,
                                   std::size_t n_actions)
    : horizon_(horizon), n_states_(n_states), n_actions_(n_actions),
      counts_(n_states * n_actions, 0), step_counts_(horizon * n_states * n_actions, 0) {}

std::vector<double> EmpiricalMeasure::normalized() const {
  std::vector<double> out(counts_.size(), 0.0);
  if (episodes_ == 0) return out;
  const double denom = static_cast<double>(episodes_) * static_cast<double>(horizon_);
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    out[i] = static_cast<double>(counts_[i]) / denom;
  }
  return out;
}

Visitation EmpiricalMeasure::as_visitation() const {
  std::vector<double> per_step(step_counts_.size(), 0.0);
  if (episodes_ > 0) {
    const double denom = static_cast<double>(episodes_);
    for (std::size_t i = 0; i < step_counts_.size(); ++i) {
      per_step[i] = static_cast<double>(step_counts_[i]) / denom;
    }
  }
  return Visitation(horizon_, n_states_, n_actions_, std::move(per_step));
}

void EmpiricalMeasure::add(const Trajectory& traj) {
  if (traj.length() != horizon_) {
    throw DimensionError("EmpiricalMeasure: trajectory length differs from the horizon");
  }
  const std::size_t n = n_states_ * n_actions_;
  for (std::size_t h = 0; h < traj.steps.size(); ++h) {
    const auto& sa = traj.steps[h];
    if (sa.state >= n_states_ || sa.action >= n_actions_) {
      throw DimensionError("EmpiricalMeasure: state or action out of range");
    }
    const std::size_t p = sa.state * n_actions_ + sa.action;
    ++counts_[p];
    ++step_counts_[h * n + p];
  }
  ++episodes_;
}

}  // namespace mdesign
