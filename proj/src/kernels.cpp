#include "mdesign/kernels.hpp"

#include <limits>

#include <omp.h>

#include "mdesign/error.hpp"

namespace mdesign::kernels {

namespace {

void check_policy(const TabularMdp& mdp, const NonstationaryPolicy& policy) {
  if (policy.horizon() != mdp.horizon() || policy.n_states() != mdp.n_states() ||
      policy.n_actions() != mdp.n_actions()) {
    throw DimensionError("policy shape does not match the MDP");
  }
}

}  // namespace

void propagate(const TabularMdp& mdp, const NonstationaryPolicy& policy,
               std::span<double> per_step) {
  check_policy(mdp, policy);
  const std::size_t S = mdp.n_states();
  const std::size_t A = mdp.n_actions();
  const std::size_t H = mdp.horizon();
  if (per_step.size() != H * S * A) throw DimensionError("propagate: output has wrong size");

  std::vector<double> marginal(mdp.initial().begin(), mdp.initial().end());
  const bool parallel = S * A >= kParallelThreshold;
  const long n_states = static_cast<long>(S);

#pragma omp parallel if (parallel)
  for (std::size_t h = 0; h < H; ++h) {
    double* d = per_step.data() + h * S * A;
#pragma omp for schedule(static)
    for (long xi = 0; xi < n_states; ++xi) {
      const std::size_t x = static_cast<std::size_t>(xi);
      const auto pi = policy.row(h, x);
      for (std::size_t a = 0; a < A; ++a) d[x * A + a] = marginal[x] * pi[a];
    }
    if (h + 1 == H) break;
    // implicit barrier above: d_h is complete before the pull
#pragma omp for schedule(static)
    for (long xi = 0; xi < n_states; ++xi) {
      double mass = 0.0;
      for (const auto& in : mdp.inflow(static_cast<std::size_t>(xi))) {
        mass += d[in.pair] * in.prob;
      }
      marginal[static_cast<std::size_t>(xi)] = mass;
    }
  }
}

double backward_induction(const TabularMdp& mdp, std::span<const double> reward,
                          std::span<std::uint32_t> actions, std::span<double> value0) {
  const std::size_t S = mdp.n_states();
  const std::size_t A = mdp.n_actions();
  const std::size_t H = mdp.horizon();
  if (reward.size() != S * A) throw DimensionError("backward_induction: reward has wrong size");
  if (actions.size() != H * S) throw DimensionError("backward_induction: action table size");
  if (value0.size() != S) throw DimensionError("backward_induction: value table size");

  std::vector<double> next_value(S, 0.0);
  std::vector<double> value(S, 0.0);
  const bool parallel = S * A >= kParallelThreshold;
  const long n_states = static_cast<long>(S);

  for (std::size_t step = H; step-- > 0;) {
#pragma omp parallel for schedule(static) if (parallel)
    for (long xi = 0; xi < n_states; ++xi) {
      const std::size_t x = static_cast<std::size_t>(xi);
      double best = std::numeric_limits<double>::infinity();
      std::uint32_t best_action = 0;
      for (std::size_t a = 0; a < A; ++a) {
        double q = reward[x * A + a];
        if (step + 1 < H) {
          for (const auto& t : mdp.row(x, a)) q += t.prob * next_value[t.next];
        }
        if (q < best) {
          best = q;
          best_action = static_cast<std::uint32_t>(a);
        }
      }
      value[x] = best;
      actions[step * S + x] = best_action;
    }
    std::swap(value, next_value);
  }
  double cost = 0.0;
  for (std::size_t x = 0; x < S; ++x) {
    value0[x] = next_value[x];
    cost += mdp.initial()[x] * next_value[x];
  }
  return cost;
}

Eigen::MatrixXd weighted_gram(const FeatureMatrix& features, std::span<const double> weights) {
  const std::size_t n = static_cast<std::size_t>(features.rows());
  const long m = static_cast<long>(features.cols());
  if (weights.size() != n) throw DimensionError("weighted_gram: weight vector has wrong size");

  std::vector<std::size_t> active;
  for (std::size_t p = 0; p < n; ++p) {
    if (weights[p] != 0.0) active.push_back(p);
  }
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  const bool parallel = active.size() * static_cast<std::size_t>(m) >= kParallelThreshold * 8;

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (long i = 0; i < m; ++i) {
    for (long j = i; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t p : active) {
        const double* row = features.data() + p * static_cast<std::size_t>(m);
        acc += weights[p] * row[i] * row[j];
      }
      gram(i, j) = acc;
      gram(j, i) = acc;
    }
  }
  return gram;
}

void quadratic_forms(const FeatureMatrix& features, const Eigen::MatrixXd& G,
                     std::span<const double> scale, std::span<double> out) {
  const std::size_t n = static_cast<std::size_t>(features.rows());
  const long m = features.cols();
  if (G.rows() != m || G.cols() != m) throw DimensionError("quadratic_forms: G has wrong shape");
  if (scale.size() != n || out.size() != n) {
    throw DimensionError("quadratic_forms: scale/output has wrong size");
  }
  const bool parallel = n * static_cast<std::size_t>(m) >= kParallelThreshold * 8;
  const long rows = static_cast<long>(n);

#pragma omp parallel for schedule(static) if (parallel)
  for (long pi = 0; pi < rows; ++pi) {
    const std::size_t p = static_cast<std::size_t>(pi);
    const double* phi = features.data() + p * static_cast<std::size_t>(m);
    double acc = 0.0;
    for (long i = 0; i < m; ++i) {
      if (phi[i] == 0.0) continue;
      double inner = 0.0;
      for (long j = 0; j < m; ++j) inner += G(j, i) * phi[j];  // G symmetric
      acc += phi[i] * inner;
    }
    out[p] = scale[p] * acc;
  }
}

}  // namespace mdesign::kernels
