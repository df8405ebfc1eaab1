// Serial reference versions of the kernels in kernels.cpp. They follow the
// textbook formulation (push-style propagation, outer-product accumulation)
// and are kept for testing and benchmarking only.

#include <limits>

#include "mdesign/error.hpp"
#include "mdesign/kernels.hpp"

namespace mdesign::reference {

void propagate(const TabularMdp& mdp, const NonstationaryPolicy& policy,
               std::span<double> per_step) {
  const std::size_t S = mdp.n_states();
  const std::size_t A = mdp.n_actions();
  const std::size_t H = mdp.horizon();
  if (policy.horizon() != H || policy.n_states() != S || policy.n_actions() != A) {
    throw DimensionError("policy shape does not match the MDP");
  }
  if (per_step.size() != H * S * A) throw DimensionError("propagate: output has wrong size");

  std::vector<double> marginal(mdp.initial().begin(), mdp.initial().end());
  std::vector<double> next(S);
  for (std::size_t h = 0; h < H; ++h) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t x = 0; x < S; ++x) {
      for (std::size_t a = 0; a < A; ++a) {
        const double mass = marginal[x] * policy.prob(h, x, a);
        per_step[h * S * A + x * A + a] = mass;
        for (const auto& t : mdp.row(x, a)) next[t.next] += mass * t.prob;
      }
    }
    std::swap(marginal, next);
  }
}

double backward_induction(const TabularMdp& mdp, std::span<const double> reward,
                          std::span<std::uint32_t> actions, std::span<double> value0) {
  const std::size_t S = mdp.n_states();
  const std::size_t A = mdp.n_actions();
  const std::size_t H = mdp.horizon();
  std::vector<std::vector<double>> V(H + 1, std::vector<double>(S, 0.0));
  for (std::size_t h = H; h-- > 0;) {
    for (std::size_t x = 0; x < S; ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t a = 0; a < A; ++a) {
        double q = reward[x * A + a];
        for (std::size_t y = 0; y < S; ++y) q += mdp.probability(x, a, y) * V[h + 1][y];
        if (q < best) {
          best = q;
          actions[h * S + x] = static_cast<std::uint32_t>(a);
        }
      }
      V[h][x] = best;
    }
  }
  double cost = 0.0;
  for (std::size_t x = 0; x < S; ++x) {
    value0[x] = V[0][x];
    cost += mdp.initial()[x] * V[0][x];
  }
  return cost;
}

Eigen::MatrixXd weighted_gram(const FeatureMatrix& features, std::span<const double> weights) {
  const auto m = features.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index p = 0; p < features.rows(); ++p) {
    const Eigen::VectorXd phi = features.row(p).transpose();
    gram += weights[static_cast<std::size_t>(p)] * phi * phi.transpose();
  }
  return gram;
}

void quadratic_forms(const FeatureMatrix& features, const Eigen::MatrixXd& G,
                     std::span<const double> scale, std::span<double> out) {
  for (Eigen::Index p = 0; p < features.rows(); ++p) {
    const Eigen::VectorXd phi = features.row(p).transpose();
    out[static_cast<std::size_t>(p)] = scale[static_cast<std::size_t>(p)] * phi.dot(G * phi);
  }
}

}  // namespace mdesign::reference
