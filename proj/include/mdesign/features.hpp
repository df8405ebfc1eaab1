#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "mdesign/kernels.hpp"
#include "mdesign/scenarios.hpp"

namespace mdesign {

/// Explicit finite feature map: one row phi(x, a) per state-action pair.
class FeatureMap {
 public:
  FeatureMap(std::size_t n_states, std::size_t n_actions, FeatureMatrix table);

  std::size_t n_states() const { return n_states_; }
  std::size_t n_actions() const { return n_actions_; }
  std::size_t n_pairs() const { return n_states_ * n_actions_; }
  std::size_t dim() const { return static_cast<std::size_t>(table_.cols()); }
  const FeatureMatrix& table() const { return table_; }
  auto row(std::size_t pair) const { return table_.row(static_cast<Eigen::Index>(pair)); }

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  FeatureMatrix table_;
};

/// phi(x, a) = e_{type(x)} for every action; type -1 gives the zero vector.
FeatureMap unit_by_type(std::span<const int> types, std::size_t n_types, std::size_t n_actions);

/// phi(x, a) = e_a, the selector fixture's orthogonal design.
FeatureMap selector_features(std::size_t n);

/// Squared-exponential bumps on per-state coordinates:
/// phi_j(x, a) = scale * exp(-|z(x) - c_j|^2 / (2 bandwidth^2)) for every action.
/// `coords` is S x k, `centers` is m x k.
FeatureMap rbf_features(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& centers,
                        double bandwidth, double scale, std::size_t n_actions);

/// Time-basis features for the scheduling chain: an effective measurement at
/// time t observes psi(t), an RBF basis of `n_basis` bumps on [0, 1]; waiting
/// and blocked measurements observe nothing.
FeatureMap scheduling_features(const SchedulingChain& chain, std::size_t n_basis,
                               double bandwidth, double scale);

/// The time basis psi(t) used above, one row per time index.
Eigen::MatrixXd scheduling_time_basis(std::size_t n_timesteps, std::size_t n_basis,
                                      double bandwidth, double scale);

}  // namespace mdesign
