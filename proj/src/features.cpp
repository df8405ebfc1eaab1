#include "mdesign/features.hpp"

#include <cmath>

#include "mdesign/error.hpp"

namespace mdesign {

FeatureMap::FeatureMap(std::size_t n_states, std::size_t n_actions, FeatureMatrix table)
    : n_states_(n_states), n_actions_(n_actions), table_(std::move(table)) {
  if (static_cast<std::size_t>(table_.rows()) != n_states * n_actions) {
    throw DimensionError("FeatureMap: expected one row per state-action pair");
  }
  if (table_.cols() == 0) throw InvalidArgument("FeatureMap: feature dimension must be positive");
  if (!table_.allFinite()) throw InvalidArgument("FeatureMap: non-finite feature entry");
}

FeatureMap unit_by_type(std::span<const int> types, std::size_t n_types, std::size_t n_actions) {
  const std::size_t S = types.size();
  FeatureMatrix table = FeatureMatrix::Zero(static_cast<Eigen::Index>(S * n_actions),
                                            static_cast<Eigen::Index>(n_types));
  for (std::size_t x = 0; x < S; ++x) {
    if (types[x] < 0) continue;
    if (static_cast<std::size_t>(types[x]) >= n_types) {
      throw InvalidArgument("unit_by_type: type index out of range");
    }
    for (std::size_t a = 0; a < n_actions; ++a) {
      table(static_cast<Eigen::Index>(x * n_actions + a), types[x]) = 1.0;
    }
  }
  return FeatureMap(S, n_actions, std::move(table));
}

FeatureMap selector_features(std::size_t n) {
  FeatureMatrix table = FeatureMatrix::Zero(static_cast<Eigen::Index>(n * n),
                                            static_cast<Eigen::Index>(n));
  for (std::size_t x = 0; x < n; ++x) {
    for (std::size_t a = 0; a < n; ++a) table(static_cast<Eigen::Index>(x * n + a), a) = 1.0;
  }
  return FeatureMap(n, n, std::move(table));
}

FeatureMap rbf_features(const Eigen::MatrixXd& coords, const Eigen::MatrixXd& centers,
                        double bandwidth, double scale, std::size_t n_actions) {
  if (!(bandwidth > 0.0)) throw InvalidArgument("rbf_features: bandwidth must be positive");
  if (coords.cols() != centers.cols()) {
    throw DimensionError("rbf_features: coordinate and center dimensions differ");
  }
  const auto S = coords.rows();
  const auto m = centers.rows();
  FeatureMatrix table(S * static_cast<Eigen::Index>(n_actions), m);
  const double denom = 2.0 * bandwidth * bandwidth;
  for (Eigen::Index x = 0; x < S; ++x) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double value = scale * std::exp(-(coords.row(x) - centers.row(j)).squaredNorm() / denom);
      for (std::size_t a = 0; a < n_actions; ++a) {
        table(x * static_cast<Eigen::Index>(n_actions) + static_cast<Eigen::Index>(a), j) = value;
      }
    }
  }
  return FeatureMap(static_cast<std::size_t>(S), n_actions, std::move(table));
}

Eigen::MatrixXd scheduling_time_basis(std::size_t n_timesteps, std::size_t n_basis,
                                      double bandwidth, double scale) {
  if (n_basis == 0) throw InvalidArgument("scheduling basis: need at least one basis function");
  Eigen::MatrixXd times(static_cast<Eigen::Index>(n_timesteps), 1);
  for (std::size_t t = 0; t < n_timesteps; ++t) {
    times(static_cast<Eigen::Index>(t), 0) =
        n_timesteps > 1 ? static_cast<double>(t) / static_cast<double>(n_timesteps - 1) : 0.0;
  }
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(n_basis), 1);
  for (std::size_t j = 0; j < n_basis; ++j) {
    centers(static_cast<Eigen::Index>(j), 0) =
        n_basis > 1 ? static_cast<double>(j) / static_cast<double>(n_basis - 1) : 0.0;
  }
  return rbf_features(times, centers, bandwidth, scale, 1).table();
}

FeatureMap scheduling_features(const SchedulingChain& chain, std::size_t n_basis,
                               double bandwidth, double scale) {
  const Eigen::MatrixXd basis =
      scheduling_time_basis(chain.n_timesteps, n_basis, bandwidth, scale);
  const std::size_t S = chain.mdp.n_states();
  FeatureMatrix table = FeatureMatrix::Zero(static_cast<Eigen::Index>(S * 2),
                                            static_cast<Eigen::Index>(n_basis));
  for (std::size_t x = 0; x < S; ++x) {
    if (!chain.can_measure(x)) continue;
    const auto t = static_cast<Eigen::Index>(chain.slot(x).time);
    table.row(static_cast<Eigen::Index>(x * 2 + kMeasure)) = basis.row(t);
  }
  return FeatureMap(S, 2, std::move(table));
}

}  // namespace mdesign
