#pragma once

// Experiment-design objectives on state-action visitations.
//
// For an averaged visitation d the moment matrix is
//   M(d) = sum_{x,a} d(x,a) phi(x,a) phi(x,a)^T / sigma(x,a)^2 + rho I
// and the design covariance Sigma = C M^{-1} C^T. The scalarizations are
//   D: logdet(Sigma)            (= -logdet M for C = I)
//   A: trace(Sigma)
//   E: lambda_max(Sigma), or mu * log sum_i exp(lambda_i(Sigma) / mu) for mu > 0.
// Gradients are taken with respect to d(x, a).

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mdesign/chain.hpp"
#include "mdesign/features.hpp"

namespace mdesign {

enum class Scalarization { D, A, E };

const char* to_string(Scalarization s);
Scalarization parse_scalarization(const std::string& name);

struct DesignSpec {
  std::shared_ptr<const FeatureMap> features;
  std::vector<double> sigma;  ///< noise scale per pair
  double rho = 1.0;           ///< regularizer lambda / T
  std::optional<Eigen::MatrixXd> functional;  ///< C (p x m); identity when empty
  Scalarization scalarization = Scalarization::D;
  double mu = 0.0;  ///< spectral smoothing for E; 0 disables

  std::size_t dim() const { return features->dim(); }
  std::size_t n_pairs() const { return features->n_pairs(); }
  /// Output dimension p of the functional.
  std::size_t output_dim() const;

  /// Throws on hard violations; returns warnings (e.g. rank-deficient C).
  std::vector<std::string> validate() const;
};

/// Spec with a constant noise scale for every pair.
DesignSpec make_design_spec(std::shared_ptr<const FeatureMap> features, double sigma, double rho,
                            Scalarization s, std::optional<Eigen::MatrixXd> functional = {},
                            double mu = 0.0);

using InfoMatrix = Eigen::MatrixXd;

/// sum over the steps of `traj` of phi phi^T / sigma^2, with multiplicity.
InfoMatrix info_matrix(const Trajectory& traj, const DesignSpec& spec);

/// M(d); `d` is indexed by pair.
InfoMatrix moment_matrix(std::span<const double> d, const DesignSpec& spec);

double objective_value(std::span<const double> d, const DesignSpec& spec);

/// Scalarization applied to a precomputed moment matrix.
double objective_from_moment(const Eigen::MatrixXd& moment, const DesignSpec& spec);

/// Writes dU/dd(x,a) into `grad` and returns U(d). For E with mu = 0 the
/// gradient is the subgradient from the top eigenpair.
double objective_gradient(std::span<const double> d, const DesignSpec& spec,
                          std::span<double> grad);
std::vector<double> objective_gradient(std::span<const double> d, const DesignSpec& spec);

struct WeightedTrajectory {
  double weight;
  Trajectory trajectory;
};

/// s(C (sum_tau eta(tau) I(tau) / |tau| + rho I)^{-1} C^T). Dividing each
/// information matrix by the trajectory length puts the trajectory mixture on
/// the same scale as the normalized visitation.
double trajectory_objective(std::span<const WeightedTrajectory> trajectories,
                            const DesignSpec& spec);

/// Worst case over a finite family of specs sharing one feature map.
struct RobustSpec {
  std::vector<DesignSpec> family;
  void validate() const;
};

struct RobustEvaluation {
  double value;
  std::vector<double> gradient;
  std::size_t argmax;  ///< lowest family index among maximizers
};

RobustEvaluation robust_value_and_gradient(std::span<const double> d, const RobustSpec& rspec);

// ---------------------------------------------------------------------------
// Objective interface used by the Frank-Wolfe solver.

class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t n_pairs() const = 0;
  virtual double value(std::span<const double> d) const = 0;
  virtual double value_and_gradient(std::span<const double> d, std::span<double> grad) const = 0;
  /// alpha -> U((1 - alpha) from + alpha to). The default interpolates in d.
  virtual std::function<double(double)> segment(std::span<const double> from,
                                                std::span<const double> to) const;
};

class DesignObjective final : public Objective {
 public:
  explicit DesignObjective(DesignSpec spec);
  const DesignSpec& spec() const { return spec_; }
  std::size_t n_pairs() const override { return spec_.n_pairs(); }
  double value(std::span<const double> d) const override;
  double value_and_gradient(std::span<const double> d, std::span<double> grad) const override;
  std::function<double(double)> segment(std::span<const double> from,
                                        std::span<const double> to) const override;

 private:
  DesignSpec spec_;
};

class RobustObjective final : public Objective {
 public:
  explicit RobustObjective(RobustSpec rspec);
  const RobustSpec& spec() const { return rspec_; }
  std::size_t n_pairs() const override { return rspec_.family.front().n_pairs(); }
  double value(std::span<const double> d) const override;
  double value_and_gradient(std::span<const double> d, std::span<double> grad) const override;
  std::function<double(double)> segment(std::span<const double> from,
                                        std::span<const double> to) const override;

 private:
  RobustSpec rspec_;
};

/// G(d) = U(anchor_weight * anchor + (1 - anchor_weight) * d): the objective
/// seen by an episode planner after t episodes, with anchor = Z eta_t and
/// anchor_weight = t / (t + 1).
class AnchoredObjective final : public Objective {
 public:
  AnchoredObjective(const Objective& base, std::vector<double> anchor, double anchor_weight);
  std::size_t n_pairs() const override { return base_.n_pairs(); }
  double value(std::span<const double> d) const override;
  double value_and_gradient(std::span<const double> d, std::span<double> grad) const override;
  std::function<double(double)> segment(std::span<const double> from,
                                        std::span<const double> to) const override;
  /// The point U is evaluated at for argument d.
  std::vector<double> mixed_point(std::span<const double> d) const;

 private:
  const Objective& base_;
  std::vector<double> anchor_;
  double anchor_weight_;
};

}  // namespace mdesign
