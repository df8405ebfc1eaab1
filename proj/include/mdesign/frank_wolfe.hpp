#pragma once

// Frank-Wolfe over the fixed-horizon visitation polytope. Each iteration
// linearizes the objective at the current averaged visitation, hands the
// gradient to the planner as a cost table, and blends the planner's policy
// into the mixture. Gradients, gaps and objective values all live on the
// averaged (per-step mean) scale.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mdesign/chain.hpp"
#include "mdesign/objective.hpp"

namespace mdesign {

enum class StepRule { LineSearch, Fixed };

struct FWConfig {
  double gap_tol = 1e-6;
  std::size_t max_iters = 10000;
  double linesearch_tol = 1e-10;
  StepRule step_rule = StepRule::LineSearch;
  double fixed_step = 0.05;  ///< weight of the new component under StepRule::Fixed
};

struct FWStart {
  MixturePolicy mixture;
  Visitation density;
  /// `density` is a stand-in point (e.g. an empirical measure), not the
  /// density of `mixture`. The nonnegative-gap check is skipped in that case.
  bool pseudo_density = false;
};

/// Start from a single policy and its exact density.
FWStart start_from_policy(const TabularMdp& mdp, NonstationaryPolicy policy);

struct FWResult {
  MixturePolicy mixture;
  Visitation density;
  /// Density of `mixture`. Equals `density` unless started from a pseudo-density.
  Visitation mixture_density;
  std::vector<double> gap_trace;    ///< gap at each visited iterate
  std::vector<double> value_trace;  ///< objective at each visited iterate
  double final_value = 0.0;
  double final_gap = 0.0;
  std::size_t iterations = 0;  ///< number of mixture updates
  bool converged = false;      ///< final_gap <= gap_tol
  bool pseudo_density = false;
};

/// <grad, d - d_lmo>. Throws NumericalError if it is below -1e-10 unless
/// `allow_negative` is set.
double duality_gap(std::span<const double> d, std::span<const double> d_lmo,
                   std::span<const double> gradient, bool allow_negative = false);

/// Golden-section search of phi on [0, 1] down to width `tol`, where phi is
/// convex and `slope_at_zero` is phi'(0). Returns 0 when phi does not descend
/// from 0; otherwise the best of the bracketed point and 1.
double line_search(const std::function<double(double)>& phi, double slope_at_zero, double tol);

/// alpha (weight of `d_new`) minimizing U((1 - alpha) d_cur + alpha d_new).
double line_search(const Objective& objective, std::span<const double> d_cur,
                   std::span<const double> d_new, double tol);

FWResult frank_wolfe(const TabularMdp& mdp, const Objective& objective, FWStart start,
                     const FWConfig& cfg);

}  // namespace mdesign
