#pragma once

// Data-parallel inner loops shared by density estimation, planning and the
// design objectives. Every kernel writes each output element from exactly one
// thread in a fixed summation order, so results do not depend on the thread
// count. `mdesign::reference` holds straightforward serial versions that the
// tests and the benchmark compare against.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mdesign/chain.hpp"

namespace mdesign {

/// One feature row per state-action pair.
using FeatureMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace kernels {

/// Problems smaller than this run on the calling thread.
inline constexpr std::size_t kParallelThreshold = 2048;

/// Fills `per_step` (H * S * A) with d_h(x, a) for `policy` started from d0.
void propagate(const TabularMdp& mdp, const NonstationaryPolicy& policy,
               std::span<double> per_step);

/// Finite-horizon backward induction minimizing the summed `reward`.
/// `actions[h * S + x]` receives the argmin (lowest index on ties) and
/// `value0[x]` the optimal cost-to-go from step 0. Returns E_{d0}[V_0].
double backward_induction(const TabularMdp& mdp, std::span<const double> reward,
                          std::span<std::uint32_t> actions, std::span<double> value0);

/// sum_p weights[p] * phi_p phi_p^T over the rows of `features`.
Eigen::MatrixXd weighted_gram(const FeatureMatrix& features, std::span<const double> weights);

/// out[p] = scale[p] * phi_p^T G phi_p.
void quadratic_forms(const FeatureMatrix& features, const Eigen::MatrixXd& G,
                     std::span<const double> scale, std::span<double> out);

}  // namespace kernels

namespace reference {

void propagate(const TabularMdp& mdp, const NonstationaryPolicy& policy,
               std::span<double> per_step);
double backward_induction(const TabularMdp& mdp, std::span<const double> reward,
                          std::span<std::uint32_t> actions, std::span<double> value0);
Eigen::MatrixXd weighted_gram(const FeatureMatrix& features, std::span<const double> weights);
void quadratic_forms(const FeatureMatrix& features, const Eigen::MatrixXd& G,
                     std::span<const double> scale, std::span<double> out);

}  // namespace reference

}  // namespace mdesign
