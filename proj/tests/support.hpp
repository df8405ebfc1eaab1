#pragma once

// Fixtures and independent oracles shared by the unit and acceptance tests.
// The oracles deliberately avoid the library's own kernels.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mdesign/chain.hpp"
#include "mdesign/features.hpp"
#include "mdesign/objective.hpp"
#include "mdesign/scenarios.hpp"

namespace testing_support {

using namespace mdesign;

/// Fixture A: n states, n actions, action i moves to state i, H = 1.
inline TabularMdp fixture_a(std::size_t n = 3) { return make_selector_chain(n, 1); }

/// Fixture B: two states, stay/go, start in 0, H = 2.
inline TabularMdp fixture_b() { return make_two_state_chain(2); }

inline std::vector<Trajectory> fixture_b_trajectories() {
  // (a0, a1) in {stay, go}^2; state after a0 is a0
  std::vector<Trajectory> out;
  for (std::uint32_t a0 = 0; a0 < 2; ++a0) {
    for (std::uint32_t a1 = 0; a1 < 2; ++a1) {
      out.push_back(Trajectory{{{0, a0}, {a0, a1}}});
    }
  }
  return out;
}

inline std::shared_ptr<const FeatureMap> random_features(std::size_t S, std::size_t A,
                                                         std::size_t m, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  FeatureMatrix t(static_cast<Eigen::Index>(S * A), static_cast<Eigen::Index>(m));
  for (Eigen::Index i = 0; i < t.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = n01(rng);
  }
  return std::make_shared<FeatureMap>(S, A, std::move(t));
}

inline std::vector<double> random_simplex(std::size_t n, std::mt19937_64& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& x : v) s += (x = e(rng));
  for (auto& x : v) x /= s;
  return v;
}

inline Eigen::MatrixXd random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Eigen::MatrixXd M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    for (Eigen::Index j = 0; j < M.cols(); ++j) M(i, j) = n01(rng);
  }
  return M;
}

/// Random chain with dense rows drawn from a Dirichlet(1) law.
inline TabularMdp random_mdp(std::size_t S, std::size_t A, std::size_t H, std::mt19937_64& rng) {
  std::vector<double> dense;
  for (std::size_t i = 0; i < S * A; ++i) {
    auto row = random_simplex(S, rng);
    dense.insert(dense.end(), row.begin(), row.end());
  }
  return TabularMdp::from_dense(S, A, H, dense, random_simplex(S, rng));
}

inline NonstationaryPolicy random_policy(std::size_t H, std::size_t S, std::size_t A,
                                         std::mt19937_64& rng) {
  std::vector<double> p;
  for (std::size_t i = 0; i < H * S; ++i) {
    auto row = random_simplex(A, rng);
    p.insert(p.end(), row.begin(), row.end());
  }
  return NonstationaryPolicy(H, S, A, std::move(p));
}

// ---------------------------------------------------------------------------
// Independent objective oracle: dense Eigen algebra straight from the
// definitions, no shared code with the library objective.

struct PlainDesign {
  Eigen::MatrixXd phi;         ///< pairs x m
  std::vector<double> sigma;   ///< per pair
  double rho = 1.0;
  Eigen::MatrixXd C;           ///< p x m
  char kind = 'D';             ///< 'D', 'A' or 'E'
  double mu = 0.0;
};

inline PlainDesign plain(const DesignSpec& spec) {
  PlainDesign p;
  p.phi = spec.features->table();
  p.sigma = spec.sigma;
  p.rho = spec.rho;
  const auto m = static_cast<Eigen::Index>(spec.dim());
  p.C = spec.functional ? *spec.functional : Eigen::MatrixXd::Identity(m, m);
  p.kind = spec.scalarization == Scalarization::D   ? 'D'
           : spec.scalarization == Scalarization::A ? 'A'
                                                    : 'E';
  p.mu = spec.mu;
  return p;
}

inline Eigen::MatrixXd plain_moment(const PlainDesign& p, const std::vector<double>& d) {
  const auto m = p.phi.cols();
  Eigen::MatrixXd M = p.rho * Eigen::MatrixXd::Identity(m, m);
  for (Eigen::Index i = 0; i < p.phi.rows(); ++i) {
    const Eigen::VectorXd f = p.phi.row(i).transpose();
    M += d[static_cast<std::size_t>(i)] / (p.sigma[static_cast<std::size_t>(i)] *
                                           p.sigma[static_cast<std::size_t>(i)]) *
         (f * f.transpose());
  }
  return M;
}

inline double plain_scalarize(const PlainDesign& p, const Eigen::MatrixXd& M) {
  const Eigen::MatrixXd Sigma = p.C * M.inverse() * p.C.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Sigma + Sigma.transpose()));
  const Eigen::VectorXd ev = es.eigenvalues();
  switch (p.kind) {
    case 'D': return ev.array().log().sum();
    case 'A': return ev.sum();
    default: {
      const double top = ev.maxCoeff();
      if (p.mu == 0.0) return top;
      return top + p.mu * std::log((ev.array() - top).unaryExpr([&](double v) {
                                     return std::exp(v / p.mu);
                                   }).sum());
    }
  }
}

inline double plain_value(const PlainDesign& p, const std::vector<double>& d) {
  return plain_scalarize(p, plain_moment(p, d));
}

/// Central differences of f along each coordinate.
inline std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                             std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double up = f(x);
    x[i] = x0 - h;
    const double down = f(x);
    x[i] = x0;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// max_i |a_i - b_i| / max_i |b_i|
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / std::max(den, 1e-300);
}

/// Averaged visitation of a distribution over Fixture B's four trajectories.
inline std::vector<double> fixture_b_density(const std::array<double, 4>& eta) {
  // trajectory k = (a0, a1) visits pair a0, then pair 2 * a0 + a1
  std::vector<double> d(4, 0.0);
  for (std::size_t k = 0; k < 4; ++k) {
    const std::size_t a0 = k / 2, a1 = k % 2;
    d[a0] += 0.5 * eta[k];
    d[2 * a0 + a1] += 0.5 * eta[k];
  }
  return d;
}

/// Minimum of the oracle objective over the grid of Delta_4 with the given
/// step, evaluated through Fixture B's trajectory densities.
inline double fixture_b_grid_minimum(const PlainDesign& p, double step) {
  const int n = static_cast<int>(std::lround(1.0 / step));
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) {
    for (int j = 0; i + j <= n; ++j) {
      for (int k = 0; i + j + k <= n; ++k) {
        const int l = n - i - j - k;
        const std::array<double, 4> eta{i * step, j * step, k * step, l * step};
        best = std::min(best, plain_value(p, fixture_b_density(eta)));
      }
    }
  }
  return best;
}

}  // namespace testing_support
