#include "mdesign/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "mdesign/error.hpp"
#include "mdesign/kernels.hpp"

namespace mdesign {

const char* to_string(Scalarization s) {
  switch (s) {
    case Scalarization::D: return "D";
    case Scalarization::A: return "A";
    case Scalarization::E: return "E";
  }
  return "?";
}

Scalarization parse_scalarization(const std::string& name) {
  if (name == "D" || name == "d") return Scalarization::D;
  if (name == "A" || name == "a") return Scalarization::A;
  if (name == "E" || name == "e") return Scalarization::E;
  throw InvalidArgument("unknown scalarization '" + name + "' (expected D, A or E)");
}

std::size_t DesignSpec::output_dim() const {
  return functional ? static_cast<std::size_t>(functional->rows()) : dim();
}

std::vector<std::string> DesignSpec::validate() const {
  if (!features) throw InvalidArgument("DesignSpec: missing feature map");
  if (sigma.size() != n_pairs()) throw DimensionError("DesignSpec: sigma needs one entry per pair");
  for (double s : sigma) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("DesignSpec: sigma must be positive");
  }
  if (!(rho > 0.0)) throw InvalidArgument("DesignSpec: rho must be positive");
  if (!(mu >= 0.0)) throw InvalidArgument("DesignSpec: mu must be nonnegative");
  std::vector<std::string> warnings;
  if (functional) {
    if (static_cast<std::size_t>(functional->cols()) != dim()) {
      throw DimensionError("DesignSpec: functional C must have one column per feature");
    }
    if (functional->rows() == 0) throw InvalidArgument("DesignSpec: functional C has no rows");
    Eigen::FullPivLU<Eigen::MatrixXd> lu(*functional);
    if (lu.rank() < functional->rows()) {
      warnings.push_back("functional C does not have full row rank");
    }
  }
  return warnings;
}

DesignSpec make_design_spec(std::shared_ptr<const FeatureMap> features, double sigma, double rho,
                            Scalarization s, std::optional<Eigen::MatrixXd> functional,
                            double mu) {
  DesignSpec spec;
  spec.sigma.assign(features->n_pairs(), sigma);
  spec.features = std::move(features);
  spec.rho = rho;
  spec.functional = std::move(functional);
  spec.scalarization = s;
  spec.mu = mu;
  spec.validate();
  return spec;
}

namespace {

std::vector<double> inverse_variance(const DesignSpec& spec) {
  std::vector<double> w(spec.sigma.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = 1.0 / (spec.sigma[i] * spec.sigma[i]);
  return w;
}

[[noreturn]] void throw_singular(const Eigen::MatrixXd& M, std::span<const double> d) {
  std::ostringstream msg;
  msg << "moment matrix (" << M.rows() << "x" << M.cols()
      << ") is not positive definite at d = [";
  const std::size_t shown = std::min<std::size_t>(d.size(), 16);
  for (std::size_t i = 0; i < shown; ++i) msg << (i ? ", " : "") << d[i];
  if (shown < d.size()) msg << ", ... (" << d.size() << " entries)";
  msg << "]";
  throw NumericalError(msg.str());
}

/// Scalarization of Sigma = C M^{-1} C^T and, optionally, the matrix G with
/// dU/dd(x,a) = -phi^T G phi / sigma^2.
double evaluate(const Eigen::MatrixXd& M, const DesignSpec& spec, Eigen::MatrixXd* G,
                std::span<const double> d_for_errors) {
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw_singular(M, d_for_errors);
  const auto m = M.rows();

  // B = M^{-1} C^T, Sigma = C B
  Eigen::MatrixXd B;
  Eigen::MatrixXd Sigma;
  if (spec.functional) {
    B = llt.solve(spec.functional->transpose());
    Sigma = *spec.functional * B;
  } else {
    B = llt.solve(Eigen::MatrixXd::Identity(m, m));
    Sigma = B;
  }
  Sigma = 0.5 * (Sigma + Sigma.transpose()).eval();

  double value = 0.0;
  switch (spec.scalarization) {
    case Scalarization::D: {
      if (!spec.functional) {
        const Eigen::MatrixXd& L = llt.matrixLLT();
        for (Eigen::Index i = 0; i < m; ++i) value -= 2.0 * std::log(L(i, i));
        if (G) *G = B;
      } else {
        Eigen::LLT<Eigen::MatrixXd> sllt(Sigma);
        if (sllt.info() != Eigen::Success) {
          throw NumericalError("design covariance C M^{-1} C^T is singular; C lacks full row rank");
        }
        const Eigen::MatrixXd& L = sllt.matrixLLT();
        for (Eigen::Index i = 0; i < Sigma.rows(); ++i) value += 2.0 * std::log(L(i, i));
        if (G) *G = B * sllt.solve(B.transpose());
      }
      break;
    }
    case Scalarization::A: {
      value = Sigma.trace();
      if (G) *G = B * B.transpose();
      break;
    }
    case Scalarization::E: {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Sigma);
      if (eig.info() != Eigen::Success) throw NumericalError("eigensolver failed on Sigma");
      const Eigen::VectorXd& lam = eig.eigenvalues();  // ascending
      const auto p = lam.size();
      const double top = lam(p - 1);
      Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
      if (spec.mu > 0.0) {
        double total = 0.0;
        for (Eigen::Index i = 0; i < p; ++i) {
          w(i) = std::exp((lam(i) - top) / spec.mu);
          total += w(i);
        }
        value = top + spec.mu * std::log(total);
        w /= total;
      } else {
        value = top;
        w(p - 1) = 1.0;
      }
      if (G) {
        const Eigen::MatrixXd& V = eig.eigenvectors();
        const Eigen::MatrixXd W = V * w.asDiagonal() * V.transpose();
        *G = B * W * B.transpose();
      }
      break;
    }
  }
  if (G) *G = 0.5 * (*G + G->transpose()).eval();
  return value;
}

void check_point(std::span<const double> d, const DesignSpec& spec) {
  if (d.size() != spec.n_pairs()) {
    throw DimensionError("objective: visitation has " + std::to_string(d.size()) +
                         " entries, feature map has " + std::to_string(spec.n_pairs()) + " pairs");
  }
}

}  // namespace

InfoMatrix info_matrix(const Trajectory& traj, const DesignSpec& spec) {
  const auto m = static_cast<Eigen::Index>(spec.dim());
  InfoMatrix I = InfoMatrix::Zero(m, m);
  const std::size_t A = spec.features->n_actions();
  for (const auto& sa : traj.steps) {
    const std::size_t p = sa.state * A + sa.action;
    const Eigen::VectorXd phi = spec.features->row(p).transpose();
    I.noalias() += phi * phi.transpose() / (spec.sigma[p] * spec.sigma[p]);
  }
  return I;
}

InfoMatrix moment_matrix(std::span<const double> d, const DesignSpec& spec) {
  check_point(d, spec);
  const auto inv_var = inverse_variance(spec);
  std::vector<double> weights(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) weights[i] = d[i] * inv_var[i];
  InfoMatrix M = kernels::weighted_gram(spec.features->table(), weights);
  M.diagonal().array() += spec.rho;
  return M;
}

double objective_from_moment(const Eigen::MatrixXd& moment, const DesignSpec& spec) {
  return evaluate(moment, spec, nullptr, {});
}

double objective_value(std::span<const double> d, const DesignSpec& spec) {
  return evaluate(moment_matrix(d, spec), spec, nullptr, d);
}

double objective_gradient(std::span<const double> d, const DesignSpec& spec,
                          std::span<double> grad) {
  if (grad.size() != spec.n_pairs()) throw DimensionError("objective_gradient: output size");
  Eigen::MatrixXd G;
  const double value = evaluate(moment_matrix(d, spec), spec, &G, d);
  auto scale = inverse_variance(spec);
  for (double& s : scale) s = -s;
  kernels::quadratic_forms(spec.features->table(), G, scale, grad);
  return value;
}

std::vector<double> objective_gradient(std::span<const double> d, const DesignSpec& spec) {
  std::vector<double> grad(spec.n_pairs());
  objective_gradient(d, spec, grad);
  return grad;
}

double trajectory_objective(std::span<const WeightedTrajectory> trajectories,
                            const DesignSpec& spec) {
  const auto m = static_cast<Eigen::Index>(spec.dim());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(m, m);
  double total = 0.0;
  for (const auto& wt : trajectories) {
    if (wt.weight < 0.0) throw InvalidArgument("trajectory_objective: negative weight");
    total += wt.weight;
    if (wt.weight == 0.0 || wt.trajectory.length() == 0) continue;
    S += (wt.weight / static_cast<double>(wt.trajectory.length())) *
         info_matrix(wt.trajectory, spec);
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw InvalidArgument("trajectory_objective: weights must sum to 1");
  }
  S.diagonal().array() += spec.rho;
  return objective_from_moment(S, spec);
}

void RobustSpec::validate() const {
  if (family.empty()) throw InvalidArgument("RobustSpec: empty family");
  for (const auto& spec : family) {
    spec.validate();
    if (spec.n_pairs() != family.front().n_pairs() || spec.dim() != family.front().dim()) {
      throw DimensionError("RobustSpec: family members disagree on the feature map shape");
    }
  }
}

RobustEvaluation robust_value_and_gradient(std::span<const double> d, const RobustSpec& rspec) {
  if (rspec.family.empty()) throw InvalidArgument("robust objective: empty family");
  RobustEvaluation best{-std::numeric_limits<double>::infinity(), {}, 0};
  for (std::size_t k = 0; k < rspec.family.size(); ++k) {
    const double v = objective_value(d, rspec.family[k]);
    if (v > best.value) {
      best.value = v;
      best.argmax = k;
    }
  }
  best.gradient.resize(d.size());
  objective_gradient(d, rspec.family[best.argmax], best.gradient);
  return best;
}

// ---------------------------------------------------------------------------

std::function<double(double)> Objective::segment(std::span<const double> from,
                                                 std::span<const double> to) const {
  std::vector<double> a(from.begin(), from.end());
  std::vector<double> b(to.begin(), to.end());
  return [this, a = std::move(a), b = std::move(b)](double alpha) {
    std::vector<double> point(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) point[i] = (1.0 - alpha) * a[i] + alpha * b[i];
    return value(point);
  };
}

DesignObjective::DesignObjective(DesignSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

double DesignObjective::value(std::span<const double> d) const {
  return objective_value(d, spec_);
}

double DesignObjective::value_and_gradient(std::span<const double> d,
                                           std::span<double> grad) const {
  return objective_gradient(d, spec_, grad);
}

std::function<double(double)> DesignObjective::segment(std::span<const double> from,
                                                       std::span<const double> to) const {
  // M is affine in d, so the segment only needs its two endpoint matrices
  Eigen::MatrixXd M0 = moment_matrix(from, spec_);
  Eigen::MatrixXd M1 = moment_matrix(to, spec_);
  return [this, M0 = std::move(M0), M1 = std::move(M1)](double alpha) {
    return objective_from_moment((1.0 - alpha) * M0 + alpha * M1, spec_);
  };
}

RobustObjective::RobustObjective(RobustSpec rspec) : rspec_(std::move(rspec)) {
  rspec_.validate();
}

double RobustObjective::value(std::span<const double> d) const {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& spec : rspec_.family) best = std::max(best, objective_value(d, spec));
  return best;
}

double RobustObjective::value_and_gradient(std::span<const double> d,
                                           std::span<double> grad) const {
  auto eval = robust_value_and_gradient(d, rspec_);
  std::copy(eval.gradient.begin(), eval.gradient.end(), grad.begin());
  return eval.value;
}

std::function<double(double)> RobustObjective::segment(std::span<const double> from,
                                                       std::span<const double> to) const {
  std::vector<std::pair<Eigen::MatrixXd, Eigen::MatrixXd>> ends;
  ends.reserve(rspec_.family.size());
  for (const auto& spec : rspec_.family) {
    ends.emplace_back(moment_matrix(from, spec), moment_matrix(to, spec));
  }
  return [this, ends = std::move(ends)](double alpha) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < ends.size(); ++k) {
      const auto& [M0, M1] = ends[k];
      best = std::max(best, objective_from_moment((1.0 - alpha) * M0 + alpha * M1,
                                                  rspec_.family[k]));
    }
    return best;
  };
}

AnchoredObjective::AnchoredObjective(const Objective& base, std::vector<double> anchor,
                                     double anchor_weight)
    : base_(base), anchor_(std::move(anchor)), anchor_weight_(anchor_weight) {
  if (anchor_.size() != base_.n_pairs()) throw DimensionError("AnchoredObjective: anchor size");
  if (!(anchor_weight >= 0.0 && anchor_weight < 1.0)) {
    throw InvalidArgument("AnchoredObjective: anchor weight must lie in [0, 1)");
  }
}

std::vector<double> AnchoredObjective::mixed_point(std::span<const double> d) const {
  std::vector<double> point(anchor_.size());
  const double fresh = 1.0 - anchor_weight_;
  for (std::size_t i = 0; i < point.size(); ++i) {
    point[i] = anchor_weight_ * anchor_[i] + fresh * d[i];
  }
  return point;
}

double AnchoredObjective::value(std::span<const double> d) const {
  return base_.value(mixed_point(d));
}

double AnchoredObjective::value_and_gradient(std::span<const double> d,
                                             std::span<double> grad) const {
  const double v = base_.value_and_gradient(mixed_point(d), grad);
  const double fresh = 1.0 - anchor_weight_;
  for (double& g : grad) g *= fresh;
  return v;
}

std::function<double(double)> AnchoredObjective::segment(std::span<const double> from,
                                                         std::span<const double> to) const {
  return base_.segment(mixed_point(from), mixed_point(to));
}

}  // namespace mdesign
