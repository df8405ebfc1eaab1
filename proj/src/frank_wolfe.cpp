#include "mdesign/frank_wolfe.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mdesign/density.hpp"
#include "mdesign/error.hpp"
#include "mdesign/planner.hpp"

namespace mdesign {

namespace {

constexpr double kGapSlack = 1e-10;

void validate(const FWConfig& cfg) {
  if (!(cfg.gap_tol > 0.0)) throw InvalidArgument("FWConfig: gap_tol must be positive");
  if (cfg.max_iters == 0) throw InvalidArgument("FWConfig: max_iters must be positive");
  if (!(cfg.linesearch_tol > 0.0)) {
    throw InvalidArgument("FWConfig: linesearch_tol must be positive");
  }
  if (cfg.step_rule == StepRule::Fixed && !(cfg.fixed_step > 0.0 && cfg.fixed_step <= 1.0)) {
    throw InvalidArgument("FWConfig: fixed_step must lie in (0, 1]");
  }
}

}  // namespace

FWStart start_from_policy(const TabularMdp& mdp, NonstationaryPolicy policy) {
  auto density = propagate_density(mdp, policy);
  return FWStart{MixturePolicy::single(std::move(policy)), std::move(density), false};
}

double duality_gap(std::span<const double> d, std::span<const double> d_lmo,
                   std::span<const double> gradient, bool allow_negative) {
  if (d.size() != d_lmo.size() || d.size() != gradient.size()) {
    throw DimensionError("duality_gap: size mismatch");
  }
  double gap = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) gap += gradient[i] * (d[i] - d_lmo[i]);
  if (!allow_negative && gap < -kGapSlack) {
    std::ostringstream msg;
    msg << "duality_gap: negative gap " << gap << " (linear oracle not optimal)";
    throw NumericalError(msg.str());
  }
  return gap;
}

double line_search(const std::function<double(double)>& phi, double slope_at_zero, double tol) {
  if (!(slope_at_zero < 0.0)) return 0.0;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = 0.0;
  double b = 1.0;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = phi(c);
  double fd = phi(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = phi(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = phi(d);
    }
  }
  double best = 0.5 * (a + b);
  double f_best = phi(best);
  const double f_one = phi(1.0);
  if (f_one <= f_best) {
    best = 1.0;
    f_best = f_one;
  }
  if (f_best > phi(0.0)) return 0.0;
  return std::clamp(best, 0.0, 1.0);
}

double line_search(const Objective& objective, std::span<const double> d_cur,
                   std::span<const double> d_new, double tol) {
  if (d_cur.size() != d_new.size()) throw DimensionError("line_search: size mismatch");
  bool same = true;
  for (std::size_t i = 0; i < d_cur.size() && same; ++i) same = d_cur[i] == d_new[i];
  if (same) return 0.0;
  std::vector<double> grad(d_cur.size());
  objective.value_and_gradient(d_cur, grad);
  double slope = 0.0;
  for (std::size_t i = 0; i < d_cur.size(); ++i) slope += grad[i] * (d_new[i] - d_cur[i]);
  return line_search(objective.segment(d_cur, d_new), slope, tol);
}

FWResult frank_wolfe(const TabularMdp& mdp, const Objective& objective, FWStart start,
                     const FWConfig& cfg) {
  validate(cfg);
  if (start.mixture.empty()) throw InvalidArgument("frank_wolfe: empty starting mixture");
  if (start.density.horizon() != mdp.horizon() || start.density.n_states() != mdp.n_states() ||
      start.density.n_actions() != mdp.n_actions()) {
    throw DimensionError("frank_wolfe: starting density does not match the chain");
  }
  if (objective.n_pairs() != mdp.n_pairs()) {
    throw DimensionError("frank_wolfe: objective and chain disagree on the pair count");
  }

  FWResult out;
  out.mixture = std::move(start.mixture);
  out.density = std::move(start.density);
  out.pseudo_density = start.pseudo_density;
  if (out.pseudo_density) out.mixture_density = mixture_density(mdp, out.mixture);

  std::vector<double> grad(mdp.n_pairs());
  double value = objective.value_and_gradient(out.density.averaged(), grad);
  for (;;) {
    auto plan = solve_rl(mdp, RewardTable{grad});
    const double gap = duality_gap(out.density.averaged(), plan.density.averaged(), grad,
                                   out.pseudo_density);
    out.gap_trace.push_back(gap);
    out.value_trace.push_back(value);
    out.final_value = value;
    out.final_gap = gap;
    if (gap <= cfg.gap_tol) {
      out.converged = true;
      break;
    }
    if (out.iterations >= cfg.max_iters) break;

    double alpha = cfg.fixed_step;
    if (cfg.step_rule == StepRule::LineSearch) {
      alpha = line_search(objective.segment(out.density.averaged(), plan.density.averaged()),
                          -gap, cfg.linesearch_tol);
      // No representable descent along the oracle direction.
      if (alpha == 0.0) break;
    }
    out.mixture.blend_in(alpha, std::move(plan.policy));
    out.density.blend(alpha, plan.density);
    if (out.pseudo_density) out.mixture_density.blend(alpha, plan.density);
    value = objective.value_and_gradient(out.density.averaged(), grad);
    ++out.iterations;
  }
  if (!out.pseudo_density) out.mixture_density = out.density;
  return out;
}

}  // namespace mdesign
