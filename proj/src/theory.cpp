#include "theory.hpp"

#include <algorithm>
#include <cmath>

namespace cwss {

void Theorem1Params::validate() const {
  require(alpha > 0.0 && alpha < 2.0, ErrorKind::invalid_argument,
          "theorem 1: alpha must lie in (0, 2)");
  require(beta > 0.0, ErrorKind::invalid_argument, "theorem 1: beta must be positive");
  require(lipschitz > 0.0, ErrorKind::invalid_argument, "theorem 1: L must be positive");
}

Theorem1Check check_theorem1(const CwssMatrix& p, double h_norm, const DenseMatrix& h_inv,
                             const DenseVector& grad, const Theorem1Params& params) {
  params.validate();
  if (norm2(grad) == 0.0)
    fail(ErrorKind::invalid_argument, "theorem 1 conditions are undefined at a zero gradient");
  const DenseVector hg = matvec(h_inv, grad);
  const double ghg = dot(grad, hg);
  Theorem1Check out;
  out.upper = p.max_entry() <= params.alpha / (params.lipschitz * h_norm);
  out.lower = 1.0 / p.min_entry() <= dot(hg, hg) / (params.beta * ghg);
  return out;
}

Theorem1Check check_theorem1(const CwssMatrix& p, const DenseMatrix& h_inv,
                             const DenseVector& grad, const Theorem1Params& params) {
  return check_theorem1(p, spectral_norm(h_inv), h_inv, grad, params);
}

bool check_theorem2(const DenseVector& p, double gamma, double lipschitz) {
  require(gamma > 0.0 && lipschitz > 0.0, ErrorKind::invalid_argument,
          "theorem 2: gamma and L must be positive");
  const double bound = 2.0 * gamma / lipschitz;
  return std::all_of(p.begin(), p.end(), [bound](double v) { return v > 0.0 && v <= bound; });
}

std::vector<bool> monitor_theorem2_contraction(const std::vector<DenseVector>& iterates,
                                               const DenseVector& x_star, double slack) {
  std::vector<bool> out;
  if (iterates.size() < 2) return out;
  out.reserve(iterates.size() - 1);
  double prev = norm2(iterates.front() - x_star);
  for (std::size_t k = 1; k < iterates.size(); ++k) {
    const double cur = norm2(iterates[k] - x_star);
    out.push_back(cur <= prev + slack);
    prev = cur;
  }
  return out;
}

Theorem3Trend monitor_theorem3(const std::vector<double>& deviations) {
  Theorem3Trend t;
  t.deviations = deviations;
  const std::size_t n = deviations.size();
  if (n == 0) return t;
  const std::size_t q = std::max<std::size_t>(1, n / 4);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < q; ++i) {
    first += deviations[i];
    last += deviations[n - q + i];
  }
  t.first_quartile_mean = first / static_cast<double>(q);
  t.final_quartile_mean = last / static_cast<double>(q);
  t.decreasing = t.final_quartile_mean < t.first_quartile_mean ||
                 (t.final_quartile_mean == 0.0 && t.first_quartile_mean == 0.0);
  return t;
}

Theorem3Trend monitor_theorem3(const std::vector<CwssMatrix>& ps) {
  std::vector<double> dev;
  dev.reserve(ps.size());
  for (const auto& p : ps) dev.push_back(p.deviation_from_identity());
  return monitor_theorem3(dev);
}

ConditionReport condition_report(const CwssMatrix& p, const DenseMatrix& h_inv,
                                 const DenseVector& grad, const Theorem1Params& params) {
  ConditionReport r;
  const double h_norm = spectral_norm(h_inv);
  r.gamma_est = 1.0 / h_norm;
  r.p_dev_frob = p.deviation_from_identity();
  if (norm2(grad) > 0.0) {
    const auto t1 = check_theorem1(p, h_norm, h_inv, grad, params);
    r.theorem1_upper_ok = t1.upper;
    r.theorem1_lower_ok = t1.lower;
  }
  r.theorem2_ok = check_theorem2(p.diag(), r.gamma_est, params.lipschitz);
  DenseMatrix shifted = h_inv;
  for (std::size_t i = 0; i < shifted.rows(); ++i)
    for (std::size_t j = 0; j < shifted.cols(); ++j)
      shifted(i, j) = (i == j ? h_norm : 0.0) - h_inv(i, j);
  // Informational only, so a loose tolerance: the low end of H's spectrum is
  // often clustered and a tight solve dominates a monitored run.
  double shifted_norm;
  try {
    shifted_norm = spectral_norm(shifted, {1e-4, 500});
  } catch (const NotConverged& e) {
    shifted_norm = e.estimate();
  }
  const double lam_min = h_norm - shifted_norm;
  r.h_cond_est = lam_min > 0.0 ? h_norm / lam_min : std::numeric_limits<double>::infinity();
  return r;
}

GainMatrix cwss_gain_matrix(double alpha_star, const DenseVector& grad_trial,
                            const DenseVector& d, double lipschitz, double radius) {
  require(lipschitz > 0.0 && radius > 0.0, ErrorKind::invalid_argument,
          "gain matrix: L and R must be positive");
  require(grad_trial.size() == d.size(), ErrorKind::dimension_mismatch,
          "gain matrix: dimension mismatch");
  const double step = 1.0 / (lipschitz * radius * radius);
  GainMatrix g{DenseVector(d.size()), true};
  for (std::size_t i = 0; i < d.size(); ++i) {
    g.p[i] = alpha_star + step * grad_trial[i] * d[i];
    if (!(g.p[i] > 0.0)) g.valid = false;
  }
  return g;
}

namespace {

double directional_derivative(const ObjectiveProblem& problem, const DenseVector& x,
                              const DenseVector& d, double alpha) {
  DenseVector t(x.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = x[i] - alpha * d[i];
  const DenseVector g = problem.grad(t);
  if (!all_finite(g)) fail(ErrorKind::numeric, "line minimization: non-finite gradient");
  return -dot(g, d);
}

}  // namespace

double exact_scalar_step(const ObjectiveProblem& problem, const DenseVector& x,
                         const DenseVector& d, double width_tol) {
  const double slope0 = directional_derivative(problem, x, d, 0.0);
  if (slope0 >= 0.0) return 0.0;  // −d is not a descent direction (or d = 0)
  double lo = 0.0;
  double hi = 1.0;
  int grow = 0;
  while (directional_derivative(problem, x, d, hi) < 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++grow > 200) fail(ErrorKind::not_converged, "line minimization: no bracket found");
  }
  while (hi - lo > width_tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (directional_derivative(problem, x, d, mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

GainCheck verify_gain_inequality(const ObjectiveProblem& problem, const DenseVector& x,
                                 const DenseMatrix& h_inv, double lipschitz, double radius) {
  const DenseVector d = matvec(h_inv, problem.grad(x));
  require(norm2(d) <= radius, ErrorKind::invalid_argument,
          "gain inequality: R must bound the direction norm");
  GainCheck out;
  out.alpha_star = exact_scalar_step(problem, x, d);
  DenseVector trial(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) trial[i] = x[i] - out.alpha_star * d[i];
  auto [f_trial, g_trial] = problem.eval_grad(trial);
  const GainMatrix gain = cwss_gain_matrix(out.alpha_star, g_trial, d, lipschitz, radius);
  out.p_positive = gain.valid;
  DenseVector moved(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) moved[i] = x[i] - gain.p[i] * d[i];
  out.lhs = problem.eval(moved);
  const double gain_sq = dot(hadamard(g_trial, d), hadamard(g_trial, d));
  out.rhs = f_trial - gain_sq / (2.0 * lipschitz * radius * radius);
  out.ok = out.lhs <= out.rhs + 1e-9;
  return out;
}

Theorem1CompliantStrategy::Theorem1CompliantStrategy(Theorem1Params params, std::uint64_t seed)
    : params_(params), seed_(seed), rng_(make_rng(seed, "theorem1-strategy")) {
  params_.validate();
}

void Theorem1CompliantStrategy::reset(const ObjectiveProblem&) {
  rng_ = make_rng(seed_, "theorem1-strategy");
}

CwssMatrix Theorem1CompliantStrategy::propose(const ObjectiveProblem&, const BfgsState& s,
                                              const DenseVector& d) {
  const double hi = params_.alpha / (params_.lipschitz * spectral_norm(s.h_inv));
  const double lo = params_.beta * dot(s.grad, d) / dot(d, d);
  if (!(lo < hi)) fail(ErrorKind::numeric, "theorem 1 interval is empty at this iterate");
  // Stay strictly inside so rounding in the check cannot flip a boundary draw.
  std::uniform_real_distribution<double> u(0.05, 0.95);
  DenseVector p(d.size());
  for (auto& v : p) v = lo + u(rng_) * (hi - lo);
  return CwssMatrix(std::move(p));
}

}  // namespace cwss
