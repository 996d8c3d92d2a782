#include "strategies.hpp"

#include <algorithm>
#include <cmath>

namespace cwss {

FixedStrategy::FixedStrategy(double alpha) : alpha_(alpha) {
  require(alpha > 0.0 && std::isfinite(alpha), ErrorKind::invalid_argument,
          "fixed strategy: alpha must be positive and finite");
}

CwssMatrix FixedStrategy::propose(const ObjectiveProblem&, const BfgsState& s, const DenseVector&) {
  return CwssMatrix::scalar(s.x.size(), alpha_);
}

std::string FixedStrategy::name() const { return "fixed:" + format_g17(alpha_); }

void LineSearchConfig::validate() const {
  require(alpha0 > 0.0, ErrorKind::invalid_argument, "line search: alpha0 must be positive");
  require(shrink > 0.0 && shrink < 1.0, ErrorKind::invalid_argument,
          "line search: shrink must lie in (0, 1)");
  require(c1 > 0.0 && c1 < 1.0, ErrorKind::invalid_argument, "line search: c1 must lie in (0, 1)");
  require(max_backtracks >= 0, ErrorKind::invalid_argument,
          "line search: max_backtracks must be non-negative");
}

LineSearchResult armijo_backtrack(const ObjectiveProblem& problem, const BfgsState& s,
                                  const DenseVector& d, const LineSearchConfig& cfg) {
  cfg.validate();
  const double slope = dot(s.grad, d);  // −(directional derivative along −d)
  DenseVector trial(s.x.size());
  double alpha = cfg.alpha0;
  for (int j = 0; j <= cfg.max_backtracks; ++j) {
    for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = s.x[i] - alpha * d[i];
    const double ft = problem.eval(trial);
    if (std::isfinite(ft) && ft <= s.f - cfg.c1 * alpha * slope) return {alpha, j, ft};
    alpha *= cfg.shrink;
  }
  fail(ErrorKind::not_converged, "Armijo line search exhausted " +
                                     std::to_string(cfg.max_backtracks) +
                                     " backtracks; direction is not a descent direction");
}

CwssMatrix backtracking_line_search(const ObjectiveProblem& problem, const BfgsState& s,
                                    const DenseVector& d, const LineSearchConfig& cfg) {
  return CwssMatrix::scalar(s.x.size(), armijo_backtrack(problem, s, d, cfg).alpha);
}

LineSearchStrategy::LineSearchStrategy(LineSearchConfig cfg) : cfg_(cfg) { cfg_.validate(); }

CwssMatrix LineSearchStrategy::propose(const ObjectiveProblem& problem, const BfgsState& s,
                                       const DenseVector& d) {
  return backtracking_line_search(problem, s, d, cfg_);
}

void HgdConfig::validate() const {
  require(eta > 0.0, ErrorKind::invalid_argument, "hgd: eta must be positive");
  require(inner_steps >= 1, ErrorKind::invalid_argument, "hgd: inner_steps must be >= 1");
  require(clip_min > 0.0, ErrorKind::invalid_argument, "hgd: clip_min must be positive");
}

namespace {

DenseVector trial_point(const DenseVector& x, const DenseVector& d, const DenseVector& p) {
  DenseVector t(x.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = x[i] - p[i] * d[i];
  if (!all_finite(t)) fail(ErrorKind::numeric, "hypergradient: trial point is not finite");
  return t;
}

}  // namespace

DenseVector hypergradient(const ObjectiveProblem& problem, const DenseVector& x,
                          const DenseVector& d, const CwssMatrix& p) {
  require(x.size() == d.size() && d.size() == p.size(), ErrorKind::dimension_mismatch,
          "hypergradient: dimension mismatch");
  const DenseVector g = problem.grad(trial_point(x, d, p.diag()));
  DenseVector h(x.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = -g[i] * d[i];
  return h;
}

CwssMatrix hgd_strategy(const ObjectiveProblem& problem, const BfgsState& s, const DenseVector& d,
                        const HgdConfig& cfg, std::vector<double>* phi_trace) {
  cfg.validate();
  require(s.x.size() == d.size(), ErrorKind::dimension_mismatch, "hgd: dimension mismatch");
  DenseVector p(d.size(), 1.0);
  if (phi_trace) phi_trace->clear();
  for (int i = 0; i < cfg.inner_steps; ++i) {
    auto [phi, g] = problem.eval_grad(trial_point(s.x, d, p));
    if (phi_trace) phi_trace->push_back(phi);
    for (std::size_t j = 0; j < p.size(); ++j) {
      // p ← p − η·(−g_j d_j)
      p[j] = std::max(p[j] + cfg.eta * g[j] * d[j], cfg.clip_min);
    }
    if (!all_finite(p)) fail(ErrorKind::numeric, "hgd: step sizes diverged");
  }
  if (phi_trace) phi_trace->push_back(problem.eval(trial_point(s.x, d, p)));
  return CwssMatrix(std::move(p));
}

HgdStrategy::HgdStrategy(HgdConfig cfg) : cfg_(cfg) { cfg_.validate(); }

CwssMatrix HgdStrategy::propose(const ObjectiveProblem& problem, const BfgsState& s,
                                const DenseVector& d) {
  return hgd_strategy(problem, s, d, cfg_);
}

}  // namespace cwss
