#include "bfgs.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "strategies.hpp"

namespace cwss {

CwssMatrix::CwssMatrix(DenseVector p) : p_(std::move(p)) {
  for (std::size_t i = 0; i < p_.size(); ++i) {
    if (!(p_[i] > 0.0) || !std::isfinite(p_[i])) {
      fail(ErrorKind::numeric, "step-size entry " + std::to_string(i) +
                                   " must be positive and finite, got " + format_g17(p_[i]));
    }
  }
}

double CwssMatrix::max_entry() const {
  double m = 0.0;
  for (double v : p_) m = std::max(m, v);
  return m;
}

double CwssMatrix::min_entry() const {
  double m = std::numeric_limits<double>::infinity();
  for (double v : p_) m = std::min(m, v);
  return m;
}

double CwssMatrix::deviation_from_identity() const {
  double s = 0.0;
  for (double v : p_) s += (v - 1.0) * (v - 1.0);
  return std::sqrt(s);
}

BfgsState init_state(const ObjectiveProblem& problem, const DenseVector& x0) {
  BfgsState s;
  auto [f, g] = problem.eval_grad(x0);
  if (!std::isfinite(f) || !all_finite(g))
    fail(ErrorKind::numeric, "init_state: objective or gradient not finite at x0");
  s.x = x0;
  s.h_inv = DenseMatrix::identity(x0.size());
  s.grad = std::move(g);
  s.f = f;
  return s;
}

DenseVector search_direction(const BfgsState& s) {
  DenseVector d = matvec(s.h_inv, s.grad);
  if (!all_finite(d)) fail(ErrorKind::numeric, "search direction is not finite");
  return d;
}

InverseUpdate update_inverse_hessian(const DenseMatrix& h_inv, const DenseVector& s,
                                     const DenseVector& y, double curvature_eps) {
  require(s.size() == y.size() && h_inv.rows() == s.size() && h_inv.square(),
          ErrorKind::dimension_mismatch, "update_inverse_hessian: shape mismatch");
  const double ys = dot(y, s);
  if (!(ys > curvature_eps * norm2(s) * norm2(y))) return {h_inv, true};

  const std::size_t n = s.size();
  const double rho = 1.0 / ys;
  const DenseVector hy = matvec(h_inv, y);
  const double yhy = dot(y, hy);
  const double coef = rho * rho * yhy + rho;
  DenseMatrix out = h_inv;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = out.row(i);
    const double si = s[i];
    const double hyi = hy[i];
    for (std::size_t j = 0; j < n; ++j) {
      row[j] += -rho * (si * hy[j] + hyi * s[j]) + coef * si * s[j];
    }
  }
  return {std::move(out), false};
}

BfgsState accept_point(const BfgsState& s, DenseVector x_next, double f_next,
                       DenseVector grad_next) {
  if (!std::isfinite(f_next) || !all_finite(x_next) || !all_finite(grad_next))
    fail(ErrorKind::numeric, "step produced a non-finite iterate at k=" + std::to_string(s.k + 1));
  const DenseVector step = x_next - s.x;
  const DenseVector dy = grad_next - s.grad;
  InverseUpdate up = update_inverse_hessian(s.h_inv, step, dy);
  BfgsState next;
  next.x = std::move(x_next);
  next.grad = std::move(grad_next);
  next.f = f_next;
  next.k = s.k + 1;
  next.last_skip = up.skipped;
  next.h_inv = std::move(up.h_inv);
  if (next.k % kResymmetrizePeriod == 0) next.h_inv = symmetrized(next.h_inv);
  return next;
}

BfgsState apply_step(const BfgsState& s, const CwssMatrix& p, const DenseVector& d,
                     const ObjectiveProblem& problem) {
  require(p.size() == s.x.size() && d.size() == s.x.size(), ErrorKind::dimension_mismatch,
          "apply_step: step-size matrix does not match the problem dimension");
  DenseVector x_next(s.x.size());
  for (std::size_t i = 0; i < x_next.size(); ++i) x_next[i] = s.x[i] - p[i] * d[i];
  if (!all_finite(x_next))
    fail(ErrorKind::numeric, "step produced a non-finite iterate at k=" + std::to_string(s.k + 1));
  auto [f, g] = problem.eval_grad(x_next);
  return accept_point(s, std::move(x_next), f, std::move(g));
}

BfgsState apply_step(const BfgsState& s, const CwssMatrix& p, const ObjectiveProblem& problem) {
  return apply_step(s, p, search_direction(s), problem);
}

RunResult run(const ObjectiveProblem& problem, BfgsState start, StepStrategy& strategy,
              const StopCriteria& stop, const StepObserver& observer) {
  require(stop.grad_tol > 0.0 && stop.max_iters >= 1, ErrorKind::invalid_argument,
          "stop criteria: grad_tol must be > 0 and max_iters >= 1");
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  auto elapsed = [&t0] {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };

  strategy.reset(problem);
  RunResult result;
  BfgsState state = std::move(start);
  double gnorm = norm2(state.grad);
  result.trace.push_back({state.k, state.f, gnorm, 0.0, false, elapsed()});

  while (gnorm > stop.grad_tol && state.k < stop.max_iters) {
    try {
      const DenseVector d = search_direction(state);
      const CwssMatrix p = strategy.propose(problem, state, d);
      BfgsState next = apply_step(state, p, d, problem);
      if (observer) observer(StepEvent{problem, state, d, p, next});
      gnorm = norm2(next.grad);
      result.trace.push_back(
          {next.k, next.f, gnorm, p.deviation_from_identity(), next.last_skip, elapsed()});
      state = std::move(next);
    } catch (const Error& e) {
      throw RunAborted(strategy.name() + " run aborted at k=" + std::to_string(state.k) + ": " +
                           e.what(),
                       std::move(result.trace));
    }
  }
  result.converged = gnorm <= stop.grad_tol;
  result.final_state = std::move(state);
  return result;
}

RunResult run(const ObjectiveProblem& problem, const DenseVector& x0, StepStrategy& strategy,
              const StopCriteria& stop, const StepObserver& observer) {
  return run(problem, init_state(problem, x0), strategy, stop, observer);
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_to_csv(const std::vector<ConvergenceRecord>& trace) {
  std::string out = "k,f,grad_norm,p_dev_frob,skipped,elapsed_ms\n";
  for (const auto& r : trace) {
    out += std::to_string(r.k);
    out += ',';
    out += format_g17(r.f);
    out += ',';
    out += format_g17(r.grad_norm);
    out += ',';
    out += format_g17(r.p_dev_frob);
    out += r.skipped ? ",1," : ",0,";
    out += format_g17(r.elapsed_ms);
    out += '\n';
  }
  return out;
}

std::vector<ConvergenceRecord> trace_from_csv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("k,f,grad_norm,p_dev_frob,skipped,elapsed_ms", 0) != 0)
    fail(ErrorKind::schema, "trace CSV: unexpected header");
  std::vector<ConvergenceRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() < 6) fail(ErrorKind::schema, "trace CSV: short row '" + line + "'");
    ConvergenceRecord r;
    auto number = [&line](const std::string& c) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size())
        fail(ErrorKind::schema, "trace CSV: bad number in row '" + line + "'");
      return v;
    };
    r.k = static_cast<int>(number(cells[0]));
    r.f = number(cells[1]);
    r.grad_norm = number(cells[2]);
    r.p_dev_frob = number(cells[3]);
    r.skipped = cells[4] == "1";
    r.elapsed_ms = number(cells[5]);
    out.push_back(r);
  }
  return out;
}

}  // namespace cwss
