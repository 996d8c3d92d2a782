#pragma once

#include <functional>
#include <string>
#include <vector>

#include "numerics.hpp"
#include "problems.hpp"

namespace cwss {

/// Diagonal coordinate-wise step-size matrix P_k, stored as its diagonal.
/// Every entry is strictly positive and finite.
class CwssMatrix {
 public:
  explicit CwssMatrix(DenseVector p);

  static CwssMatrix identity(std::size_t n) { return CwssMatrix(DenseVector(n, 1.0)); }
  static CwssMatrix scalar(std::size_t n, double alpha) {
    return CwssMatrix(DenseVector(n, alpha));
  }

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t i) const noexcept { return p_[i]; }
  const DenseVector& diag() const noexcept { return p_; }

  double max_entry() const;
  double min_entry() const;
  /// ‖P − I‖_F.
  double deviation_from_identity() const;

 private:
  DenseVector p_;
};

struct BfgsState {
  DenseVector x;
  DenseMatrix h_inv;  // H_k = B_k⁻¹
  DenseVector grad;
  double f = 0.0;
  int k = 0;
  bool last_skip = false;
};

struct StopCriteria {
  double grad_tol = 1e-10;
  int max_iters = 500;
};

/// Relative curvature threshold below which the inverse-Hessian update is skipped.
inline constexpr double kCurvatureEps = 1e-12;
/// Period (in iterations) of the explicit (H + Hᵀ)/2 re-symmetrization.
inline constexpr int kResymmetrizePeriod = 50;

BfgsState init_state(const ObjectiveProblem& problem, const DenseVector& x0);

/// d_k = H_k ∇f(x_k).
DenseVector search_direction(const BfgsState& s);

struct InverseUpdate {
  DenseMatrix h_inv;
  bool skipped = false;
};

/// Inverse BFGS update H' = (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ, ρ = 1/(yᵀs).
/// Skipped (H returned unchanged) unless yᵀs > curvature_eps·‖s‖·‖y‖.
InverseUpdate update_inverse_hessian(const DenseMatrix& h_inv, const DenseVector& s,
                                     const DenseVector& y, double curvature_eps = kCurvatureEps);

/// Moves to an already evaluated point x_next and updates H. Increments k.
BfgsState accept_point(const BfgsState& s, DenseVector x_next, double f_next,
                       DenseVector grad_next);

/// x_{k+1} = x_k − P ⊙ d_k with d_k = H_k∇f(x_k), then the inverse-Hessian update.
BfgsState apply_step(const BfgsState& s, const CwssMatrix& p, const ObjectiveProblem& problem);

/// Same as apply_step with a precomputed direction.
BfgsState apply_step(const BfgsState& s, const CwssMatrix& p, const DenseVector& d,
                     const ObjectiveProblem& problem);

class StepStrategy;

struct ConvergenceRecord {
  int k = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double p_dev_frob = 0.0;
  bool skipped = false;
  double elapsed_ms = 0.0;
};

/// Everything an observer sees about one iteration, before the step is taken.
struct StepEvent {
  const ObjectiveProblem& problem;
  const BfgsState& before;
  const DenseVector& direction;
  const CwssMatrix& p;
  const BfgsState& after;
};

using StepObserver = std::function<void(const StepEvent&)>;

/// Thrown when a run cannot continue; carries the trace recorded so far.
class RunAborted : public Error {
 public:
  RunAborted(const std::string& what, std::vector<ConvergenceRecord> partial)
      : Error(ErrorKind::numeric, what), trace_(std::move(partial)) {}
  const std::vector<ConvergenceRecord>& trace() const noexcept { return trace_; }

 private:
  std::vector<ConvergenceRecord> trace_;
};

struct RunResult {
  std::vector<ConvergenceRecord> trace;  // trace[0] is the starting point
  BfgsState final_state;
  bool converged = false;
};

/// Iterates until ‖∇f‖₂ ≤ grad_tol or k == max_iters. The initial state may
/// be supplied to seed H (e.g. with an exact inverse Hessian).
RunResult run(const ObjectiveProblem& problem, BfgsState start, StepStrategy& strategy,
              const StopCriteria& stop, const StepObserver& observer = {});
RunResult run(const ObjectiveProblem& problem, const DenseVector& x0, StepStrategy& strategy,
              const StopCriteria& stop, const StepObserver& observer = {});

/// CSV with header `k,f,grad_norm,p_dev_frob,skipped,elapsed_ms`, floats at 17
/// significant digits.
std::string trace_to_csv(const std::vector<ConvergenceRecord>& trace);
std::vector<ConvergenceRecord> trace_from_csv(std::string_view csv);
std::string format_g17(double v);

}  // namespace cwss
