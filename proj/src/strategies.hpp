#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "bfgs.hpp"

namespace cwss {

/// Produces the step-size matrix P_k for one BFGS iteration. Implementations
/// may keep state across the iterations of one run; reset() starts a new run.
class StepStrategy {
 public:
  virtual ~StepStrategy() = default;
  virtual void reset(const ObjectiveProblem& /*problem*/) {}
  virtual CwssMatrix propose(const ObjectiveProblem& problem, const BfgsState& s,
                             const DenseVector& d) = 0;
  virtual std::string name() const = 0;
};

/// P = αI every iteration.
class FixedStrategy final : public StepStrategy {
 public:
  explicit FixedStrategy(double alpha);
  CwssMatrix propose(const ObjectiveProblem& problem, const BfgsState& s,
                     const DenseVector& d) override;
  std::string name() const override;

 private:
  double alpha_;
};

struct LineSearchConfig {
  double alpha0 = 1.0;
  double shrink = 0.8;
  double c1 = 1e-4;
  int max_backtracks = 100;

  void validate() const;
};

struct LineSearchResult {
  double alpha = 0.0;
  int backtracks = 0;
  double f_trial = 0.0;
};

/// Largest α in {alpha0·shrinkⁱ} with f(x − αd) ≤ f(x) − c₁ α ∇fᵀd.
/// Throws Error(not_converged) once max_backtracks is exhausted.
LineSearchResult armijo_backtrack(const ObjectiveProblem& problem, const BfgsState& s,
                                  const DenseVector& d, const LineSearchConfig& cfg);

CwssMatrix backtracking_line_search(const ObjectiveProblem& problem, const BfgsState& s,
                                    const DenseVector& d, const LineSearchConfig& cfg);

class LineSearchStrategy final : public StepStrategy {
 public:
  explicit LineSearchStrategy(LineSearchConfig cfg = {});
  CwssMatrix propose(const ObjectiveProblem& problem, const BfgsState& s,
                     const DenseVector& d) override;
  std::string name() const override { return "ls"; }

 private:
  LineSearchConfig cfg_;
};

struct HgdConfig {
  double eta = 1e-2;
  int inner_steps = 20;
  double clip_min = 1e-8;

  void validate() const;
};

/// Diagonal of ∂/∂P f(x − P⊙d): g_i = −(∇f(x − P⊙d))_i · d_i.
DenseVector hypergradient(const ObjectiveProblem& problem, const DenseVector& x,
                          const DenseVector& d, const CwssMatrix& p);

/// P⁰ = I, Pⁱ⁺¹ = max(Pⁱ − η·hypergradient(Pⁱ), clip_min). Optionally records
/// φ(pⁱ) = f(x − pⁱ⊙d) for i = 0..inner_steps.
CwssMatrix hgd_strategy(const ObjectiveProblem& problem, const BfgsState& s, const DenseVector& d,
                        const HgdConfig& cfg, std::vector<double>* phi_trace = nullptr);

class HgdStrategy final : public StepStrategy {
 public:
  explicit HgdStrategy(HgdConfig cfg = {});
  CwssMatrix propose(const ObjectiveProblem& problem, const BfgsState& s,
                     const DenseVector& d) override;
  std::string name() const override { return "hgd"; }

 private:
  HgdConfig cfg_;
};

}  // namespace cwss
