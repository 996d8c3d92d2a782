#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "strategies.hpp"

namespace cwss {

struct Theorem1Params {
  double alpha = 1.99;  // in (0, 2)
  double beta = 1e-3;   // > 0
  double lipschitz = 1.0;

  void validate() const;
};

struct Theorem1Check {
  bool upper = false;  // ‖P‖₂ ≤ α / (L‖H‖₂)
  bool lower = false;  // ‖P⁻¹‖₂ ≤ ‖Hg‖² / (β gᵀHg)
};

/// Both bounds on the diagonal step-size matrix. Throws invalid_argument when
/// the gradient is zero (the conditions are undefined there).
Theorem1Check check_theorem1(const CwssMatrix& p, const DenseMatrix& h_inv,
                             const DenseVector& grad, const Theorem1Params& params);
/// Variant taking a precomputed ‖H‖₂.
Theorem1Check check_theorem1(const CwssMatrix& p, double h_norm, const DenseMatrix& h_inv,
                             const DenseVector& grad, const Theorem1Params& params);

/// True iff 0 < p_i ≤ 2γ/L for every entry.
bool check_theorem2(const DenseVector& p, double gamma, double lipschitz);

/// Per step: ‖x_{k+1} − x*‖ ≤ ‖x_k − x*‖ + slack.
std::vector<bool> monitor_theorem2_contraction(const std::vector<DenseVector>& iterates,
                                               const DenseVector& x_star, double slack = 1e-9);

struct Theorem3Trend {
  std::vector<double> deviations;  // ‖P_k − I‖_F per step
  double first_quartile_mean = 0.0;
  double final_quartile_mean = 0.0;
  bool decreasing = true;  // final-quartile mean < first-quartile mean (both zero passes)
};

Theorem3Trend monitor_theorem3(const std::vector<double>& deviations);
Theorem3Trend monitor_theorem3(const std::vector<CwssMatrix>& ps);

struct ConditionReport {
  bool theorem1_upper_ok = false;
  bool theorem1_lower_ok = false;
  bool theorem2_ok = false;
  double p_dev_frob = 0.0;
  double gamma_est = 0.0;  // 1/‖H‖₂ = λ_min(B_k)
  double h_cond_est = 0.0; // λ_max(H)/λ_min(H), reported without a threshold
};

ConditionReport condition_report(const CwssMatrix& p, const DenseMatrix& h_inv,
                                 const DenseVector& grad, const Theorem1Params& params);

/// Gain construction relative to the optimal scalar step α*:
///   p_i = α* + (g_trial)_i d_i / (L R²),
/// one gradient step on p ↦ f(x − p⊙d), which is (L R²)-smooth when ‖d‖ ≤ R.
struct GainMatrix {
  DenseVector p;
  bool valid = true;  // all entries strictly positive
};

GainMatrix cwss_gain_matrix(double alpha_star, const DenseVector& grad_trial,
                            const DenseVector& d, double lipschitz, double radius);

/// α* = argmin_α f(x − αd) by bisection on φ'(α) = −∇f(x − αd)ᵀd; the
/// bracket grows geometrically from [0, 1].
double exact_scalar_step(const ObjectiveProblem& problem, const DenseVector& x,
                         const DenseVector& d, double width_tol = 1e-12);

struct GainCheck {
  double lhs = 0.0;  // f(x − P⊙d)
  double rhs = 0.0;  // f(x − α*d) − ‖g_trial ⊙ d‖² / (2 L R²)
  bool ok = false;   // lhs ≤ rhs + 1e-9
  double alpha_star = 0.0;
  bool p_positive = true;
};

GainCheck verify_gain_inequality(const ObjectiveProblem& problem, const DenseVector& x,
                                 const DenseMatrix& h_inv, double lipschitz, double radius);

/// Draws every p_i uniformly inside the interval permitted by check_theorem1.
/// Throws when the interval is empty.
class Theorem1CompliantStrategy final : public StepStrategy {
 public:
  Theorem1CompliantStrategy(Theorem1Params params, std::uint64_t seed);
  void reset(const ObjectiveProblem& problem) override;
  CwssMatrix propose(const ObjectiveProblem& problem, const BfgsState& s,
                     const DenseVector& d) override;
  std::string name() const override { return "theorem1"; }

 private:
  Theorem1Params params_;
  std::uint64_t seed_;
  Rng rng_;
};

}  // namespace cwss
