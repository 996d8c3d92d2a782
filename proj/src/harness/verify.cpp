#include <cmath>
#include <cstdio>

#include "harness.hpp"
#include "hexfloat.hpp"

namespace cwss::harness {

namespace {

constexpr double kFdStep = 1e-6;
constexpr double kFdTol = 1e-5;
constexpr double kContractionSlack = 1e-9;

std::string dump_vector(const DenseVector& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + to_hex(v[i]);
  return out + "]";
}

std::string g17(double v) { return format_g17(v); }

/// P uniform in (0, 2γ/L] with γ = 1/‖H‖₂, one fresh draw per iteration.
class Theorem2Strategy final : public StepStrategy {
 public:
  explicit Theorem2Strategy(std::uint64_t seed) : rng_(make_rng(seed, "verify/theorem2")) {}
  CwssMatrix propose(const ObjectiveProblem& problem, const BfgsState& s,
                     const DenseVector& d) override {
    const double bound = 2.0 / (spectral_norm(s.h_inv) * problem.lipschitz());
    std::uniform_real_distribution<double> u(0.0, 1.0);
    DenseVector p(d.size());
    for (auto& v : p) v = bound * (1.0 - u(rng_));
    return CwssMatrix(std::move(p));
  }
  std::string name() const override { return "theorem2"; }

 private:
  Rng rng_;
};

bool has_unique_minimizer(const ObjectiveProblem& p) {
  if (!p.known_optimum()) return false;
  if (p.kind() == ProblemKind::least_squares) return p.rows() >= p.dimension();
  return p.kind() == ProblemKind::logsumexp && p.rows() >= p.dimension();
}

void verify_instance(const ObjectiveProblem& p, const VerifyOptions& opts, VerifyReport& rep) {
  const std::uint64_t seed = p.seed();
  const std::size_t n = p.dimension();
  auto failure = [&](const std::string& suite, const std::string& detail) {
    rep.failures.push_back({suite, seed, detail});
  };

  Rng rng = make_rng(seed, "verify/points");
  for (int t = 0; t < opts.fd_points; ++t) {
    const DenseVector x = unit_gaussian(rng, n);
    ++rep.checks;
    try {
      const DenseVector g = p.grad(x);
      const DenseVector fd =
          finite_diff_grad([&](const DenseVector& z) { return p.eval(z); }, x, kFdStep);
      const double rel = norm2(g - fd) / std::max(norm2(fd), 1e-8);
      if (!(rel < kFdTol))
        failure("gradient", "relative error " + g17(rel) + " at x=" + dump_vector(x));
    } catch (const Error& e) {
      failure("gradient", std::string(e.what()) + " at x=" + dump_vector(x));
    }
  }

  // Certificates along a line-search trajectory from a seeded start.
  LineSearchStrategy ls;
  BfgsState s = init_state(p, unit_gaussian(rng, n));
  for (int k = 0; k < opts.trajectory_steps; ++k) {
    if (norm2(s.grad) == 0.0) break;
    const DenseVector d = search_direction(s);
    ++rep.checks;
    try {
      const GainCheck gc = verify_gain_inequality(p, s.x, s.h_inv, p.lipschitz(), norm2(d));
      if (!gc.ok)
        failure("gain", "k=" + std::to_string(k) + " lhs=" + g17(gc.lhs) + " rhs=" + g17(gc.rhs) +
                            " x=" + dump_vector(s.x));
    } catch (const Error& e) {
      failure("gain", "k=" + std::to_string(k) + ": " + e.what() + " x=" + dump_vector(s.x));
    }
    s = apply_step(s, ls.propose(p, s, d), d, p);
  }

  Theorem1Params t1;
  t1.lipschitz = p.lipschitz();
  Theorem1CompliantStrategy compliant(t1, seed);
  s = init_state(p, unit_gaussian(rng, n));
  for (int k = 0; k < opts.trajectory_steps; ++k) {
    if (norm2(s.grad) == 0.0) break;
    const DenseVector d = search_direction(s);
    CwssMatrix pk = CwssMatrix::identity(n);
    try {
      pk = compliant.propose(p, s, d);
    } catch (const Error& e) {
      rep.notes.push_back("seed " + std::to_string(seed) + ": theorem 1 interval empty at k=" +
                          std::to_string(k));
      break;
    }
    ++rep.checks;
    const Theorem1Check c = check_theorem1(pk, s.h_inv, s.grad, t1);
    BfgsState next = apply_step(s, pk, d, p);
    if (!c.upper || !c.lower)
      failure("theorem1", "k=" + std::to_string(k) + " compliant draw failed its own check");
    else if (!(next.f < s.f))
      failure("theorem1", "k=" + std::to_string(k) + " no descent: f=" + g17(s.f) + " -> " +
                              g17(next.f) + " x=" + dump_vector(s.x));
    s = std::move(next);
  }

  if (!has_unique_minimizer(p)) return;
  const DenseVector& x_star = *p.known_optimum();
  Theorem2Strategy t2(seed);
  s = init_state(p, unit_gaussian(rng, n));
  for (int k = 0; k < opts.trajectory_steps; ++k) {
    if (norm2(s.grad) == 0.0) break;
    const DenseVector d = search_direction(s);
    const CwssMatrix pk = t2.propose(p, s, d);
    ++rep.checks;
    BfgsState next = apply_step(s, pk, d, p);
    const double before = norm2(s.x - x_star), after = norm2(next.x - x_star);
    if (after > before + kContractionSlack)
      failure("theorem2", "k=" + std::to_string(k) + " distance " + g17(before) + " -> " +
                              g17(after) + " x=" + dump_vector(s.x) + " p=" + dump_vector(pk.diag()));
    s = std::move(next);
  }
}

}  // namespace

VerifyReport verify_dataset(const Dataset& ds, const VerifyOptions& opts) {
  if (ds.train.empty() && ds.test.empty()) fail(ErrorKind::invalid_argument, "no instances");
  VerifyReport rep;
  bool any_unique = false;
  for (const auto* split : {&ds.train, &ds.test}) {
    const std::size_t count = std::min(opts.max_instances, split->size());
    for (std::size_t i = 0; i < count; ++i) {
      const ObjectiveProblem& p = (*split)[i];
      any_unique = any_unique || has_unique_minimizer(p);
      if (!all_finite(p.known_optimum().value_or(DenseVector{})) || !std::isfinite(p.lipschitz())) {
        rep.failures.push_back({"schema", p.seed(), "non-finite metadata"});
        continue;
      }
      try {
        verify_instance(p, opts, rep);
      } catch (const Error& e) {
        rep.failures.push_back({"runtime", p.seed(), e.what()});
      }
    }
  }
  if (!any_unique)
    rep.notes.push_back("theorem 2 suite skipped: no instance has a known unique minimizer");
  return rep;
}

std::string report_to_text(const VerifyReport& r) {
  std::string out = "checks: " + std::to_string(r.checks) +
                    ", failures: " + std::to_string(r.failures.size()) + "\n";
  for (const auto& f : r.failures)
    out += "FAIL " + f.suite + " seed=" + std::to_string(f.seed) + ": " + f.detail + "\n";
  for (const auto& n : r.notes) out += "note: " + n + "\n";
  return out;
}

}  // namespace cwss::harness
