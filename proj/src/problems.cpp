#include "problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rng.hpp"

namespace cwss {

namespace {

// Any positive number bounds the gradient Lipschitz constant of a constant
// objective; keeps L > 0 for degenerate instances.
constexpr double kMinLipschitz = std::numeric_limits<double>::min();

double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// z_i = a_iᵀx − b_i, returns (max-shifted log-sum-exp, softmax weights).
std::pair<double, DenseVector> lse_terms(const DenseMatrix& a, const DenseVector& b,
                                         const DenseVector& x) {
  DenseVector z = matvec(a, x);
  double zmax = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] -= b[i];
    zmax = std::max(zmax, z[i]);
  }
  double sum = 0.0;
  for (auto& zi : z) {
    zi = std::exp(zi - zmax);
    sum += zi;
  }
  for (auto& zi : z) zi /= sum;
  return {zmax + std::log(sum), std::move(z)};
}

double lipschitz_of_gram(const DenseMatrix& a, double scale) {
  return std::max(scale * spectral_norm(gram(a)), kMinLipschitz);
}

}  // namespace

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::least_squares: return "least_squares";
    case ProblemKind::logistic: return "logistic";
    case ProblemKind::logsumexp: return "logsumexp";
  }
  return "unknown";
}

ProblemKind parse_problem_kind(std::string_view name) {
  if (name == "least_squares") return ProblemKind::least_squares;
  if (name == "logistic") return ProblemKind::logistic;
  if (name == "logsumexp") return ProblemKind::logsumexp;
  fail(ErrorKind::invalid_argument, "unknown problem kind '" + std::string(name) + "'");
}

ObjectiveProblem::ObjectiveProblem(ProblemPayload payload, std::uint64_t seed, double lipschitz,
                                   std::optional<DenseVector> known_optimum,
                                   std::optional<double> known_optimal_value)
    : payload_(std::move(payload)),
      seed_(seed),
      lipschitz_(lipschitz),
      known_optimum_(std::move(known_optimum)),
      known_optimal_value_(known_optimal_value) {
  std::visit(
      [this](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LogisticPayload>) {
          n_ = p.features.cols();
          m_ = p.features.rows();
          require(p.labels.size() == m_, ErrorKind::dimension_mismatch,
                  "logistic: label count does not match sample count");
          require(p.rho > 0.0, ErrorKind::invalid_argument, "logistic: rho must be positive");
          for (int l : p.labels)
            require(l == 0 || l == 1, ErrorKind::invalid_argument, "logistic: labels must be 0/1");
        } else {
          n_ = p.a.cols();
          m_ = p.a.rows();
          require(p.b.size() == m_, ErrorKind::dimension_mismatch,
                  "payload: b length does not match row count");
        }
      },
      payload_);
  require(lipschitz_ > 0.0, ErrorKind::invalid_argument, "Lipschitz bound must be positive");
  if (known_optimum_)
    require(known_optimum_->size() == n_, ErrorKind::dimension_mismatch,
            "known optimum has the wrong length");
}

ProblemKind ObjectiveProblem::kind() const noexcept {
  return static_cast<ProblemKind>(payload_.index());
}

void ObjectiveProblem::check_dim(const DenseVector& x) const {
  if (x.size() != n_) {
    fail(ErrorKind::dimension_mismatch, "objective expects length " + std::to_string(n_) +
                                            ", got " + std::to_string(x.size()));
  }
}

double ObjectiveProblem::eval(const DenseVector& x) const {
  check_dim(x);
  return std::visit(
      [&x](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LeastSquaresPayload>) {
          const DenseVector r = matvec(p.a, x) - p.b;
          return 0.5 * dot(r, r);
        } else if constexpr (std::is_same_v<T, LogisticPayload>) {
          const DenseVector t = matvec(p.features, x);
          double s = 0.0;
          for (std::size_t i = 0; i < t.size(); ++i) s += softplus(t[i]) - p.labels[i] * t[i];
          return s / static_cast<double>(t.size()) + p.rho * dot(x, x);
        } else {
          return lse_terms(p.a, p.b, x).first;
        }
      },
      payload_);
}

DenseVector ObjectiveProblem::grad(const DenseVector& x) const { return eval_grad(x).second; }

std::pair<double, DenseVector> ObjectiveProblem::eval_grad(const DenseVector& x) const {
  check_dim(x);
  return std::visit(
      [&x](const auto& p) -> std::pair<double, DenseVector> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LeastSquaresPayload>) {
          const DenseVector r = matvec(p.a, x) - p.b;
          return {0.5 * dot(r, r), matvec_transposed(p.a, r)};
        } else if constexpr (std::is_same_v<T, LogisticPayload>) {
          const DenseVector t = matvec(p.features, x);
          const double inv_m = 1.0 / static_cast<double>(t.size());
          double s = 0.0;
          DenseVector resid(t.size());
          for (std::size_t i = 0; i < t.size(); ++i) {
            s += softplus(t[i]) - p.labels[i] * t[i];
            resid[i] = (sigmoid(t[i]) - p.labels[i]) * inv_m;
          }
          DenseVector g = matvec_transposed(p.features, resid);
          for (std::size_t j = 0; j < g.size(); ++j) g[j] += 2.0 * p.rho * x[j];
          return {s * inv_m + p.rho * dot(x, x), std::move(g)};
        } else {
          auto [f, w] = lse_terms(p.a, p.b, x);
          return {f, matvec_transposed(p.a, w)};
        }
      },
      payload_);
}

std::size_t sparsified_zero_count(std::size_t m, std::size_t n) {
  // ⌈9mn/10⌉ in integer arithmetic.
  return (9 * m * n + 9) / 10;
}

std::optional<DenseVector> least_norm_solution(const DenseMatrix& a, const DenseVector& b,
                                               double rel_tol) {
  const std::size_t n = a.cols();
  DenseVector x(n);
  DenseVector r = b;
  DenseVector s = matvec_transposed(a, r);
  DenseVector p = s;
  const double target = rel_tol * std::max(1.0, norm2(s));
  double gamma = dot(s, s);
  const std::size_t max_iter = 20 * std::max<std::size_t>(n, 10);
  for (std::size_t it = 0; it < max_iter; ++it) {
    if (std::sqrt(gamma) <= target) break;
    const DenseVector q = matvec(a, p);
    const double qq = dot(q, q);
    if (qq == 0.0) break;
    const double alpha = gamma / qq;
    for (std::size_t j = 0; j < n; ++j) x[j] += alpha * p[j];
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * q[i];
    s = matvec_transposed(a, r);
    const double gamma_new = dot(s, s);
    const double beta = gamma_new / gamma;
    gamma = gamma_new;
    for (std::size_t j = 0; j < n; ++j) p[j] = s[j] + beta * p[j];
  }
  // Recompute the true residual; the recurrence drifts.
  const DenseVector true_s = matvec_transposed(a, matvec(a, x) - b);
  if (norm2(true_s) > target) return std::nullopt;
  return x;
}

ObjectiveProblem make_least_squares(DenseMatrix a, DenseVector b, std::uint64_t seed) {
  require(a.rows() == b.size(), ErrorKind::dimension_mismatch,
          "least squares: b length must equal the row count of A");
  const double lip = lipschitz_of_gram(a, 1.0);
  auto xstar = least_norm_solution(a, b);
  std::optional<double> fstar;
  if (xstar) {
    const DenseVector r = matvec(a, *xstar) - b;
    fstar = 0.5 * dot(r, r);
  }
  return ObjectiveProblem(LeastSquaresPayload{std::move(a), std::move(b)}, seed, lip,
                          std::move(xstar), fstar);
}

ObjectiveProblem gen_least_squares(std::size_t m, std::size_t n, std::uint64_t seed) {
  require(m >= 1 && n >= 1, ErrorKind::invalid_argument, "least squares: m, n must be >= 1");
  Rng rng = make_rng(seed, "problem/least_squares");
  std::normal_distribution<double> normal;
  DenseMatrix a(m, n);
  for (auto& v : a.flat()) v = normal(rng);
  std::vector<std::size_t> idx(m * n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t zeros = sparsified_zero_count(m, n);
  for (std::size_t k = 0; k < zeros; ++k) a.flat()[idx[k]] = 0.0;
  DenseVector b(m);
  for (auto& v : b) v = normal(rng);
  return make_least_squares(std::move(a), std::move(b), seed);
}

ObjectiveProblem gen_logistic(std::size_t m, std::size_t n, double rho, std::uint64_t seed) {
  require(m >= 1 && n >= 1, ErrorKind::invalid_argument, "logistic: m, n must be >= 1");
  require(rho > 0.0, ErrorKind::invalid_argument, "logistic: rho must be positive");
  Rng rng = make_rng(seed, "problem/logistic");
  std::normal_distribution<double> normal;
  DenseMatrix features(m, n);
  for (auto& v : features.flat()) v = normal(rng);
  DenseVector truth(n);
  for (auto& v : truth) v = normal(rng);
  const DenseVector t = matvec(features, truth);
  std::vector<int> labels(m);
  for (std::size_t i = 0; i < m; ++i) labels[i] = sigmoid(t[i]) >= 0.5 ? 1 : 0;
  const double lip = lipschitz_of_gram(features, 0.25 / static_cast<double>(m)) + 2.0 * rho;
  return ObjectiveProblem(LogisticPayload{std::move(features), std::move(labels), rho}, seed, lip,
                          std::nullopt, std::nullopt);
}

ObjectiveProblem make_logsumexp(DenseMatrix a_hat, DenseVector b, std::uint64_t seed) {
  require(a_hat.rows() == b.size(), ErrorKind::dimension_mismatch,
          "logsumexp: b length must equal the term count");
  const std::size_t d = a_hat.cols();
  // a_i = â_i − ∇f̂(0); the softmax weights at 0 depend only on b.
  const DenseVector g0 = lse_terms(a_hat, b, DenseVector(d)).second;
  const DenseVector center = matvec_transposed(a_hat, g0);
  DenseMatrix a = std::move(a_hat);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto row = a.row(i);
    for (std::size_t j = 0; j < d; ++j) row[j] -= center[j];
  }
  const double lip = lipschitz_of_gram(a, 1.0);
  const double f0 = lse_terms(a, b, DenseVector(d)).first;
  return ObjectiveProblem(LogSumExpPayload{std::move(a), std::move(b)}, seed, lip, DenseVector(d),
                          f0);
}

ObjectiveProblem gen_logsumexp(std::size_t m, std::size_t d, std::uint64_t seed) {
  require(m >= 1 && d >= 1, ErrorKind::invalid_argument, "logsumexp: m, d must be >= 1");
  Rng rng = make_rng(seed, "problem/logsumexp");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal;
  DenseMatrix a_hat(m, d);
  for (auto& v : a_hat.flat()) v = unit(rng);
  DenseVector b(m);
  for (auto& v : b) v = normal(rng);
  return make_logsumexp(std::move(a_hat), std::move(b), seed);
}

}  // namespace cwss
