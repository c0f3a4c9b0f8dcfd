#pragma once

#include "kcs/losses.hpp"
#include "kcs/types.hpp"

namespace kcs {

struct SolverOptions {
  double tol = 1e-6;
  long max_iter = 10000000;  // box QP pair updates

  friend bool operator==(const SolverOptions&, const SolverOptions&) = default;
};

// Raised when an iterative solver cannot reach its tolerance. Carries the
// best iterate found so callers can inspect or reuse it.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, Vector best, double residual)
      : Error(what), best_(std::move(best)), residual_(residual) {}
  const Vector& best() const { return best_; }
  double residual() const { return residual_; }

 private:
  Vector best_;
  double residual_;
};

// Solves (W K + n_lambda I) alpha = W y with W = diag(w), w >= 0.
//
// The system is symmetrized as W^{1/2} (W^{1/2} K W^{1/2} + n_lambda I)^{-1} W^{1/2} y
// and factored by Cholesky. Jitter of 1e-12 trace(K)/n is added to the
// diagonal on factorization failure and escalated by 10x up to 1e-6 trace(K)/n.
Vector solve_weighted_ridge(const Matrix& K, const Vector& w, const Vector& y, double n_lambda);

// minimize 0.5 a'Qa - c'a  subject to  lower <= a <= upper,  eq_coeffs' a = eq_target.
struct BoxQP {
  Matrix Q;
  Vector c;
  Vector lower;
  Vector upper;
  Vector eq_coeffs;
  double eq_target = 0.0;

  // Checks shapes, lower <= upper, nonzero eq_coeffs and that the equality
  // hyperplane meets the box. Throws std::invalid_argument or kcs::Error.
  void validate() const;
  double objective(const Vector& alpha) const;
};

struct QPSolution {
  Vector alpha;
  double eq_dual = 0.0;       // multiplier of the equality constraint (the bias)
  double kkt_residual = 0.0;  // max pair violation plus equality residual
  long iterations = 0;
  double objective = 0.0;
};

// Pairwise (SMO-style) coordinate descent with second-order working-set
// selection. Every pair update keeps the equality constraint satisfied.
// Throws SolverError if max_iter pair updates do not bring the KKT residual
// below tol.
QPSolution solve_box_qp(const BoxQP& problem, double tol = 1e-6, long max_iter = 10000000);

// Result of the damped Newton solvers below.
struct NewtonResult {
  Vector alpha;
  long iterations = 0;
  double objective = 0.0;  // value of the solver's internal (scaled) objective
  double grad_norm = 0.0;
};

// Weighted kernel logistic regression by damped Newton-Raphson:
//
//   alpha <- (D K + lambda_eff I)^{-1} (D K alpha + w_raw .* (y01 - p)),
//   D = diag(w_truncated .* p .* (1 - p)),  p = sigmoid(K alpha).
//
// The iterate is a Newton step for
//   sum_i w_raw_i log(1 + exp(-y_i (K alpha)_i)) + (lambda_eff / 2) alpha' K alpha
// with y in {-1, +1}; steps are halved until that objective does not increase.
// The estimator passes lambda_eff = 2 n lambda log(2) and identical weight
// vectors, which makes the fixed point the minimizer of the weighted
// regularized risk with the log(2)-normalized logistic loss.
NewtonResult irls_klr(const Matrix& K, const Vector& w_truncated, const Vector& w_raw,
                      const Vector& y01, double lambda_eff, double tol = 1e-8,
                      long max_iter = 200);

// Weighted kernel Huber regression by semismooth damped Newton on
//   sum_i w_i h_delta(y_i - (K alpha)_i) + (lambda_eff / 2) alpha' K alpha.
NewtonResult huber_newton(const Matrix& K, const Vector& w, const Vector& y, double delta,
                          double lambda_eff, double tol = 1e-8, long max_iter = 200);

// (1/n) sum_i w_i L(y_i, (K alpha)_i + bias) + lambda alpha' K alpha.
double regularized_risk(const Matrix& K, const Vector& w, const Vector& y, const LossSpec& loss,
                        double lambda, const Vector& alpha, double bias = 0.0);

// Slow reference minimizer of regularized_risk (bias-free) for tests.
//
// Runs `iters` subgradient steps alpha <- alpha - s_t g with s_t = step0 / sqrt(t),
// where g = (1/n) w .* L'(y, K alpha) + 2 lambda alpha is the subgradient in
// the RKHS geometry (the Euclidean subgradient premultiplied by K^{-1}).
// Returns the iterate with the smallest objective seen. step0 <= 0 selects
// 1 / ((2/n) max(w) lambda_max(K) + 2 lambda).
Vector primal_subgradient_oracle(const Matrix& K, const Vector& w, const Vector& y,
                                 const LossSpec& loss, double lambda, long iters,
                                 double step0 = 0.0);

}  // namespace kcs
