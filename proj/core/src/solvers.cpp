#include "kcs/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace kcs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_square(const Matrix& K, Eigen::Index n, const char* who) {
  if (K.rows() != K.cols() || K.rows() != n)
    throw std::invalid_argument(std::string(who) + ": matrix must be " + std::to_string(n) + "x" +
                                std::to_string(n));
}

// Cholesky of S + shift I with the jitter ladder 1e-12 .. 1e-6 times trace(K)/n.
Eigen::LLT<Matrix> factor_with_jitter(Matrix S, double trace_scale, const char* who) {
  Eigen::LLT<Matrix> llt(S);
  if (llt.info() == Eigen::Success) return llt;
  const double base = trace_scale > 0.0 ? trace_scale : 1.0;
  for (double j = 1e-12; j <= 1e-6 * 1.0000001; j *= 10.0) {
    S.diagonal().array() += j * base;
    llt.compute(S);
    if (llt.info() == Eigen::Success) return llt;
  }
  const Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  std::ostringstream os;
  os << who << ": system is numerically singular after jitter escalation (eigenvalue range ["
     << lo << ", " << hi << "], condition estimate " << (lo > 0 ? hi / lo : kInf) << ")";
  throw Error(os.str());
}

// Solves (diag(d) K + shift I) x = rhs with d >= 0 and shift > 0 through the
// symmetric matrix S = D^{1/2} K D^{1/2} + shift I:
//   x = (rhs - D^{1/2} S^{-1} D^{1/2} K rhs) / shift.
Vector solve_shifted(const Matrix& K, const Vector& d, double shift, const Vector& rhs) {
  const Vector sd = d.cwiseMax(0.0).cwiseSqrt();
  Matrix S = sd.asDiagonal() * K * sd.asDiagonal();
  S.diagonal().array() += shift;
  const auto llt = factor_with_jitter(std::move(S), K.trace() / double(K.rows()), "newton step");
  const Vector Kr = K * rhs;
  const Vector inner = llt.solve(sd.cwiseProduct(Kr));
  return (rhs - sd.cwiseProduct(inner)) / shift;
}

double sigmoid(double f) {
  if (f >= 0.0) return 1.0 / (1.0 + std::exp(-f));
  const double e = std::exp(f);
  return e / (1.0 + e);
}

double softplus(double x) {  // log(1 + exp(x))
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Damped Newton in the representer coefficients for
//   J(alpha) = sum_i loss_i(f_i) + (shift / 2) alpha' K alpha,  f = K alpha.
// `model(f, value, neg_grad, curvature)` fills per-point loss sum, -dloss/df and a
// nonnegative curvature proxy used in the Newton system.
template <class Model>
NewtonResult damped_newton(const Matrix& K, double shift, double tol, long max_iter,
                           Model&& model, const char* who) {
  const Eigen::Index n = K.rows();
  NewtonResult out;
  out.alpha = Vector::Zero(n);
  Vector f = Vector::Zero(n);
  Vector neg_grad(n), curv(n);

  auto objective = [&](const Vector& alpha, const Vector& fv) {
    double value = 0.0;
    Vector g(n), c(n);
    model(fv, value, g, c);
    return value + 0.5 * shift * alpha.dot(fv);
  };

  for (long it = 0; it < max_iter; ++it) {
    double value = 0.0;
    model(f, value, neg_grad, curv);
    const double J0 = value + 0.5 * shift * out.alpha.dot(f);
    const Vector residual = neg_grad - shift * out.alpha;
    out.grad_norm = (K * residual).lpNorm<Eigen::Infinity>();
    out.objective = J0;
    out.iterations = it;
    if (out.grad_norm <= tol) return out;

    const Vector rhs = curv.cwiseProduct(f) + neg_grad;
    const Vector delta = solve_shifted(K, curv, shift, rhs) - out.alpha;
    const Vector Kdelta = K * delta;

    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving, t *= 0.5) {
      const Vector a_try = out.alpha + t * delta;
      const Vector f_try = f + t * Kdelta;
      const double J = objective(a_try, f_try);
      if (J <= J0 + 1e-14 * (1.0 + std::abs(J0))) {
        out.alpha = a_try;
        f = f_try;
        out.objective = J;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No decrease along the Newton direction: either converged to roundoff or diverging.
      if (out.grad_norm <= std::sqrt(tol) * (1.0 + std::abs(J0))) return out;
      std::ostringstream os;
      os << who << ": objective increased after 30 step halvings (gradient norm "
         << out.grad_norm << ")";
      throw SolverError(os.str(), out.alpha, out.grad_norm);
    }
    if ((t * delta).lpNorm<Eigen::Infinity>() <= tol) {
      out.iterations = it + 1;
      double v = 0.0;
      model(f, v, neg_grad, curv);
      out.grad_norm = (K * (neg_grad - shift * out.alpha)).lpNorm<Eigen::Infinity>();
      return out;
    }
  }
  std::ostringstream os;
  os << who << ": no convergence in " << max_iter << " Newton iterations (gradient norm "
     << out.grad_norm << ")";
  throw SolverError(os.str(), out.alpha, out.grad_norm);
}

}  // namespace

Vector solve_weighted_ridge(const Matrix& K, const Vector& w, const Vector& y, double n_lambda) {
  const Eigen::Index n = K.rows();
  require_square(K, n, "solve_weighted_ridge");
  if (w.size() != n || y.size() != n)
    throw std::invalid_argument("solve_weighted_ridge: size mismatch");
  if (!(n_lambda > 0.0)) throw std::invalid_argument("solve_weighted_ridge: n_lambda must be > 0");
  if ((w.array() < 0.0).any())
    throw std::invalid_argument("solve_weighted_ridge: weights must be nonnegative");

  const Vector sw = w.cwiseSqrt();
  Matrix S = sw.asDiagonal() * K * sw.asDiagonal();
  S.diagonal().array() += n_lambda;
  const auto llt = factor_with_jitter(std::move(S), K.trace() / double(n), "solve_weighted_ridge");

  const Vector Wy = w.cwiseProduct(y);
  auto apply = [&](const Vector& rhs_sqrtw) { return sw.cwiseProduct(llt.solve(rhs_sqrtw)); };
  Vector alpha = apply(sw.cwiseProduct(y));

  // Iterative refinement against the unsymmetrized system; corrections use
  // (W K + nl I)^{-1} b = (b - W^{1/2} S^{-1} W^{1/2} K b) / nl.
  const double target = 1e-8 * std::max(Wy.norm(), std::numeric_limits<double>::min());
  for (int pass = 0; pass < 3; ++pass) {
    const Vector res = w.cwiseProduct(K * alpha) + n_lambda * alpha - Wy;
    if (res.norm() <= target || Wy.norm() == 0.0) return alpha;
    const Vector inner = llt.solve(sw.cwiseProduct(K * res));
    alpha -= (res - sw.cwiseProduct(inner)) / n_lambda;
  }
  const Vector res = w.cwiseProduct(K * alpha) + n_lambda * alpha - Wy;
  if (res.norm() > target) {
    std::ostringstream os;
    os << "solve_weighted_ridge: residual " << res.norm() << " exceeds " << target;
    throw Error(os.str());
  }
  return alpha;
}

void BoxQP::validate() const {
  const Eigen::Index n = c.size();
  if (n == 0) throw std::invalid_argument("BoxQP: empty problem");
  if (Q.rows() != n || Q.cols() != n || lower.size() != n || upper.size() != n ||
      eq_coeffs.size() != n)
    throw std::invalid_argument("BoxQP: inconsistent dimensions");
  double lo_sum = 0.0, hi_sum = 0.0, scale = std::abs(eq_target);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      throw std::invalid_argument("BoxQP: bounds must be finite");
    if (lower[i] > upper[i]) throw std::invalid_argument("BoxQP: lower > upper at " + std::to_string(i));
    const double a = eq_coeffs[i];
    if (a == 0.0) throw std::invalid_argument("BoxQP: equality coefficients must be nonzero");
    lo_sum += a > 0 ? a * lower[i] : a * upper[i];
    hi_sum += a > 0 ? a * upper[i] : a * lower[i];
    scale += std::abs(a) * (std::abs(lower[i]) + std::abs(upper[i]));
  }
  const double slack = 1e-12 * (1.0 + scale);
  if (eq_target < lo_sum - slack || eq_target > hi_sum + slack) {
    std::ostringstream os;
    os << "BoxQP: infeasible, equality target " << eq_target << " outside [" << lo_sum << ", "
       << hi_sum << "]";
    throw Error(os.str());
  }
}

double BoxQP::objective(const Vector& alpha) const {
  return 0.5 * alpha.dot(Q * alpha) - c.dot(alpha);
}

QPSolution solve_box_qp(const BoxQP& problem, double tol, long max_iter) {
  problem.validate();
  const Eigen::Index n = problem.c.size();
  const Vector& a = problem.eq_coeffs;

  // Substitute beta_i = a_i alpha_i so the constraint becomes sum(beta) = target.
  Vector L(n), U(n), d(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    L[i] = a[i] > 0 ? a[i] * problem.lower[i] : a[i] * problem.upper[i];
    U[i] = a[i] > 0 ? a[i] * problem.upper[i] : a[i] * problem.lower[i];
    d[i] = problem.c[i] / a[i];
  }
  const Vector inv_a = a.cwiseInverse();
  const Matrix P = inv_a.asDiagonal() * problem.Q * inv_a.asDiagonal();
  const double target = problem.eq_target;

  // Feasible start: beta = clip(s, L, U) with s found by bisection on the sum.
  Vector beta(n);
  {
    double lo = L.minCoeff(), hi = U.maxCoeff();
    auto sum_at = [&](double s) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) acc += std::clamp(s, L[i], U[i]);
      return acc;
    };
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      (sum_at(mid) < target ? lo : hi) = mid;
    }
    for (Eigen::Index i = 0; i < n; ++i) beta[i] = std::clamp(hi, L[i], U[i]);
    double excess = beta.sum() - target;
    for (Eigen::Index i = 0; i < n && excess != 0.0; ++i) {
      const double room = excess > 0 ? beta[i] - L[i] : U[i] - beta[i];
      const double move = std::min(room, std::abs(excess));
      beta[i] += excess > 0 ? -move : move;
      excess += excess > 0 ? -move : move;
    }
  }

  Vector g = P * beta - d;
  QPSolution sol;
  long it = 0;
  double gap = kInf;
  for (;; ++it) {
    // Second-order working set selection (Fan, Chen and Lin).
    Eigen::Index i = -1, j = -1;
    double g_min = kInf;
    for (Eigen::Index t = 0; t < n; ++t)
      if (beta[t] < U[t] && g[t] < g_min) {
        g_min = g[t];
        i = t;
      }
    double g_max = -kInf, best = -kInf;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!(beta[t] > L[t])) continue;
      g_max = std::max(g_max, g[t]);
      const double diff = g[t] - g_min;
      if (i >= 0 && diff > 0.0) {
        double curv = P(i, i) + P(t, t) - 2.0 * P(i, t);
        if (curv <= 0.0) curv = 1e-12;
        const double gain = diff * diff / curv;
        if (gain > best) {
          best = gain;
          j = t;
        }
      }
    }
    gap = (i < 0 || g_max == -kInf) ? 0.0 : std::max(0.0, g_max - g_min);
    if (gap <= tol || j < 0) {
      // Confirm against a freshly computed gradient before stopping.
      const Vector fresh = P * beta - d;
      const double drift = (fresh - g).lpNorm<Eigen::Infinity>();
      g = fresh;
      if (drift <= 0.1 * tol) break;
      continue;
    }
    if (it >= max_iter) {
      Vector alpha = beta.cwiseProduct(inv_a);
      std::ostringstream os;
      os << "solve_box_qp: " << max_iter << " pair updates without reaching KKT tolerance " << tol
         << " (residual " << gap << ")";
      throw SolverError(os.str(), alpha, gap);
    }

    double curv = P(i, i) + P(j, j) - 2.0 * P(i, j);
    if (curv <= 0.0) curv = 1e-12;
    double step = (g[j] - g[i]) / curv;
    const double room_i = U[i] - beta[i];
    const double room_j = beta[j] - L[j];
    if (step >= room_i || step >= room_j) {
      if (room_i <= room_j) {
        step = room_i;
        beta[i] = U[i];
        beta[j] -= step;
        if (room_i == room_j) beta[j] = L[j];
      } else {
        step = room_j;
        beta[j] = L[j];
        beta[i] += step;
      }
    } else {
      beta[i] += step;
      beta[j] -= step;
    }
    g.noalias() += step * (P.col(i) - P.col(j));
  }

  // Equality multiplier: average over free coordinates, else the midpoint of
  // the interval admitted by the bound multipliers.
  double sum_free = 0.0;
  long n_free = 0;
  double nu_lo = -kInf, nu_hi = kInf;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (L[t] == U[t]) continue;
    if (beta[t] > L[t] && beta[t] < U[t]) {
      sum_free += -g[t];
      ++n_free;
    } else if (beta[t] <= L[t]) {
      nu_lo = std::max(nu_lo, -g[t]);
    } else {
      nu_hi = std::min(nu_hi, -g[t]);
    }
  }
  double nu = 0.0;
  if (n_free > 0)
    nu = sum_free / double(n_free);
  else if (std::isfinite(nu_lo) && std::isfinite(nu_hi))
    nu = 0.5 * (nu_lo + nu_hi);
  else if (std::isfinite(nu_lo))
    nu = nu_lo;
  else if (std::isfinite(nu_hi))
    nu = nu_hi;

  sol.alpha = beta.cwiseProduct(inv_a);
  for (Eigen::Index t = 0; t < n; ++t)
    sol.alpha[t] = std::clamp(sol.alpha[t], problem.lower[t], problem.upper[t]);
  sol.eq_dual = nu;
  sol.iterations = it;
  sol.kkt_residual = gap + std::abs(a.dot(sol.alpha) - target);
  sol.objective = problem.objective(sol.alpha);
  return sol;
}

NewtonResult irls_klr(const Matrix& K, const Vector& w_truncated, const Vector& w_raw,
                      const Vector& y01, double lambda_eff, double tol, long max_iter) {
  const Eigen::Index n = K.rows();
  require_square(K, n, "irls_klr");
  if (w_truncated.size() != n || w_raw.size() != n || y01.size() != n)
    throw std::invalid_argument("irls_klr: size mismatch");
  if (!(lambda_eff > 0.0)) throw std::invalid_argument("irls_klr: lambda_eff must be > 0");
  for (Eigen::Index i = 0; i < n; ++i)
    if (y01[i] != 0.0 && y01[i] != 1.0)
      throw std::invalid_argument("irls_klr: labels must be in {0, 1}");

  auto model = [&](const Vector& f, double& value, Vector& neg_grad, Vector& curv) {
    value = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double p = sigmoid(f[i]);
      const double ypm = 2.0 * y01[i] - 1.0;
      value += w_raw[i] * softplus(-ypm * f[i]);
      neg_grad[i] = w_raw[i] * (y01[i] - p);
      curv[i] = w_truncated[i] * p * (1.0 - p);
    }
  };
  return damped_newton(K, lambda_eff, tol, max_iter, model, "irls_klr");
}

NewtonResult huber_newton(const Matrix& K, const Vector& w, const Vector& y, double delta,
                          double lambda_eff, double tol, long max_iter) {
  const Eigen::Index n = K.rows();
  require_square(K, n, "huber_newton");
  if (w.size() != n || y.size() != n) throw std::invalid_argument("huber_newton: size mismatch");
  if (!(delta > 0.0) || !(lambda_eff > 0.0))
    throw std::invalid_argument("huber_newton: delta and lambda_eff must be > 0");

  auto model = [&](const Vector& f, double& value, Vector& neg_grad, Vector& curv) {
    value = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = y[i] - f[i];
      const double ar = std::abs(r);
      if (ar <= delta) {
        value += w[i] * 0.5 * r * r;
        neg_grad[i] = w[i] * r;
        curv[i] = w[i];
      } else {
        value += w[i] * (delta * ar - 0.5 * delta * delta);
        neg_grad[i] = w[i] * (r > 0 ? delta : -delta);
        curv[i] = 0.0;
      }
    }
  };
  return damped_newton(K, lambda_eff, tol, max_iter, model, "huber_newton");
}

double regularized_risk(const Matrix& K, const Vector& w, const Vector& y, const LossSpec& loss,
                        double lambda, const Vector& alpha, double bias) {
  const Eigen::Index n = K.rows();
  const Vector Ka = K * alpha;
  double risk = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) risk += w[i] * loss_value(loss, y[i], Ka[i] + bias);
  return risk / double(n) + lambda * alpha.dot(Ka);
}

Vector primal_subgradient_oracle(const Matrix& K, const Vector& w, const Vector& y,
                                 const LossSpec& loss, double lambda, long iters, double step0) {
  const Eigen::Index n = K.rows();
  require_square(K, n, "primal_subgradient_oracle");
  if (iters < 1) throw std::invalid_argument("primal_subgradient_oracle: iters must be >= 1");
  if (step0 <= 0.0) {
    const Eigen::SelfAdjointEigenSolver<Matrix> es(K, Eigen::EigenvaluesOnly);
    const double lmax = std::max(es.eigenvalues().maxCoeff(), 0.0);
    step0 = 1.0 / (2.0 / double(n) * w.maxCoeff() * lmax + 2.0 * lambda);
  }
  Vector alpha = Vector::Zero(n);
  Vector f = Vector::Zero(n);
  Vector g(n);
  auto objective = [&](const Vector& a, const Vector& fv) {
    double risk = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) risk += w[i] * loss_value(loss, y[i], fv[i]);
    return risk / double(n) + lambda * a.dot(fv);
  };
  Vector best = alpha;
  double best_J = objective(alpha, f);
  for (long t = 1; t <= iters; ++t) {
    for (Eigen::Index i = 0; i < n; ++i)
      g[i] = w[i] / double(n) * loss_subgradient(loss, y[i], f[i]) + 2.0 * lambda * alpha[i];
    alpha -= (step0 / std::sqrt(double(t))) * g;
    f.noalias() = K * alpha;
    const double J = objective(alpha, f);
    if (J < best_J) {
      best_J = J;
      best = alpha;
    }
  }
  return best;
}

}  // namespace kcs
