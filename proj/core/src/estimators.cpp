#include "kcs/estimators.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace kcs {

namespace {

constexpr double kNewtonTol = 1e-8;
constexpr long kNewtonMaxIter = 200;

void require_labels(const Vector& y, const char* who) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 1.0 && y[i] != -1.0) {
      std::ostringstream os;
      os << who << ": labels must be in {-1, +1} (row " << i << " has " << y[i] << ")";
      throw std::invalid_argument(os.str());
    }
}

}  // namespace

std::string_view to_string(Weighting w) {
  switch (w) {
    case Weighting::unweighted: return "unweighted";
    case Weighting::irw: return "irw";
    case Weighting::tirw: return "tirw";
  }
  return "unknown";
}

Weighting parse_weighting(std::string_view name) {
  if (name == "unweighted") return Weighting::unweighted;
  if (name == "irw") return Weighting::irw;
  if (name == "tirw") return Weighting::tirw;
  throw std::invalid_argument("unknown weighting '" + std::string(name) + "' (unweighted, irw, tirw accepted)");
}

void FitConfig::validate() const {
  loss.validate();
  kernel.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be positive and finite");
  if (weighting == Weighting::tirw && !truncation_level)
    throw std::invalid_argument("tirw weighting requires a truncation level");
  if (truncation_level && !(*truncation_level > 0.0))
    throw std::invalid_argument("truncation level must be positive");
  if (!(solver.tol > 0.0) || solver.max_iter < 1) throw std::invalid_argument("invalid solver options");
}

Vector fit_weights(const Points& source_x, const FitConfig& cfg, const RatioModel& ratio) {
  switch (cfg.weighting) {
    case Weighting::unweighted:
      return Vector::Ones(source_x.rows());
    case Weighting::irw:
      return ratio_raw(ratio, source_x);
    case Weighting::tirw:
      return ratio_raw(ratio, source_x).cwiseMin(*cfg.truncation_level);
  }
  return Vector::Ones(source_x.rows());
}

FittedModel fit(const Dataset& data, const FitConfig& cfg, const RatioModel& ratio) {
  data.validate();
  cfg.validate();
  if (data.n() < 2) throw std::invalid_argument("fit: need at least two source points");
  const Vector w = fit_weights(data.source_x, cfg, ratio);
  return fit_weighted(data.source_x, data.source_y, w, cfg);
}

FittedModel fit_weighted(const Points& x, const Vector& y, const Vector& weights, const FitConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = x.rows();
  if (n < 2) throw std::invalid_argument("fit: need at least two source points");
  if (y.size() != n || weights.size() != n) throw std::invalid_argument("fit: size mismatch");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(weights[i] >= 0.0)) {
      std::ostringstream os;
      os << "fit: weight at row " << i << " is " << weights[i] << "; importance weights must be nonnegative";
      throw Error(os.str());
    }
  }
  if (!(weights.maxCoeff() > 0.0))
    throw Error("fit: every weight is zero (truncation level too small?)");

  FittedModel model;
  model.kernel = cfg.kernel;
  model.loss = cfg.loss;
  model.train_x = x;
  model.weights_used = weights;

  const Matrix K = gram(cfg.kernel, x);
  const double nd = double(n);
  const double C = 1.0 / (2.0 * nd * cfg.lambda);

  try {
    switch (cfg.loss.kind) {
      case LossKind::squared: {
        model.alpha = solve_weighted_ridge(K, weights, y, nd * cfg.lambda);
        model.diagnostics.iterations = 1;
        break;
      }
      case LossKind::check: {
        const double tau = *cfg.loss.tau;
        BoxQP qp;
        qp.Q = K;
        qp.c = y;
        qp.lower = C * (tau - 1.0) * weights;
        qp.upper = C * tau * weights;
        qp.eq_coeffs = Vector::Ones(n);
        qp.eq_target = 0.0;
        const QPSolution sol = solve_box_qp(qp, cfg.solver.tol, cfg.solver.max_iter);
        model.alpha = sol.alpha;
        model.bias = sol.eq_dual;
        model.diagnostics.iterations = sol.iterations;
        model.diagnostics.kkt_residual = sol.kkt_residual;
        break;
      }
      case LossKind::hinge: {
        require_labels(y, "fit (hinge)");
        BoxQP qp;
        qp.Q = y.asDiagonal() * K * y.asDiagonal();
        qp.c = Vector::Ones(n);
        qp.lower = Vector::Zero(n);
        qp.upper = C * weights;
        qp.eq_coeffs = y;
        qp.eq_target = 0.0;
        const QPSolution sol = solve_box_qp(qp, cfg.solver.tol, cfg.solver.max_iter);
        model.alpha = sol.alpha.cwiseProduct(y);
        model.bias = sol.eq_dual;
        model.diagnostics.iterations = sol.iterations;
        model.diagnostics.kkt_residual = sol.kkt_residual;
        break;
      }
      case LossKind::logistic: {
        require_labels(y, "fit (logistic)");
        const Vector y01 = (y.array() + 1.0) * 0.5;
        const double lambda_eff = 2.0 * nd * cfg.lambda * std::numbers::ln2;
        const NewtonResult r = irls_klr(K, weights, weights, y01, lambda_eff, kNewtonTol, kNewtonMaxIter);
        model.alpha = r.alpha;
        model.diagnostics.iterations = r.iterations;
        model.diagnostics.kkt_residual = r.grad_norm;
        break;
      }
      case LossKind::huber: {
        const NewtonResult r =
            huber_newton(K, weights, y, *cfg.loss.huber_delta, 2.0 * nd * cfg.lambda, kNewtonTol, kNewtonMaxIter);
        model.alpha = r.alpha;
        model.diagnostics.iterations = r.iterations;
        model.diagnostics.kkt_residual = r.grad_norm;
        break;
      }
    }
  } catch (const SolverError& e) {
    throw SolverError(std::string("fit (") + std::string(to_string(cfg.loss.kind)) + " loss): " + e.what(),
                      e.best(), e.residual());
  } catch (const Error& e) {
    throw Error(std::string("fit (") + std::string(to_string(cfg.loss.kind)) + " loss): " + e.what());
  }

  model.diagnostics.objective =
      regularized_risk(K, weights, y, cfg.loss, cfg.lambda, model.alpha, model.bias.value_or(0.0));
  return model;
}

Vector predict(const FittedModel& model, const Points& X) {
  if (X.cols() != model.train_x.cols())
    throw std::invalid_argument("predict: dimension mismatch (" + std::to_string(X.cols()) + " vs " +
                                std::to_string(model.train_x.cols()) + ")");
  if (X.rows() == 0) return Vector(0);
  Vector out = gram(model.kernel, X, model.train_x) * model.alpha;
  if (model.bias) out.array() += *model.bias;
  return out;
}

Vector classify(const FittedModel& model, const Points& X) {
  if (!model.loss.is_margin())
    throw std::invalid_argument("classify: model was fit with the " + std::string(to_string(model.loss.kind)) +
                                " loss; classification needs hinge or logistic");
  Vector f = predict(model, X);
  for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = f[i] >= 0.0 ? 1.0 : -1.0;
  return f;
}

double training_objective(const FittedModel& model, const Vector& y, double lambda) {
  const Matrix K = gram(model.kernel, model.train_x);
  return regularized_risk(K, model.weights_used, y, model.loss, lambda, model.alpha, model.bias.value_or(0.0));
}

}  // namespace kcs
