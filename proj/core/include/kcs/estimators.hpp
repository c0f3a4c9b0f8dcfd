#pragma once

#include <optional>
#include <string_view>

#include "kcs/dataset.hpp"
#include "kcs/kernels.hpp"
#include "kcs/losses.hpp"
#include "kcs/ratio.hpp"
#include "kcs/solvers.hpp"

namespace kcs {

enum class Weighting { unweighted, irw, tirw };

std::string_view to_string(Weighting w);
Weighting parse_weighting(std::string_view name);

struct FitConfig {
  LossSpec loss;
  KernelSpec kernel;
  double lambda = 1e-4;
  Weighting weighting = Weighting::unweighted;
  std::optional<double> truncation_level;  // required for tirw; +inf reproduces irw
  SolverOptions solver;

  void validate() const;
};

struct FitDiagnostics {
  long iterations = 0;
  double kkt_residual = 0.0;  // dual solvers; gradient norm for Newton solvers
  double objective = 0.0;     // regularized weighted risk at the fitted model
};

// f(x) = sum_i alpha_i K(x_i, x) + bias.
struct FittedModel {
  Vector alpha;
  std::optional<double> bias;  // present for the check and hinge losses
  KernelSpec kernel;
  LossSpec loss;
  Points train_x;
  Vector weights_used;
  FitDiagnostics diagnostics;
};

// Per-point weights for cfg.weighting: 1, ratio_raw(x_i) or
// min(ratio_raw(x_i), truncation_level).
Vector fit_weights(const Points& source_x, const FitConfig& cfg, const RatioModel& ratio);

// Minimizes (1/n) sum_i w_i L(y_i, f(x_i)) + lambda |f|_K^2 over the RKHS.
//   squared   -> solve_weighted_ridge with n*lambda
//   check     -> box QP, C w_i (tau - 1) <= a_i <= C w_i tau, sum a = 0
//   hinge     -> box QP over eta, 0 <= eta_i <= C w_i, y'eta = 0, a = eta .* y
//   logistic  -> irls_klr
//   huber     -> huber_newton
// with C = 1 / (2 n lambda).
FittedModel fit(const Dataset& data, const FitConfig& cfg, const RatioModel& ratio = RatioModel::constant_one());

// Same as fit() with explicit per-point weights (used by cross-validation).
FittedModel fit_weighted(const Points& x, const Vector& y, const Vector& weights, const FitConfig& cfg);

Vector predict(const FittedModel& model, const Points& X);

// sign(predict), with 0 mapped to +1. Only for hinge and logistic models.
Vector classify(const FittedModel& model, const Points& X);

// Regularized weighted risk of the fitted model on its own training data.
double training_objective(const FittedModel& model, const Vector& y, double lambda);

}  // namespace kcs
