#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "kcs/dataset.hpp"
#include "kcs/estimators.hpp"

namespace kcs {

struct EvalReport {
  std::optional<double> mse;
  std::optional<double> excess_risk;
  std::optional<double> misclassification;
  long n_eval = 0;
};

// (1/m) sum_j (f(x_j) - f*(x_j))^2 over the target points.
double mse_target(const FittedModel& model, const Points& target_x, const TruthFunction& truth_f);

// (1/m) sum_j [L(y_j, f(x_j)) - L(y_j, f*(x_j))]. Not clipped at zero.
double excess_risk_empirical(const FittedModel& model, const Points& target_x, const Vector& target_y,
                             const LossSpec& loss, const TruthFunction& truth_f);

// Fraction of sign disagreements, predictions of exactly 0 counted as +1.
double misclassification(const FittedModel& model, const Points& target_x, const Vector& target_y);

// Same three quantities from precomputed predictions.
double mse_from_predictions(const Vector& pred, const Vector& truth);
double excess_risk_from_predictions(const Vector& pred, const Vector& truth, const Vector& y, const LossSpec& loss);
double misclassification_from_predictions(const Vector& pred, const Vector& y);

// Everything applicable to the model and data: mse and excess risk need a
// truth, misclassification needs a margin loss and target labels.
EvalReport evaluate_on_target(const FittedModel& model, const Dataset& data);

// Least-squares fit log(error) = intercept + slope log(n). Returns (slope, intercept).
std::pair<double, double> rate_slope(const std::vector<double>& ns, const std::vector<double>& errors);

}  // namespace kcs
