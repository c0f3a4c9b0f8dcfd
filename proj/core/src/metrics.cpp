#include "kcs/metrics.hpp"

#include <cmath>

namespace kcs {

namespace {

void require_sample(Eigen::Index m, const char* what) {
  if (m < 1) throw std::invalid_argument(std::string(what) + ": empty target sample");
}

void require_labels(const Vector& y, const char* what) {
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 1.0 && y[i] != -1.0)
      throw std::invalid_argument(std::string(what) + ": label at index " + std::to_string(i) + " is not -1 or +1");
}

}  // namespace

double mse_from_predictions(const Vector& pred, const Vector& truth) {
  require_sample(pred.size(), "mse");
  if (truth.size() != pred.size()) throw std::invalid_argument("mse: length mismatch");
  return (pred - truth).squaredNorm() / double(pred.size());
}

double excess_risk_from_predictions(const Vector& pred, const Vector& truth, const Vector& y, const LossSpec& loss) {
  require_sample(pred.size(), "excess_risk");
  if (truth.size() != pred.size() || y.size() != pred.size()) throw std::invalid_argument("excess_risk: length mismatch");
  double s = 0.0;
  for (Eigen::Index j = 0; j < pred.size(); ++j) s += loss_value(loss, y[j], pred[j]) - loss_value(loss, y[j], truth[j]);
  return s / double(pred.size());
}

double misclassification_from_predictions(const Vector& pred, const Vector& y) {
  require_sample(pred.size(), "misclassification");
  if (y.size() != pred.size()) throw std::invalid_argument("misclassification: length mismatch");
  require_labels(y, "misclassification");
  long wrong = 0;
  for (Eigen::Index j = 0; j < pred.size(); ++j) {
    const double label = pred[j] >= 0.0 ? 1.0 : -1.0;
    if (label != y[j]) ++wrong;
  }
  return double(wrong) / double(pred.size());
}

double mse_target(const FittedModel& model, const Points& target_x, const TruthFunction& truth_f) {
  require_sample(target_x.rows(), "mse");
  return mse_from_predictions(predict(model, target_x), evaluate(truth_f, target_x));
}

double excess_risk_empirical(const FittedModel& model, const Points& target_x, const Vector& target_y,
                             const LossSpec& loss, const TruthFunction& truth_f) {
  require_sample(target_x.rows(), "excess_risk");
  return excess_risk_from_predictions(predict(model, target_x), evaluate(truth_f, target_x), target_y, loss);
}

double misclassification(const FittedModel& model, const Points& target_x, const Vector& target_y) {
  require_sample(target_x.rows(), "misclassification");
  return misclassification_from_predictions(predict(model, target_x), target_y);
}

EvalReport evaluate_on_target(const FittedModel& model, const Dataset& data) {
  require_sample(data.m(), "evaluate");
  EvalReport r;
  r.n_eval = long(data.m());
  const Vector pred = predict(model, data.target_x);
  if (data.truth) {
    const Vector truth = evaluate(data.truth->f, data.target_x);
    r.mse = mse_from_predictions(pred, truth);
    if (data.target_y) r.excess_risk = excess_risk_from_predictions(pred, truth, *data.target_y, model.loss);
  }
  if (model.loss.is_margin() && data.target_y) r.misclassification = misclassification_from_predictions(pred, *data.target_y);
  return r;
}

std::pair<double, double> rate_slope(const std::vector<double>& ns, const std::vector<double>& errors) {
  if (ns.size() != errors.size()) throw std::invalid_argument("rate_slope: length mismatch");
  if (ns.size() < 3) throw std::invalid_argument("rate_slope: need at least three points");
  const auto k = double(ns.size());
  double sx = 0, sy = 0;
  std::vector<double> lx(ns.size()), ly(ns.size());
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (!(ns[i] > 0.0)) throw std::invalid_argument("rate_slope: sample sizes must be positive");
    if (!(errors[i] > 0.0) || !std::isfinite(errors[i]))
      throw std::invalid_argument("rate_slope: error values must be positive and finite");
    lx[i] = std::log(ns[i]);
    ly[i] = std::log(errors[i]);
    sx += lx[i];
    sy += ly[i];
  }
  const double mx = sx / k, my = sy / k;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("rate_slope: sample sizes must not all be equal");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

}  // namespace kcs
