#include "kcs/model_selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "kcs/random.hpp"

namespace kcs {

CVPlan CVPlan::shuffled(Eigen::Index n, int folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("CVPlan: need at least two folds");
  if (n < folds) throw std::invalid_argument("CVPlan: fewer points than folds");
  Rng rng(derive_seed(seed, 0x6376ULL));
  const auto perm = permutation(std::size_t(n), rng);
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < perm.size(); ++i) fold_of[perm[i]] = int(i % std::size_t(folds));
  return from_assignment(std::move(fold_of));
}

CVPlan CVPlan::from_assignment(std::vector<int> fold_of_row) {
  if (fold_of_row.empty()) throw std::invalid_argument("CVPlan: empty assignment");
  const int k = *std::max_element(fold_of_row.begin(), fold_of_row.end()) + 1;
  if (*std::min_element(fold_of_row.begin(), fold_of_row.end()) < 0 || k < 2)
    throw std::invalid_argument("CVPlan: folds must be numbered 0..k-1 with k >= 2");
  CVPlan plan;
  plan.members_.resize(std::size_t(k));
  for (std::size_t i = 0; i < fold_of_row.size(); ++i)
    plan.members_[std::size_t(fold_of_row[i])].push_back(Eigen::Index(i));
  for (int f = 0; f < k; ++f)
    if (plan.members_[std::size_t(f)].empty())
      throw std::invalid_argument("CVPlan: fold " + std::to_string(f) + " is empty");
  plan.fold_of_ = std::move(fold_of_row);
  return plan;
}

std::vector<Eigen::Index> CVPlan::training(int k) const {
  std::vector<Eigen::Index> rows;
  rows.reserve(fold_of_.size());
  for (std::size_t i = 0; i < fold_of_.size(); ++i)
    if (fold_of_[i] != k) rows.push_back(Eigen::Index(i));
  return rows;
}

double iwcv_risk(const Dataset& data, const FitConfig& cfg, const RatioModel& ratio, const CVPlan& plan,
                 std::vector<double>* per_fold) {
  if (plan.size() != data.n()) throw std::invalid_argument("iwcv_risk: plan does not match the sample size");
  const Vector held_weights = ratio_raw(ratio, data.source_x);
  const Vector train_weights = fit_weights(data.source_x, cfg, ratio);

  std::vector<double> risks;
  risks.reserve(std::size_t(plan.folds()));
  for (int k = 0; k < plan.folds(); ++k) {
    const auto train = plan.training(k);
    const auto& held = plan.held_out(k);
    if (train.size() < 2)
      throw std::invalid_argument("iwcv_risk: fold " + std::to_string(k) + " leaves fewer than two training points");
    Points tx(Eigen::Index(train.size()), data.dim());
    Vector ty(Eigen::Index(train.size())), tw(Eigen::Index(train.size()));
    for (std::size_t r = 0; r < train.size(); ++r) {
      tx.row(Eigen::Index(r)) = data.source_x.row(train[r]);
      ty[Eigen::Index(r)] = data.source_y[train[r]];
      tw[Eigen::Index(r)] = train_weights[train[r]];
    }
    FittedModel model;
    try {
      model = fit_weighted(tx, ty, tw, cfg);
    } catch (const Error& e) {
      throw Error("iwcv_risk: fold " + std::to_string(k) + ": " + e.what());
    }
    Points hx(Eigen::Index(held.size()), data.dim());
    for (std::size_t r = 0; r < held.size(); ++r) hx.row(Eigen::Index(r)) = data.source_x.row(held[r]);
    const Vector pred = predict(model, hx);
    double acc = 0.0;
    for (std::size_t r = 0; r < held.size(); ++r)
      acc += held_weights[held[r]] * loss_value(cfg.loss, data.source_y[held[r]], pred[Eigen::Index(r)]);
    risks.push_back(acc / double(held.size()));
  }
  double total = 0.0;
  for (double r : risks) total += r;
  if (per_fold) *per_fold = risks;
  return total / double(risks.size());
}

SelectionReport select(const Dataset& data, const std::vector<FitConfig>& grid, const RatioModel& ratio,
                       const CVPlan& plan) {
  if (grid.empty()) throw std::invalid_argument("select: empty grid");
  SelectionReport report;
  report.grid = grid;
  report.risks.assign(grid.size(), std::numeric_limits<double>::infinity());
  report.failures.assign(grid.size(), std::string());
  std::vector<std::vector<double>> folds(grid.size());
  bool any = false;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    try {
      report.risks[c] = iwcv_risk(data, grid[c], ratio, plan, &folds[c]);
      any = true;
    } catch (const std::exception& e) {
      report.failures[c] = e.what();
    }
  }
  if (!any) {
    std::ostringstream os;
    os << "select: every candidate failed";
    for (std::size_t c = 0; c < grid.size(); ++c) os << "\n  [" << c << "] " << report.failures[c];
    throw Error(os.str());
  }
  std::size_t best = grid.size();
  for (std::size_t c = 0; c < grid.size(); ++c) {
    if (!std::isfinite(report.risks[c])) continue;
    if (best == grid.size() || report.risks[c] < report.risks[best] ||
        (report.risks[c] == report.risks[best] && grid[c].lambda > grid[best].lambda))
      best = c;
  }
  report.chosen = best;
  report.chosen_fold_risks = folds[best];
  return report;
}

}  // namespace kcs
