#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "kcs/dataset.hpp"
#include "kcs/estimators.hpp"

namespace kcs {

// Partition of the source sample into disjoint, nonempty folds.
class CVPlan {
 public:
  // Shuffled partition: fold sizes differ by at most one. Identical
  // (n, folds, seed) always give the identical partition.
  static CVPlan shuffled(Eigen::Index n, int folds, std::uint64_t seed);
  // Explicit fold index per row, folds numbered 0..k-1, all nonempty.
  static CVPlan from_assignment(std::vector<int> fold_of_row);

  int folds() const { return int(members_.size()); }
  Eigen::Index size() const { return Eigen::Index(fold_of_.size()); }
  const std::vector<Eigen::Index>& held_out(int k) const { return members_[std::size_t(k)]; }
  std::vector<Eigen::Index> training(int k) const;
  const std::vector<int>& assignment() const { return fold_of_; }

 private:
  std::vector<int> fold_of_;
  std::vector<std::vector<Eigen::Index>> members_;
};

// Importance-weighted cross-validation risk
//   (1/b) sum_k (1/|T_k|) sum_{i in T_k} ratio(x_i) L(y_i, f_k(x_i)),
// where f_k is fit by cfg on the other folds and `ratio` is used untruncated.
double iwcv_risk(const Dataset& data, const FitConfig& cfg, const RatioModel& ratio, const CVPlan& plan,
                 std::vector<double>* per_fold = nullptr);

struct SelectionReport {
  std::vector<FitConfig> grid;
  std::vector<double> risks;  // +inf for candidates whose fit failed
  std::vector<std::string> failures;  // empty string when the candidate succeeded
  std::size_t chosen = 0;
  std::vector<double> chosen_fold_risks;
};

// Evaluates every candidate on the same folds and picks the smallest risk;
// ties go to the larger lambda, then to the earlier candidate.
SelectionReport select(const Dataset& data, const std::vector<FitConfig>& grid, const RatioModel& ratio,
                       const CVPlan& plan);

}  // namespace kcs
