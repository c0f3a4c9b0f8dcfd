#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "kcs/ratio.hpp"
#include "kcs/types.hpp"

namespace kcs {

using TruthFunction = std::function<double(PointRef)>;

// Ground truth attached to synthetic data: the optimal predictor f* under the
// scenario's loss and the analytic importance ratio.
struct Truth {
  TruthFunction f;
  RatioModel ratio;
};

struct Dataset {
  Points source_x;
  Vector source_y;
  Points target_x;
  std::optional<Vector> target_y;
  std::optional<Truth> truth;

  Eigen::Index n() const { return source_x.rows(); }
  Eigen::Index m() const { return target_x.rows(); }
  Eigen::Index dim() const { return source_x.cols(); }

  // Throws std::invalid_argument if shapes disagree.
  void validate() const;

  // Copy holding only the listed source rows (target part and truth are kept).
  Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

Vector evaluate(const TruthFunction& f, const Points& X);

}  // namespace kcs
