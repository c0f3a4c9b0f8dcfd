#include "kcs/dataset.hpp"

namespace kcs {

void Dataset::validate() const {
  if (source_x.rows() < 1) throw std::invalid_argument("dataset: empty source sample");
  if (source_y.size() != source_x.rows()) throw std::invalid_argument("dataset: source x/y length mismatch");
  if (target_x.rows() > 0 && target_x.cols() != source_x.cols())
    throw std::invalid_argument("dataset: source and target dimensions differ");
  if (target_y && target_y->size() != target_x.rows())
    throw std::invalid_argument("dataset: target x/y length mismatch");
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.source_x.resize(Eigen::Index(rows.size()), source_x.cols());
  out.source_y.resize(Eigen::Index(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.source_x.row(Eigen::Index(r)) = source_x.row(rows[r]);
    out.source_y[Eigen::Index(r)] = source_y[rows[r]];
  }
  out.target_x = target_x;
  out.target_y = target_y;
  out.truth = truth;
  return out;
}

Vector evaluate(const TruthFunction& f, const Points& X) {
  Vector out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = f(X.row(i).transpose());
  return out;
}

}  // namespace kcs
