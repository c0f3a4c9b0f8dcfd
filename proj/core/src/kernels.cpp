#include "kcs/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace kcs {

namespace {

double squared_distance(PointRef x, PointRef z) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double d = x[i] - z[i];
    s += d * d;
  }
  return s;
}

double dot(PointRef x, PointRef z) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += x[i] * z[i];
  return s;
}

double eval_unchecked(const KernelSpec& k, PointRef x, PointRef z) {
  switch (k.family) {
    case KernelFamily::gaussian:
      return std::exp(-squared_distance(x, z) / (2.0 * k.bandwidth * k.bandwidth));
    case KernelFamily::polynomial:
      return std::pow(dot(x, z) + k.offset, k.degree);
    case KernelFamily::linear:
      return dot(x, z);
  }
  return 0.0;
}

}  // namespace

std::string_view to_string(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::polynomial: return "polynomial";
    case KernelFamily::linear: return "linear";
  }
  return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "polynomial") return KernelFamily::polynomial;
  if (name == "linear") return KernelFamily::linear;
  throw std::invalid_argument("unknown kernel family '" + std::string(name) +
                              "' (gaussian, polynomial, linear accepted)");
}

KernelSpec KernelSpec::gaussian(double bandwidth) {
  KernelSpec k;
  k.family = KernelFamily::gaussian;
  k.bandwidth = bandwidth;
  k.validate();
  return k;
}

KernelSpec KernelSpec::polynomial(int degree, double offset) {
  KernelSpec k;
  k.family = KernelFamily::polynomial;
  k.degree = degree;
  k.offset = offset;
  k.validate();
  return k;
}

KernelSpec KernelSpec::linear() {
  KernelSpec k;
  k.family = KernelFamily::linear;
  return k;
}

void KernelSpec::validate() const {
  if (family == KernelFamily::gaussian && !(bandwidth > 0.0 && std::isfinite(bandwidth)))
    throw std::invalid_argument("gaussian kernel bandwidth must be positive and finite");
  if (family == KernelFamily::polynomial && degree < 1)
    throw std::invalid_argument("polynomial kernel degree must be >= 1");
}

double eval(const KernelSpec& k, PointRef x, PointRef z) {
  if (x.size() != z.size())
    throw std::invalid_argument("kernel eval: dimension mismatch (" + std::to_string(x.size()) +
                                " vs " + std::to_string(z.size()) + ")");
  return eval_unchecked(k, x, z);
}

Matrix gram(const KernelSpec& k, const Points& X, const Points& Z) {
  if (X.rows() == 0 || Z.rows() == 0) throw std::invalid_argument("gram: empty point set");
  if (X.cols() != Z.cols()) throw std::invalid_argument("gram: dimension mismatch");
  k.validate();
  Matrix G(X.rows(), Z.rows());
  // Column-major fill; rows of X and Z are copied once so the inner loop is contiguous.
  const Matrix Xt = X.transpose();
  const Matrix Zt = Z.transpose();
  for (Eigen::Index j = 0; j < Zt.cols(); ++j)
    for (Eigen::Index i = 0; i < Xt.cols(); ++i) G(i, j) = eval_unchecked(k, Xt.col(i), Zt.col(j));
  return G;
}

Matrix gram(const KernelSpec& k, const Points& X) {
  if (X.rows() == 0) throw std::invalid_argument("gram: empty point set");
  k.validate();
  const Matrix Xt = X.transpose();
  const Eigen::Index n = Xt.cols();
  Matrix G(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double v = eval_unchecked(k, Xt.col(i), Xt.col(j));
      G(i, j) = v;
      G(j, i) = v;
    }
  }
  return G;
}

double median_heuristic_bandwidth(const Points& X) {
  // Quadratic in the sample size; the first 1000 rows are plenty for a median.
  const Eigen::Index n = std::min<Eigen::Index>(X.rows(), 1000);
  std::vector<double> dist;
  dist.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = std::sqrt((X.row(i) - X.row(j)).squaredNorm());
      if (d > 0.0) dist.push_back(d);
    }
  if (dist.empty()) return 1.0;
  const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
  std::nth_element(dist.begin(), mid, dist.end());
  return *mid;
}

}  // namespace kcs
