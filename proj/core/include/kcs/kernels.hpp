#pragma once

#include <string>
#include <string_view>

#include "kcs/types.hpp"

namespace kcs {

enum class KernelFamily { gaussian, polynomial, linear };

std::string_view to_string(KernelFamily family);
KernelFamily parse_kernel_family(std::string_view name);

// Gaussian:   exp(-|x - z|^2 / (2 bandwidth^2))
// Polynomial: (<x, z> + offset)^degree
// Linear:     <x, z>
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double bandwidth = 1.0;
  int degree = 2;
  double offset = 1.0;

  static KernelSpec gaussian(double bandwidth);
  static KernelSpec polynomial(int degree, double offset);
  static KernelSpec linear();

  // Throws std::invalid_argument if the parameters are out of range.
  void validate() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

double eval(const KernelSpec& k, PointRef x, PointRef z);

// entries(i, j) = eval(k, X.row(i), Z.row(j)). Never regularized or jittered.
Matrix gram(const KernelSpec& k, const Points& X, const Points& Z);
Matrix gram(const KernelSpec& k, const Points& X);

// Median of the pairwise Euclidean distances between rows of X. Falls back
// to 1.0 when every pair coincides.
double median_heuristic_bandwidth(const Points& X);

}  // namespace kcs
