#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>

#include "kcs/kernels.hpp"
#include "kcs/types.hpp"

namespace kcs {

enum class DensityFamily { normal, beta };

// Law of the first covariate. Normal takes (mean, variance); Beta takes the
// shape pair (a, b).
struct DensitySpec {
  DensityFamily family = DensityFamily::normal;
  double p1 = 0.0;
  double p2 = 1.0;

  static DensitySpec normal(double mean, double variance);
  static DensitySpec beta(double a, double b);

  void validate() const;
  double pdf(double x) const;
  // True when x is inside the open support.
  bool in_support(double x) const;

  friend bool operator==(const DensitySpec&, const DensitySpec&) = default;
};

std::string_view to_string(DensityFamily family);

// Ratio of the target to the source density of the first coordinate at x[0].
// Throws std::invalid_argument outside the source support.
double analytic_ratio(const DensitySpec& source, const DensitySpec& target, PointRef x);

enum class RatioKind { analytic, kliep, constant_one };

std::string_view to_string(RatioKind kind);

// Importance ratio representation, optionally truncated at `truncation`.
struct RatioModel {
  RatioKind kind = RatioKind::constant_one;
  DensitySpec source;
  DensitySpec target;
  Points basis;  // kliep: basis points, one per row
  Vector coeffs;  // kliep: nonnegative expansion coefficients
  KernelSpec kernel;
  std::optional<double> truncation;

  static RatioModel constant_one();
  static RatioModel analytic(const DensitySpec& source, const DensitySpec& target);
  static RatioModel kliep(Points basis, Vector coeffs, const KernelSpec& kernel);

  RatioModel truncated(double gamma) const;
};

// Untruncated ratio value.
double ratio_raw(const RatioModel& model, PointRef x);
// min(ratio_raw, truncation) when a truncation level is set.
double ratio_eval(const RatioModel& model, PointRef x);

Vector ratio_raw(const RatioModel& model, const Points& X);
Vector ratio_eval(const RatioModel& model, const Points& X);

struct KliepOptions {
  int basis = 100;                  // capped at the number of target points
  std::optional<double> bandwidth;  // default: median heuristic on target points
  std::uint64_t seed = 0;           // basis point shuffle
  double tol = 1e-8;                // stop once the per-iteration objective gain is below
  long max_iter = 10000;
};

struct KliepDiagnostics {
  long iterations = 0;
  double objective = 0.0;  // mean target log-likelihood
  double normalization_residual = 0.0;
  bool objective_monotone = true;
};

// Kullback-Leibler importance estimation. The ratio is modelled as
// sum_k coeffs_k K(basis_k, x) with coeffs >= 0, maximizing the target
// log-likelihood subject to (1/n) sum_i ratio(x_i^S) = 1 over the source sample.
RatioModel kliep_fit(const Points& source_x, const Points& target_x, const KliepOptions& opt = {},
                     KliepDiagnostics* diagnostics = nullptr);

// sqrt(n * beta_sq). Requires n >= 1 and beta_sq >= 1.
double truncation_level(long n, double beta_sq);

// Sample mean of the squared untruncated ratio over the rows of source_x.
double estimate_beta_sq(const RatioModel& model, const Points& source_x);

enum class ShiftClass { uniformly_bounded, moment_bounded_only, unbounded_second_moment };

std::string_view to_string(ShiftClass c);

struct ShiftDiagnostics {
  ShiftClass classification = ShiftClass::uniformly_bounded;
  std::optional<double> alpha_bound;  // sup of the ratio when finite
  std::optional<double> beta_sq;      // E_S[ratio^2] when finite
};

// Closed-form boundedness analysis for a normal/normal or beta/beta pair.
ShiftDiagnostics classify_shift(const DensitySpec& source, const DensitySpec& target);

}  // namespace kcs
