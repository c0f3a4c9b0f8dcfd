#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kcs/dataset.hpp"
#include "kcs/losses.hpp"
#include "kcs/random.hpp"
#include "kcs/ratio.hpp"

namespace kcs {

enum class ScenarioId { kqr1d, krr1d_s1, krr3d_s2, kqr3d_s4, klr3d_s5 };
enum class ShiftCase { uniform, moment };

std::string_view to_string(ScenarioId id);
std::string_view to_string(ShiftCase c);
ScenarioId parse_scenario_id(std::string_view name);
ShiftCase parse_shift_case(std::string_view name);

// A synthetic covariate-shift problem. Only the first covariate is shifted;
// for the three-dimensional scenarios x1 and x2 are i.i.d. uniform(0, 1)
// under both source and target.
//
//   kqr1d     y = sin(pi x) + (1 + r (x - 0.5)^2) sigma (e - Phi^{-1}(tau)),  e ~ N(0, 1)
//   krr1d_s1  y = exp(-1/x^2) + sigma e
//   krr3d_s2  y = sin(2 pi x0) - exp(-x1^2 - x2^2) + sigma e
//   kqr3d_s4  y = sin(1.5 pi x0) - exp(-x1^2 - x2^2) + (1 + r x0) sigma (e - T4^{-1}(tau)),  e ~ t_4
//   klr3d_s5  P(y = 1 | x) = 1 / (1 + exp(-f(x))),  f = -x0^2 + 3 sin(3 pi x0) + exp(x1^2 - x2^2)
struct Scenario {
  ScenarioId id = ScenarioId::kqr1d;
  ShiftCase shift_case = ShiftCase::uniform;
  DensitySpec source_density;
  DensitySpec target_density;
  int dim = 1;
  double sigma = 0.3;
  double r = 1.0;
  double tau = 0.3;
  double t_df = 4.0;

  // Loss whose population minimizer is the scenario's truth function.
  LossSpec natural_loss() const;
  // Same scenario with the target covariate law replaced by the source law.
  Scenario without_shift() const;
  bool shifted() const { return !(source_density == target_density); }
};

// Published configuration for (id, case). kqr1d defaults to the
// heteroscedastic setting (r = 1, sigma = 0.3, tau = 0.3); use
// homoscedastic(...) for r = 0, sigma = 0.5.
Scenario make_scenario(ScenarioId id, ShiftCase c);
Scenario homoscedastic(Scenario s);

// Boundedness class the scenario was published under. May disagree with
// classify_shift on the same densities; both are reported.
ShiftClass published_class(const Scenario& s);

// Optimal predictor for the scenario: the conditional tau-quantile for the
// quantile scenarios, the conditional mean for the regression ones and the
// log-odds for the classification one.
double scenario_truth(const Scenario& s, PointRef x);

// Draws one response for covariate x from the scenario's conditional law.
double sample_response(const Scenario& s, PointRef x, Rng& noise_rng);

// Deterministic in (s, n, m, seed). Source covariates, target covariates and
// the two noise streams use independent generators derived from `seed`, so a
// larger n extends the sample rather than redrawing it.
Dataset generate(const Scenario& s, Eigen::Index n, Eigen::Index m, std::uint64_t seed);

// Headered table of numeric features with labels mapped to {-1, +1}.
struct LabeledTable {
  std::vector<std::string> feature_names;
  Points x;
  Vector y;
};

// Reads a headered CSV. Every column except `label_column` must be numeric.
// Rows whose label equals `positive_label` map to +1, the single other label
// value maps to -1. Features are standardized with the 1/(N-1) variance when
// `standardize` is set.
LabeledTable load_csv(const std::string& path, const std::string& label_column,
                      const std::string& positive_label, bool standardize = true);

// Per-row Bernoulli split with P(target) = min(1, (x0 - c)^2 / ell), c = min x0.
std::pair<LabeledTable, LabeledTable> covariate_split(const LabeledTable& table, double ell, std::uint64_t seed);

// Source/target tables as a Dataset (target labels kept, no truth).
Dataset to_dataset(const LabeledTable& source, const LabeledTable& target);

}  // namespace kcs
