#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kcs/estimators.hpp"
#include "kcs/synthdata.hpp"

namespace kcs {

// Estimator variants compared by the harness. "true" uses the analytic
// ratio of a synthetic scenario, "kliep" a ratio fitted on the replicate's
// covariates.
enum class Variant { unweighted, irw_true, tirw_true, irw_kliep, tirw_kliep };
enum class SweepAxis { lambda, n, m, ell, cost };
enum class GammaRule { theorem3, iwcv_grid, fixed };
enum class LambdaRule { fixed, iwcv };

std::string_view to_string(Variant v);
std::string_view to_string(SweepAxis a);
std::string_view to_string(GammaRule g);
std::string_view to_string(LambdaRule l);
Variant parse_variant(std::string_view name);
SweepAxis parse_sweep_axis(std::string_view name);
GammaRule parse_gamma_rule(std::string_view name);
LambdaRule parse_lambda_rule(std::string_view name);

struct ScenarioRef {
  ScenarioId id = ScenarioId::kqr1d;
  ShiftCase shift_case = ShiftCase::uniform;
  bool homoscedastic = false;
  bool no_shift = false;  // target law replaced by the source law
  std::optional<double> tau;
  std::optional<double> r;
  std::optional<double> sigma;

  Scenario build() const;
};

struct DataSource {
  std::string path;
  std::string label = "class";
  std::string positive;
  bool standardize = true;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::optional<ScenarioRef> scenario;
  std::optional<DataSource> dataset;
  std::optional<LossSpec> loss;           // default: the scenario's natural loss, hinge for datasets
  KernelSpec kernel;                      // bandwidth ignored when median_bandwidth is set
  bool median_bandwidth = true;           // per replicate, from the source covariates
  std::vector<Variant> estimators{Variant::unweighted, Variant::tirw_true};
  SweepAxis axis = SweepAxis::lambda;
  std::vector<double> values{1e-4};
  long n = 500;
  long m = 1000;
  double lambda = 1e-4;
  double ell = 8.0;
  int replicates = 1;
  std::uint64_t base_seed = 0;
  GammaRule gamma_rule = GammaRule::theorem3;
  std::optional<double> gamma;  // GammaRule::fixed
  LambdaRule lambda_rule = LambdaRule::fixed;
  std::vector<double> lambda_grid;
  int kliep_basis = 100;
  SolverOptions solver;
  int cv_folds = 5;
  bool record_timing = false;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  // Copy with every default made explicit (loss, scenario tau/r/sigma).
  ExperimentConfig resolved() const;
  bool synthetic() const { return scenario.has_value(); }
};

ExperimentConfig experiment_config_from_json(std::string_view text);
std::string to_json(const ExperimentConfig& cfg);

struct ResultRow {
  std::string scenario;
  std::string estimator;
  std::string loss;
  long n = 0;
  long m = 0;
  double lambda = 0.0;
  std::optional<double> gamma;  // absent for untruncated variants
  int replicate = 0;
  std::uint64_t seed = 0;
  std::optional<double> mse;
  std::optional<double> excess_risk;
  std::optional<double> misclassification;
  double fit_seconds = 0.0;
  std::string error;  // empty on success
};

extern const char* const kResultHeader;

// Seed of replicate r; depends only on (base_seed, r).
std::uint64_t replicate_seed(std::uint64_t base_seed, int replicate);

// Rows ordered by (grid point, replicate, estimator) whatever the thread
// count. threads <= 0 uses the available hardware concurrency.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, int threads = 0);

void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows);
void write_rows_json(std::ostream& out, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_rows_csv(std::istream& in);

struct MetricSummary {
  long count = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
};

struct SummaryRow {
  std::vector<std::string> key;  // values of the grouping columns
  long rows = 0;
  long failures = 0;
  std::optional<MetricSummary> mse;
  std::optional<MetricSummary> excess_risk;
  std::optional<MetricSummary> misclassification;
};

// Grouping columns accepted by summarize.
extern const std::vector<std::string> kSummaryKeys;

// Mean and standard error (sample sd / sqrt(k)) of every metric per group.
// Groups are sorted by key and sums run over sorted values, so the result
// does not depend on row order.
std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows,
                                  const std::vector<std::string>& by = {"scenario", "estimator", "loss", "n", "m",
                                                                        "lambda"});
void write_summary_csv(std::ostream& out, const std::vector<std::string>& by, const std::vector<SummaryRow>& rows);

// Grouping that matches the configuration's sweep axis.
std::vector<std::string> default_grouping(const ExperimentConfig& cfg);

}  // namespace kcs
