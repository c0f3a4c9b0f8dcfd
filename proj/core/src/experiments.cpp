#include "kcs/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <istream>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "json_util.hpp"
#include "kcs/csv.hpp"
#include "kcs/metrics.hpp"
#include "kcs/model_selection.hpp"

namespace kcs {

using detail::json;

const char* const kResultHeader =
    "scenario,estimator,loss,n,m,lambda,gamma,replicate,seed,mse,excess_risk,misclassification,fit_seconds,error";

const std::vector<std::string> kSummaryKeys{"scenario", "estimator", "loss", "n", "m", "lambda", "gamma"};

namespace {

template <class E, std::size_t N>
E parse_enum(std::string_view name, const std::pair<E, const char*> (&table)[N], const char* what) {
  std::string accepted;
  for (const auto& [e, s] : table) {
    if (name == s) return e;
    accepted += accepted.empty() ? s : std::string(", ") + s;
  }
  throw std::invalid_argument(std::string("unknown ") + what + " '" + std::string(name) + "' (" + accepted +
                              " accepted)");
}

template <class E, std::size_t N>
std::string_view enum_name(E e, const std::pair<E, const char*> (&table)[N]) {
  for (const auto& [v, s] : table)
    if (v == e) return s;
  return "unknown";
}

constexpr std::pair<Variant, const char*> kVariants[] = {{Variant::unweighted, "unweighted"},
                                                         {Variant::irw_true, "irw_true"},
                                                         {Variant::tirw_true, "tirw_true"},
                                                         {Variant::irw_kliep, "irw_kliep"},
                                                         {Variant::tirw_kliep, "tirw_kliep"}};
constexpr std::pair<SweepAxis, const char*> kAxes[] = {{SweepAxis::lambda, "lambda"},
                                                       {SweepAxis::n, "n"},
                                                       {SweepAxis::m, "m"},
                                                       {SweepAxis::ell, "ell"},
                                                       {SweepAxis::cost, "cost"}};
constexpr std::pair<GammaRule, const char*> kGammaRules[] = {
    {GammaRule::theorem3, "theorem3"}, {GammaRule::iwcv_grid, "iwcv_grid"}, {GammaRule::fixed, "fixed"}};
constexpr std::pair<LambdaRule, const char*> kLambdaRules[] = {{LambdaRule::fixed, "fixed"},
                                                               {LambdaRule::iwcv, "iwcv"}};

bool uses_true_ratio(Variant v) { return v == Variant::irw_true || v == Variant::tirw_true; }
bool uses_kliep(Variant v) { return v == Variant::irw_kliep || v == Variant::tirw_kliep; }
bool truncated(Variant v) { return v == Variant::tirw_true || v == Variant::tirw_kliep; }

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument("experiment config: " + msg);
}

bool is_integer(double v) { return std::isfinite(v) && v == std::floor(v); }

}  // namespace

std::string_view to_string(Variant v) { return enum_name(v, kVariants); }
std::string_view to_string(SweepAxis a) { return enum_name(a, kAxes); }
std::string_view to_string(GammaRule g) { return enum_name(g, kGammaRules); }
std::string_view to_string(LambdaRule l) { return enum_name(l, kLambdaRules); }
Variant parse_variant(std::string_view name) { return parse_enum(name, kVariants, "estimator variant"); }
SweepAxis parse_sweep_axis(std::string_view name) { return parse_enum(name, kAxes, "sweep axis"); }
GammaRule parse_gamma_rule(std::string_view name) { return parse_enum(name, kGammaRules, "gamma rule"); }
LambdaRule parse_lambda_rule(std::string_view name) { return parse_enum(name, kLambdaRules, "lambda rule"); }

Scenario ScenarioRef::build() const {
  Scenario s = make_scenario(id, shift_case);
  if (homoscedastic) s = kcs::homoscedastic(s);
  if (tau) s.tau = *tau;
  if (r) s.r = *r;
  if (sigma) s.sigma = *sigma;
  if (no_shift) s = s.without_shift();
  return s;
}

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  require(scenario.has_value() != dataset.has_value(), "exactly one of 'scenario' and 'dataset' must be given");
  require(!values.empty(), "sweep values must be nonempty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    require(std::isfinite(values[i]), "sweep values must be finite");
    if (i) require(values[i] > values[i - 1], "sweep values must be strictly increasing");
  }
  switch (axis) {
    case SweepAxis::lambda:
    case SweepAxis::cost:
    case SweepAxis::ell: require(values.front() > 0.0, "sweep values must be positive"); break;
    case SweepAxis::n:
    case SweepAxis::m:
      for (double v : values) require(is_integer(v) && v >= 1.0, "n and m sweep values must be integers >= 1");
      break;
  }
  require(!(dataset && (axis == SweepAxis::n || axis == SweepAxis::m)), "n and m sweeps need a synthetic scenario");
  require(!(scenario && axis == SweepAxis::ell), "the ell sweep needs a dataset");
  require(replicates >= 1, "replicates must be >= 1");
  require(n >= 1 && m >= 1, "n and m must be >= 1");
  require(lambda > 0.0 && std::isfinite(lambda), "lambda must be positive");
  require(ell > 0.0 && std::isfinite(ell), "ell must be positive");
  require(!estimators.empty(), "estimators must be nonempty");
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    require(std::count(estimators.begin(), estimators.end(), estimators[i]) == 1, "duplicate estimator variant");
    require(!(uses_true_ratio(estimators[i]) && !scenario),
            "variant '" + std::string(to_string(estimators[i])) + "' needs the analytic ratio of a scenario");
  }
  if (gamma_rule == GammaRule::fixed) require(gamma && *gamma > 0.0, "gamma_rule 'fixed' needs a positive gamma");
  if (lambda_rule == LambdaRule::iwcv) {
    require(!lambda_grid.empty(), "lambda_rule 'iwcv' needs a nonempty lambda_grid");
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
      require(lambda_grid[i] > 0.0 && std::isfinite(lambda_grid[i]), "lambda_grid entries must be positive");
      if (i) require(lambda_grid[i] > lambda_grid[i - 1], "lambda_grid must be strictly increasing");
    }
    require(axis != SweepAxis::lambda && axis != SweepAxis::cost,
            "lambda_rule 'iwcv' cannot be combined with a lambda or cost sweep");
  }
  require(kliep_basis >= 1, "kliep basis must be >= 1");
  require(cv_folds >= 2, "cv_folds must be >= 2");
  require(solver.tol > 0.0 && solver.max_iter >= 1, "solver tol must be positive and max_iter >= 1");
  if (!median_bandwidth) kernel.validate();
  if (loss) {
    loss->validate();
    if (dataset) require(loss->is_margin(), "dataset experiments need a margin loss (hinge or logistic)");
  }
  if (scenario) {
    const Scenario s = scenario->build();
    if (loss && loss->kind == LossKind::check && scenario->tau)
      require(*loss->tau == *scenario->tau, "loss tau differs from scenario tau");
    if (s.id == ScenarioId::klr3d_s5 && loss) require(loss->is_margin(), "klr3d_s5 labels need a margin loss");
  }
}

ExperimentConfig ExperimentConfig::resolved() const {
  ExperimentConfig c = *this;
  if (c.scenario) {
    if (c.loss && c.loss->kind == LossKind::check && !c.scenario->tau) c.scenario->tau = c.loss->tau;
    const Scenario s = c.scenario->build();
    c.scenario->tau = s.tau;
    c.scenario->r = s.r;
    c.scenario->sigma = s.sigma;
    if (!c.loss) c.loss = s.natural_loss();
  } else if (!c.loss) {
    c.loss = LossSpec::hinge();
  }
  if (c.gamma_rule != GammaRule::fixed) c.gamma.reset();
  if (c.lambda_rule == LambdaRule::fixed) c.lambda_grid.clear();
  return c;
}

namespace {

void check_keys(const json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw Error(std::string("experiment config: '") + where + "' must be an object");
  for (const auto& [k, v] : j.items()) {
    (void)v;
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; }))
      throw Error("experiment config: unknown field '" + k + "' in " + where);
  }
}

std::vector<double> number_list(const json& j, const char* what) {
  if (!j.is_array()) throw Error(std::string("experiment config: '") + what + "' must be an array");
  std::vector<double> out;
  for (const auto& e : j) out.push_back(detail::get_number(e, what));
  return out;
}

json number_list_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(detail::number(x));
  return a;
}

}  // namespace

ExperimentConfig experiment_config_from_json(std::string_view text) {
  using namespace detail;
  try {
    const json j = parse(text);
    check_keys(j,
               {"name", "scenario", "dataset", "loss", "kernel", "estimators", "sweep", "n", "m", "lambda", "ell",
                "replicates", "base_seed", "gamma_rule", "gamma", "lambda_rule", "lambda_grid", "kliep", "solver",
                "cv_folds", "record_timing"},
               "the configuration");
    ExperimentConfig c;
    if (j.contains("name")) c.name = string_field(j, "name");
    if (j.contains("scenario") && !j["scenario"].is_null()) {
      const json& s = j["scenario"];
      check_keys(s, {"id", "case", "homoscedastic", "no_shift", "tau", "r", "sigma"}, "scenario");
      ScenarioRef ref;
      ref.id = parse_scenario_id(string_field(s, "id"));
      if (s.contains("case")) ref.shift_case = parse_shift_case(string_field(s, "case"));
      if (s.contains("homoscedastic")) ref.homoscedastic = s["homoscedastic"].get<bool>();
      if (s.contains("no_shift")) ref.no_shift = s["no_shift"].get<bool>();
      if (s.contains("tau") && !s["tau"].is_null()) ref.tau = number_field(s, "tau");
      if (s.contains("r") && !s["r"].is_null()) ref.r = number_field(s, "r");
      if (s.contains("sigma") && !s["sigma"].is_null()) ref.sigma = number_field(s, "sigma");
      c.scenario = ref;
    }
    if (j.contains("dataset") && !j["dataset"].is_null()) {
      const json& d = j["dataset"];
      check_keys(d, {"path", "label", "positive", "standardize"}, "dataset");
      DataSource src;
      src.path = string_field(d, "path");
      if (d.contains("label")) src.label = string_field(d, "label");
      src.positive = string_field(d, "positive");
      if (d.contains("standardize")) src.standardize = d["standardize"].get<bool>();
      c.dataset = src;
    }
    if (j.contains("loss") && !j["loss"].is_null()) c.loss = loss_from(j["loss"]);
    if (j.contains("kernel")) {
      const json& k = j["kernel"];
      if (k.is_string()) {
        c.kernel.family = parse_kernel_family(k.get<std::string>());
      } else {
        check_keys(k, {"family", "bandwidth", "degree", "offset"}, "kernel");
        c.kernel.family = parse_kernel_family(string_field(k, "family"));
        if (k.contains("bandwidth") && !k["bandwidth"].is_null()) {
          c.kernel.bandwidth = number_field(k, "bandwidth");
          c.median_bandwidth = false;
        }
        if (k.contains("degree")) c.kernel.degree = k["degree"].get<int>();
        if (k.contains("offset")) c.kernel.offset = number_field(k, "offset");
      }
      if (c.kernel.family != KernelFamily::gaussian) c.median_bandwidth = false;
    }
    if (j.contains("estimators")) {
      c.estimators.clear();
      for (const auto& e : j["estimators"]) c.estimators.push_back(parse_variant(e.get<std::string>()));
    }
    if (j.contains("sweep")) {
      const json& s = j["sweep"];
      check_keys(s, {"axis", "values"}, "sweep");
      c.axis = parse_sweep_axis(string_field(s, "axis"));
      c.values = number_list(field(s, "values"), "sweep.values");
    }
    if (j.contains("n")) c.n = j["n"].get<long>();
    if (j.contains("m")) c.m = j["m"].get<long>();
    if (j.contains("lambda")) c.lambda = number_field(j, "lambda");
    if (j.contains("ell")) c.ell = number_field(j, "ell");
    if (j.contains("replicates")) c.replicates = j["replicates"].get<int>();
    if (j.contains("base_seed")) c.base_seed = j["base_seed"].get<std::uint64_t>();
    if (j.contains("gamma_rule")) c.gamma_rule = parse_gamma_rule(string_field(j, "gamma_rule"));
    if (j.contains("gamma") && !j["gamma"].is_null()) c.gamma = number_field(j, "gamma");
    if (j.contains("lambda_rule")) c.lambda_rule = parse_lambda_rule(string_field(j, "lambda_rule"));
    if (j.contains("lambda_grid")) c.lambda_grid = number_list(j["lambda_grid"], "lambda_grid");
    if (j.contains("kliep")) {
      check_keys(j["kliep"], {"basis"}, "kliep");
      if (j["kliep"].contains("basis")) c.kliep_basis = j["kliep"]["basis"].get<int>();
    }
    if (j.contains("solver")) {
      check_keys(j["solver"], {"tol", "max_iter"}, "solver");
      c.solver = solver_from(j["solver"]);
    }
    if (j.contains("cv_folds")) c.cv_folds = j["cv_folds"].get<int>();
    if (j.contains("record_timing")) c.record_timing = j["record_timing"].get<bool>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw Error(std::string("experiment config: ") + e.what());
  }
}

std::string to_json(const ExperimentConfig& c) {
  using namespace detail;
  json j;
  j["name"] = c.name;
  if (c.scenario) {
    json s;
    s["id"] = std::string(to_string(c.scenario->id));
    s["case"] = std::string(to_string(c.scenario->shift_case));
    s["homoscedastic"] = c.scenario->homoscedastic;
    s["no_shift"] = c.scenario->no_shift;
    s["tau"] = c.scenario->tau ? number(*c.scenario->tau) : json(nullptr);
    s["r"] = c.scenario->r ? number(*c.scenario->r) : json(nullptr);
    s["sigma"] = c.scenario->sigma ? number(*c.scenario->sigma) : json(nullptr);
    j["scenario"] = s;
  }
  if (c.dataset) {
    j["dataset"] = {{"path", c.dataset->path},
                    {"label", c.dataset->label},
                    {"positive", c.dataset->positive},
                    {"standardize", c.dataset->standardize}};
  }
  j["loss"] = c.loss ? loss_json(*c.loss) : json(nullptr);
  json k = kernel_json(c.kernel);
  if (c.median_bandwidth) k["bandwidth"] = nullptr;
  j["kernel"] = k;
  json est = json::array();
  for (Variant v : c.estimators) est.push_back(std::string(to_string(v)));
  j["estimators"] = est;
  j["sweep"] = {{"axis", std::string(to_string(c.axis))}, {"values", number_list_json(c.values)}};
  j["n"] = c.n;
  j["m"] = c.m;
  j["lambda"] = number(c.lambda);
  j["ell"] = number(c.ell);
  j["replicates"] = c.replicates;
  j["base_seed"] = c.base_seed;
  j["gamma_rule"] = std::string(to_string(c.gamma_rule));
  j["gamma"] = c.gamma ? number(*c.gamma) : json(nullptr);
  j["lambda_rule"] = std::string(to_string(c.lambda_rule));
  j["lambda_grid"] = number_list_json(c.lambda_grid);
  j["kliep"] = {{"basis", c.kliep_basis}};
  j["solver"] = solver_json(c.solver);
  j["cv_folds"] = c.cv_folds;
  j["record_timing"] = c.record_timing;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Running

std::uint64_t replicate_seed(std::uint64_t base_seed, int replicate) {
  return derive_seed(base_seed, 0x7265706cULL + std::uint64_t(replicate));
}

namespace {

constexpr std::uint64_t kKliepStream = 0x6b6c6970ULL;
constexpr std::uint64_t kFoldStream = 0x666f6c64ULL;

std::string loss_label(const LossSpec& l) {
  std::string s(to_string(l.kind));
  if (l.tau) s += "(" + csv::format_double(*l.tau) + ")";
  if (l.huber_delta) s += "(" + csv::format_double(*l.huber_delta) + ")";
  return s;
}

struct Prepared {
  ExperimentConfig cfg;  // resolved
  std::optional<Scenario> scenario;
  std::optional<LabeledTable> table;
  std::string base_label;
};

struct CellData {
  Dataset data;
  std::string label;
  double lambda = 0.0;
  KernelSpec kernel;
};

CellData make_cell(const Prepared& p, double value, std::uint64_t seed) {
  const ExperimentConfig& c = p.cfg;
  CellData cell;
  cell.label = p.base_label;
  if (p.scenario) {
    const long n = c.axis == SweepAxis::n ? long(value) : c.n;
    const long m = c.axis == SweepAxis::m ? long(value) : c.m;
    cell.data = generate(*p.scenario, n, m, seed);
  } else {
    const double ell = c.axis == SweepAxis::ell ? value : c.ell;
    auto [src, tgt] = covariate_split(*p.table, ell, seed);
    cell.data = to_dataset(src, tgt);
    cell.label += "@ell=" + csv::format_double(ell);
  }
  const double n = double(cell.data.n());
  if (c.axis == SweepAxis::lambda)
    cell.lambda = value;
  else if (c.axis == SweepAxis::cost)
    cell.lambda = 1.0 / (2.0 * n * value);
  else
    cell.lambda = c.lambda;
  if (c.axis == SweepAxis::cost) cell.label += "@C=" + csv::format_double(value);
  cell.kernel = c.kernel;
  if (c.median_bandwidth) cell.kernel = KernelSpec::gaussian(median_heuristic_bandwidth(cell.data.source_x));
  return cell;
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

std::vector<ResultRow> run_cell(const Prepared& p, double value, int replicate) {
  const ExperimentConfig& c = p.cfg;
  const std::uint64_t seed = replicate_seed(c.base_seed, replicate);
  std::vector<ResultRow> rows;
  auto blank_row = [&](Variant v) {
    ResultRow r;
    r.scenario = p.base_label;
    r.estimator = std::string(to_string(v));
    r.loss = loss_label(*c.loss);
    r.replicate = replicate;
    r.seed = seed;
    r.lambda = c.axis == SweepAxis::lambda ? value : c.lambda;
    if (p.scenario) {
      r.n = c.axis == SweepAxis::n ? long(value) : c.n;
      r.m = c.axis == SweepAxis::m ? long(value) : c.m;
    }
    return r;
  };

  CellData cell;
  try {
    cell = make_cell(p, value, seed);
  } catch (const std::exception& e) {
    for (Variant v : c.estimators) {
      rows.push_back(blank_row(v));
      rows.back().error = one_line(e.what());
    }
    return rows;
  }
  const Dataset& data = cell.data;
  const long n = long(data.n());

  std::optional<RatioModel> true_ratio;
  std::optional<double> true_beta_sq;
  if (data.truth) {
    true_ratio = data.truth->ratio;
    const ShiftDiagnostics d = classify_shift(p.scenario->source_density, p.scenario->target_density);
    true_beta_sq = d.beta_sq ? *d.beta_sq : estimate_beta_sq(*true_ratio, data.source_x);
  }

  const bool need_iwcv = c.lambda_rule == LambdaRule::iwcv || c.gamma_rule == GammaRule::iwcv_grid;
  const bool need_kliep = std::any_of(c.estimators.begin(), c.estimators.end(), uses_kliep) ||
                          (need_iwcv && !true_ratio);
  std::optional<RatioModel> kliep;
  std::string kliep_error;
  if (need_kliep) {
    try {
      KliepOptions ko;
      ko.basis = c.kliep_basis;
      ko.seed = derive_seed(seed, kKliepStream);
      kliep = kliep_fit(data.source_x, data.target_x, ko);
    } catch (const std::exception& e) {
      kliep_error = one_line(std::string("kliep: ") + e.what());
    }
  }

  std::optional<CVPlan> plan;
  if (need_iwcv && n >= c.cv_folds) plan = CVPlan::shuffled(n, c.cv_folds, derive_seed(seed, kFoldStream));

  for (Variant v : c.estimators) {
    ResultRow row = blank_row(v);
    row.scenario = cell.label;
    row.n = n;
    row.m = long(data.m());
    row.lambda = cell.lambda;
    try {
      const RatioModel* ratio = nullptr;
      if (uses_true_ratio(v)) ratio = &*true_ratio;
      if (uses_kliep(v)) {
        if (!kliep) throw Error(kliep_error);
        ratio = &*kliep;
      }
      const RatioModel one = RatioModel::constant_one();
      const RatioModel& fit_ratio = ratio ? *ratio : one;

      FitConfig fc;
      fc.loss = *c.loss;
      fc.kernel = cell.kernel;
      fc.lambda = cell.lambda;
      fc.solver = c.solver;
      fc.weighting = v == Variant::unweighted ? Weighting::unweighted
                     : truncated(v)           ? Weighting::tirw
                                              : Weighting::irw;
      double gamma_n = 0.0;
      if (truncated(v)) {
        if (c.gamma_rule == GammaRule::fixed) {
          gamma_n = *c.gamma;
        } else {
          const double beta_sq = uses_true_ratio(v) ? *true_beta_sq : estimate_beta_sq(*kliep, data.source_x);
          gamma_n = truncation_level(n, std::max(1.0, beta_sq));
        }
        fc.truncation_level = gamma_n;
      }

      const bool tune_gamma = truncated(v) && c.gamma_rule == GammaRule::iwcv_grid;
      if (c.lambda_rule == LambdaRule::iwcv || tune_gamma) {
        if (!plan) throw Error("iwcv: fewer source points than folds");
        const RatioModel& cv_ratio = ratio ? *ratio : true_ratio ? *true_ratio : kliep ? *kliep : one;
        if (!ratio && !true_ratio && !kliep) throw Error(kliep_error);
        std::vector<double> lambdas = c.lambda_rule == LambdaRule::iwcv ? c.lambda_grid : std::vector{fc.lambda};
        std::vector<double> gammas{gamma_n};
        if (tune_gamma) {
          gammas.clear();
          for (int k = -3; k <= 3; ++k) gammas.push_back(gamma_n * std::ldexp(1.0, k));
        }
        std::vector<FitConfig> grid;
        for (double lam : lambdas)
          for (double g : gammas) {
            FitConfig cand = fc;
            cand.lambda = lam;
            if (truncated(v)) cand.truncation_level = g;
            grid.push_back(cand);
          }
        const SelectionReport rep = select(data, grid, cv_ratio, *plan);
        fc = grid[rep.chosen];
      }
      row.lambda = fc.lambda;
      if (fc.truncation_level) row.gamma = *fc.truncation_level;

      const auto t0 = std::chrono::steady_clock::now();
      const FittedModel model = fit(data, fc, fit_ratio);
      const auto t1 = std::chrono::steady_clock::now();
      if (c.record_timing) row.fit_seconds = std::chrono::duration<double>(t1 - t0).count();

      const EvalReport ev = evaluate_on_target(model, data);
      row.mse = ev.mse;
      row.excess_risk = ev.excess_risk;
      row.misclassification = ev.misclassification;
    } catch (const std::exception& e) {
      row.error = one_line(e.what());
      if (row.error.empty()) row.error = "unknown failure";
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg_in, int threads) {
  cfg_in.validate();
  Prepared p;
  p.cfg = cfg_in.resolved();
  if (p.cfg.scenario) {
    p.scenario = p.cfg.scenario->build();
    p.base_label = std::string(to_string(p.scenario->id)) + "_" + std::string(to_string(p.scenario->shift_case));
    if (p.cfg.scenario->no_shift) p.base_label += "_noshift";
  } else {
    p.table = load_csv(p.cfg.dataset->path, p.cfg.dataset->label, p.cfg.dataset->positive, p.cfg.dataset->standardize);
    p.base_label = std::filesystem::path(p.cfg.dataset->path).stem().string();
  }

  const std::size_t cells = p.cfg.values.size() * std::size_t(p.cfg.replicates);
  std::vector<std::vector<ResultRow>> out(cells);
  if (threads <= 0) threads = int(std::max(1u, std::thread::hardware_concurrency()));
  threads = int(std::min<std::size_t>(std::size_t(threads), cells));

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells; i = next++) {
      const std::size_t g = i / std::size_t(p.cfg.replicates);
      const int r = int(i % std::size_t(p.cfg.replicates));
      out[i] = run_cell(p, p.cfg.values[g], r);
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<ResultRow> rows;
  for (auto& v : out)
    for (auto& r : v) rows.push_back(std::move(r));
  return rows;
}

// ---------------------------------------------------------------------------
// Row I/O

namespace {

std::string opt(const std::optional<double>& v) { return v ? csv::format_double(*v) : std::string(); }

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

std::optional<double> opt_from(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return csv::parse_double(s);
}

}  // namespace

void write_rows_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kResultHeader << '\n';
  for (const auto& r : rows) {
    out << quote(r.scenario) << ',' << quote(r.estimator) << ',' << quote(r.loss) << ',' << r.n << ',' << r.m << ','
        << csv::format_double(r.lambda) << ',' << opt(r.gamma) << ',' << r.replicate << ',' << r.seed << ','
        << opt(r.mse) << ',' << opt(r.excess_risk) << ',' << opt(r.misclassification) << ','
        << csv::format_double(r.fit_seconds) << ',' << quote(r.error) << '\n';
  }
}

void write_rows_json(std::ostream& out, const std::vector<ResultRow>& rows) {
  json a = json::array();
  auto optj = [](const std::optional<double>& v) { return v ? detail::number(*v) : json(nullptr); };
  for (const auto& r : rows) {
    json j;
    j["scenario"] = r.scenario;
    j["estimator"] = r.estimator;
    j["loss"] = r.loss;
    j["n"] = r.n;
    j["m"] = r.m;
    j["lambda"] = detail::number(r.lambda);
    j["gamma"] = optj(r.gamma);
    j["replicate"] = r.replicate;
    j["seed"] = r.seed;
    j["mse"] = optj(r.mse);
    j["excess_risk"] = optj(r.excess_risk);
    j["misclassification"] = optj(r.misclassification);
    j["fit_seconds"] = detail::number(r.fit_seconds);
    j["error"] = r.error.empty() ? json(nullptr) : json(r.error);
    a.push_back(std::move(j));
  }
  out << a.dump(2) << '\n';
}

std::vector<ResultRow> read_rows_csv(std::istream& in) {
  const csv::Table t = csv::read(in);
  std::string header;
  for (std::size_t i = 0; i < t.header.size(); ++i) header += (i ? "," : "") + t.header[i];
  if (header != kResultHeader) throw Error("rows: unexpected header '" + header + "'");
  std::vector<ResultRow> rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto& f = t.rows[i];
    try {
      ResultRow r;
      r.scenario = f[0];
      r.estimator = f[1];
      r.loss = f[2];
      r.n = long(csv::parse_double(f[3]));
      r.m = long(csv::parse_double(f[4]));
      r.lambda = csv::parse_double(f[5]);
      r.gamma = opt_from(f[6]);
      r.replicate = int(csv::parse_double(f[7]));
      r.seed = std::stoull(f[8]);
      r.mse = opt_from(f[9]);
      r.excess_risk = opt_from(f[10]);
      r.misclassification = opt_from(f[11]);
      r.fit_seconds = csv::parse_double(f[12]);
      r.error = f[13];
      rows.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw Error("rows: data row " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Summaries

namespace {

std::string key_value(const ResultRow& r, const std::string& col) {
  if (col == "scenario") return r.scenario;
  if (col == "estimator") return r.estimator;
  if (col == "loss") return r.loss;
  if (col == "n") return std::to_string(r.n);
  if (col == "m") return std::to_string(r.m);
  if (col == "lambda") return csv::format_double(r.lambda);
  if (col == "gamma") return opt(r.gamma);
  throw std::invalid_argument("summarize: unknown grouping column '" + col + "'");
}

// Numeric values compare numerically, everything else lexicographically.
bool key_less(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == b[i]) continue;
    double x, y;
    try {
      x = csv::parse_double(a[i]);
      y = csv::parse_double(b[i]);
    } catch (const Error&) {
      return a[i] < b[i];
    }
    if (x != y) return x < y;
    return a[i] < b[i];
  }
  return false;
}

std::optional<MetricSummary> summarize_values(std::vector<double> v) {
  if (v.empty()) return std::nullopt;
  std::sort(v.begin(), v.end());
  MetricSummary s;
  s.count = long(v.size());
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / double(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / double(v.size() - 1)) / std::sqrt(double(v.size()));
  }
  return s;
}

}  // namespace

std::vector<SummaryRow> summarize(const std::vector<ResultRow>& rows, const std::vector<std::string>& by) {
  for (const auto& col : by)
    if (std::find(kSummaryKeys.begin(), kSummaryKeys.end(), col) == kSummaryKeys.end())
      throw std::invalid_argument("summarize: unknown grouping column '" + col + "'");
  struct Acc {
    long rows = 0, failures = 0;
    std::vector<double> mse, excess, mis;
  };
  std::map<std::vector<std::string>, Acc, decltype(&key_less)> groups(&key_less);
  for (const auto& r : rows) {
    std::vector<std::string> key;
    for (const auto& col : by) key.push_back(key_value(r, col));
    Acc& a = groups[key];
    ++a.rows;
    if (!r.error.empty()) {
      ++a.failures;
      continue;
    }
    if (r.mse) a.mse.push_back(*r.mse);
    if (r.excess_risk) a.excess.push_back(*r.excess_risk);
    if (r.misclassification) a.mis.push_back(*r.misclassification);
  }
  std::vector<SummaryRow> out;
  for (auto& [key, a] : groups) {
    SummaryRow s;
    s.key = key;
    s.rows = a.rows;
    s.failures = a.failures;
    s.mse = summarize_values(std::move(a.mse));
    s.excess_risk = summarize_values(std::move(a.excess));
    s.misclassification = summarize_values(std::move(a.mis));
    out.push_back(std::move(s));
  }
  return out;
}

void write_summary_csv(std::ostream& out, const std::vector<std::string>& by, const std::vector<SummaryRow>& rows) {
  for (const auto& col : by) out << col << ',';
  out << "rows,failures,mse_mean,mse_stderr,excess_risk_mean,excess_risk_stderr,misclassification_mean,"
         "misclassification_stderr\n";
  auto metric = [&](const std::optional<MetricSummary>& m) {
    if (m)
      out << ',' << csv::format_double(m->mean) << ',' << csv::format_double(m->stderr_);
    else
      out << ",,";
  };
  for (const auto& r : rows) {
    for (const auto& k : r.key) out << quote(k) << ',';
    out << r.rows << ',' << r.failures;
    metric(r.mse);
    metric(r.excess_risk);
    metric(r.misclassification);
    out << '\n';
  }
}

std::vector<std::string> default_grouping(const ExperimentConfig& cfg) {
  std::vector<std::string> by{"scenario", "estimator", "loss"};
  switch (cfg.axis) {
    case SweepAxis::lambda: by.push_back("lambda"); break;
    case SweepAxis::n: by.push_back("n"); break;
    case SweepAxis::m: by.push_back("m"); break;
    case SweepAxis::ell:
    case SweepAxis::cost: break;
  }
  return by;
}

}  // namespace kcs
