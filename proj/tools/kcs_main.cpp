// kcs: command-line front end for the kcshift library.
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "kcs/csv.hpp"
#include "kcs/estimators.hpp"
#include "kcs/experiments.hpp"
#include "kcs/metrics.hpp"
#include "kcs/model_selection.hpp"
#include "kcs/ratio.hpp"
#include "kcs/repro.hpp"
#include "kcs/serialize.hpp"
#include "kcs/synthdata.hpp"

namespace fs = std::filesystem;
using namespace kcs;

namespace {

const std::vector<std::string> kScenarios{"kqr1d", "krr1d_s1", "krr3d_s2", "kqr3d_s4", "klr3d_s5"};
const std::vector<std::string> kCases{"uniform", "moment"};
const std::vector<std::string> kLosses{"squared", "check", "huber", "logistic", "hinge"};
const std::vector<std::string> kKernels{"gaussian", "polynomial", "linear"};
const std::vector<std::string> kWeightings{"unweighted", "irw", "tirw"};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(csv::parse_double(item));
  if (out.empty()) throw std::invalid_argument("empty list '" + s + "'");
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory '" + dir + "': " + ec.message());
}

void ensure_parent(const std::string& file) {
  const fs::path parent = fs::path(file).parent_path();
  if (!parent.empty()) ensure_dir(parent.string());
}

std::string join(const std::string& dir, const std::string& file) { return (fs::path(dir) / file).string(); }

template <class F>
void write_stream(const std::string& path, F&& f) {
  if (path == "-") {
    f(std::cout);
    return;
  }
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  f(out);
  if (!out) throw Error("write failed for '" + path + "'");
}

int resolve_threads(int t) { return t > 0 ? t : int(std::max(1u, std::thread::hardware_concurrency())); }

struct LossOpts {
  std::string loss = "squared";
  double tau = 0.5;
  double delta = 1.0;
  LossSpec build() const {
    const LossKind k = parse_loss_kind(loss);
    if (k == LossKind::check) return LossSpec::check(tau);
    if (k == LossKind::huber) return LossSpec::huber(delta);
    LossSpec s;
    s.kind = k;
    return s;
  }
};

struct KernelOpts {
  std::string family = "gaussian";
  std::optional<double> bandwidth;
  int degree = 2;
  double offset = 1.0;
  KernelSpec build(const Points& x) const {
    switch (parse_kernel_family(family)) {
      case KernelFamily::gaussian:
        return KernelSpec::gaussian(bandwidth ? *bandwidth : median_heuristic_bandwidth(x));
      case KernelFamily::polynomial: return KernelSpec::polynomial(degree, offset);
      case KernelFamily::linear: return KernelSpec::linear();
    }
    return {};
  }
};

void add_loss_opts(CLI::App* c, LossOpts& o) {
  c->add_option("--loss", o.loss, "Loss function")->check(CLI::IsMember(kLosses))->capture_default_str();
  c->add_option("--tau", o.tau, "Quantile level of the check loss")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  c->add_option("--delta", o.delta, "Huber threshold")->check(CLI::PositiveNumber)->capture_default_str();
}

void add_kernel_opts(CLI::App* c, KernelOpts& o) {
  c->add_option("--kernel", o.family, "Kernel family")->check(CLI::IsMember(kKernels))->capture_default_str();
  c->add_option("--bandwidth", o.bandwidth, "Gaussian bandwidth (default: median heuristic)")
      ->check(CLI::PositiveNumber);
  c->add_option("--degree", o.degree, "Polynomial degree")->check(CLI::PositiveNumber)->capture_default_str();
  c->add_option("--offset", o.offset, "Polynomial offset")->capture_default_str();
}

Dataset source_only(const csv::PointsWithResponse& p, const std::string& path) {
  if (!p.y) throw Error("'" + path + "' has no y column");
  Dataset d;
  d.source_x = p.x;
  d.source_y = *p.y;
  d.validate();
  return d;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel learning under covariate shift"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "kcs 0.1.0");
  int threads = 0;
  std::string format = "csv";
  app.add_option("--threads", threads, "Worker threads (default: available parallelism)")->check(CLI::NonNegativeNumber);
  app.add_option("--format", format, "Output format for row tables")->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  // gen ---------------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "Generate a synthetic source/target sample");
  std::string g_scenario, g_case = "uniform", g_out;
  long g_n = 500, g_m = 1000;
  std::uint64_t g_seed = 0;
  std::optional<double> g_tau, g_r, g_sigma;
  bool g_homo = false, g_noshift = false;
  gen->add_option("--scenario", g_scenario, "Scenario id")->required()->check(CLI::IsMember(kScenarios));
  gen->add_option("--case", g_case, "Boundedness case")->check(CLI::IsMember(kCases))->capture_default_str();
  gen->add_option("--n", g_n, "Source sample size")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--m", g_m, "Target sample size")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--seed", g_seed, "Master seed")->capture_default_str();
  gen->add_option("--tau", g_tau, "Quantile level (quantile scenarios)")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--r", g_r, "Heteroscedasticity factor");
  gen->add_option("--sigma", g_sigma, "Noise scale")->check(CLI::NonNegativeNumber);
  gen->add_flag("--homoscedastic", g_homo, "Use the homoscedastic noise setting");
  gen->add_flag("--no-shift", g_noshift, "Draw target covariates from the source law");
  gen->add_option("--out", g_out, "Output directory")->required();

  // ratio -------------------------------------------------------------------
  auto* ratio = app.add_subcommand("ratio", "Estimate the importance ratio from two covariate files");
  std::string r_source, r_target, r_out, r_method = "kliep", r_scenario, r_case = "uniform";
  int r_basis = 100;
  std::optional<double> r_bandwidth, r_gamma;
  std::uint64_t r_seed = 0;
  ratio->add_option("--source", r_source, "Source covariates CSV")->check(CLI::ExistingFile);
  ratio->add_option("--target", r_target, "Target covariates CSV")->check(CLI::ExistingFile);
  ratio->add_option("--method", r_method, "kliep or analytic")->check(CLI::IsMember({"kliep", "analytic"}))
      ->capture_default_str();
  ratio->add_option("--scenario", r_scenario, "Scenario for the analytic ratio")->check(CLI::IsMember(kScenarios));
  ratio->add_option("--case", r_case, "Boundedness case for the analytic ratio")->check(CLI::IsMember(kCases))
      ->capture_default_str();
  ratio->add_option("--basis", r_basis, "KLIEP basis size")->check(CLI::PositiveNumber)->capture_default_str();
  ratio->add_option("--bandwidth", r_bandwidth, "KLIEP bandwidth (default: median heuristic)")
      ->check(CLI::PositiveNumber);
  ratio->add_option("--seed", r_seed, "Basis selection seed")->capture_default_str();
  ratio->add_option("--gamma", r_gamma, "Truncation level stored with the ratio")->check(CLI::PositiveNumber);
  ratio->add_option("--out", r_out, "Output JSON")->required();

  // fit ---------------------------------------------------------------------
  auto* fitc = app.add_subcommand("fit", "Fit an estimator on a source sample");
  std::string f_data, f_ratio, f_out, f_weighting = "unweighted";
  LossOpts f_loss;
  KernelOpts f_kernel;
  double f_lambda = 1e-4;
  std::optional<double> f_gamma;
  SolverOptions f_solver;
  fitc->add_option("--data", f_data, "Source CSV with x0.. and y columns")->required()->check(CLI::ExistingFile);
  add_loss_opts(fitc, f_loss);
  add_kernel_opts(fitc, f_kernel);
  fitc->add_option("--lambda", f_lambda, "Regularization")->check(CLI::PositiveNumber)->capture_default_str();
  fitc->add_option("--weighting", f_weighting, "Weighting scheme")->check(CLI::IsMember(kWeightings))
      ->capture_default_str();
  fitc->add_option("--ratio", f_ratio, "Ratio JSON (irw, tirw)")->check(CLI::ExistingFile);
  fitc->add_option("--gamma", f_gamma, "Truncation level (tirw; default from the ratio file)")
      ->check(CLI::PositiveNumber);
  fitc->add_option("--tol", f_solver.tol, "Solver tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  fitc->add_option("--max-iter", f_solver.max_iter, "Solver iteration cap")->check(CLI::PositiveNumber)
      ->capture_default_str();
  fitc->add_option("--out", f_out, "Output model JSON")->required();

  // predict -----------------------------------------------------------------
  auto* pred = app.add_subcommand("predict", "Evaluate a fitted model");
  std::string p_model, p_points, p_out = "-";
  bool p_classify = false;
  pred->add_option("--model", p_model, "Model JSON")->required()->check(CLI::ExistingFile);
  pred->add_option("--points", p_points, "Covariates CSV")->required()->check(CLI::ExistingFile);
  pred->add_flag("--classify", p_classify, "Also write sign labels (margin losses)");
  pred->add_option("--out", p_out, "Output CSV ('-' for stdout)")->capture_default_str();

  // select ------------------------------------------------------------------
  auto* sel = app.add_subcommand("select", "Importance-weighted cross-validation over a grid");
  std::string s_data, s_grid, s_ratio, s_out = "-";
  int s_folds = 5;
  std::uint64_t s_seed = 0;
  sel->add_option("--data", s_data, "Source CSV with x0.. and y columns")->required()->check(CLI::ExistingFile);
  sel->add_option("--grid", s_grid, "JSON array of fit configurations")->required()->check(CLI::ExistingFile);
  sel->add_option("--ratio", s_ratio, "Ratio JSON (default: constant one)")->check(CLI::ExistingFile);
  sel->add_option("--folds", s_folds, "Number of folds")->check(CLI::Range(2, 1000))->capture_default_str();
  sel->add_option("--seed", s_seed, "Fold shuffle seed")->capture_default_str();
  sel->add_option("--out", s_out, "Output report JSON ('-' for stdout)")->capture_default_str();

  // experiment --------------------------------------------------------------
  auto* exp = app.add_subcommand("experiment", "Run a configured sweep");
  std::string e_config, e_out, e_summary;
  exp->add_option("--config", e_config, "Experiment JSON")->required()->check(CLI::ExistingFile);
  exp->add_option("--out", e_out, "Output rows file")->required();
  exp->add_option("--summary", e_summary, "Optional summary CSV");

  // rates -------------------------------------------------------------------
  auto* rates = app.add_subcommand("rates", "Sample-size sweep with a fitted log-log slope");
  std::string t_scenario, t_case = "uniform", t_grid, t_out = "-", t_estimator = "unweighted";
  int t_reps = 20;
  long t_m = 1000;
  double t_scale = 1e-3;
  std::optional<double> t_lambda;
  bool t_shift = false;
  std::uint64_t t_seed = 0;
  rates->add_option("--scenario", t_scenario, "Scenario id")->required()->check(CLI::IsMember(kScenarios));
  rates->add_option("--case", t_case, "Boundedness case")->check(CLI::IsMember(kCases))->capture_default_str();
  rates->add_option("--n-grid", t_grid, "Comma separated sample sizes")->required();
  rates->add_option("--m", t_m, "Target sample size")->check(CLI::PositiveNumber)->capture_default_str();
  rates->add_option("--replicates", t_reps, "Replicates per size")->check(CLI::PositiveNumber)->capture_default_str();
  rates->add_option("--lambda-scale", t_scale, "lambda = scale * log(n)^2 / n")->check(CLI::PositiveNumber)
      ->capture_default_str();
  rates->add_option("--lambda", t_lambda, "Fixed lambda instead of the log(n)^2/n rule")->check(CLI::PositiveNumber);
  rates->add_option("--estimator", t_estimator, "Estimator variant")
      ->check(CLI::IsMember({"unweighted", "irw_true", "tirw_true", "irw_kliep", "tirw_kliep"}))
      ->capture_default_str();
  rates->add_flag("--shift", t_shift, "Keep the covariate shift (default: source = target law)");
  rates->add_option("--seed", t_seed, "Base seed")->capture_default_str();
  rates->add_option("--out", t_out, "Output CSV ('-' for stdout)")->capture_default_str();

  // split -------------------------------------------------------------------
  auto* split = app.add_subcommand("split", "Covariate-shift split of a labelled CSV");
  std::string sp_data, sp_label = "class", sp_positive, sp_out;
  double sp_ell = 8.0;
  std::uint64_t sp_seed = 0;
  bool sp_raw = false;
  split->add_option("--data", sp_data, "Labelled CSV")->required()->check(CLI::ExistingFile);
  split->add_option("--label", sp_label, "Label column")->capture_default_str();
  split->add_option("--positive", sp_positive, "Label value mapped to +1")->required();
  split->add_option("--ell", sp_ell, "Shift level")->check(CLI::PositiveNumber)->capture_default_str();
  split->add_option("--seed", sp_seed, "Split seed")->capture_default_str();
  split->add_flag("--no-standardize", sp_raw, "Keep raw feature scales");
  split->add_option("--out", sp_out, "Output directory")->required();

  // summarize ---------------------------------------------------------------
  auto* summ = app.add_subcommand("summarize", "Mean and standard error per group of result rows");
  std::string su_rows, su_out = "-", su_by = "scenario,estimator,loss,n,m,lambda";
  summ->add_option("--rows", su_rows, "Rows CSV from experiment")->required()->check(CLI::ExistingFile);
  summ->add_option("--by", su_by, "Comma separated grouping columns")->capture_default_str();
  summ->add_option("--out", su_out, "Output CSV ('-' for stdout)")->capture_default_str();

  // repro -------------------------------------------------------------------
  auto* repro = app.add_subcommand("repro", "Run or export reproduction entries");
  std::string rp_entry, rp_out, rp_export, rp_data, rp_label = "class", rp_positive;
  std::optional<int> rp_reps;
  std::optional<double> rp_budget;
  bool rp_list = false;
  repro->add_option("--entry", rp_entry, "Entry id");
  repro->add_flag("--list", rp_list, "List entries");
  repro->add_option("--export", rp_export, "Write every panel configuration to this directory");
  repro->add_option("--replicates", rp_reps, "Override the replicate count")->check(CLI::PositiveNumber);
  repro->add_option("--budget", rp_budget, "Override the runtime budget in seconds")->check(CLI::PositiveNumber);
  repro->add_option("--data", rp_data, "Labelled CSV for dataset entries")->check(CLI::ExistingFile);
  repro->add_option("--label", rp_label, "Label column of --data")->capture_default_str();
  repro->add_option("--positive", rp_positive, "Positive label of --data");
  repro->add_option("--out", rp_out, "Directory for rows, summaries and the verdict");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help() << std::flush;
    return 1;
  }

  auto usage = [&](CLI::App* sub, const std::string& msg) {
    std::cerr << "error: " << msg << "\n\n" << sub->help() << std::flush;
    return 1;
  };

  try {
    if (*gen) {
      ScenarioRef ref;
      ref.id = parse_scenario_id(g_scenario);
      ref.shift_case = parse_shift_case(g_case);
      ref.homoscedastic = g_homo;
      ref.no_shift = g_noshift;
      ref.tau = g_tau;
      ref.r = g_r;
      ref.sigma = g_sigma;
      const Scenario s = ref.build();
      const Dataset d = generate(s, g_n, g_m, g_seed);
      ensure_dir(g_out);
      csv::write_points_file(join(g_out, "source.csv"), d.source_x, &d.source_y);
      csv::write_points_file(join(g_out, "target.csv"), d.target_x, &*d.target_y);
      write_text_file(join(g_out, "scenario.json"), scenario_to_json(s, g_n, g_m, g_seed));
    } else if (*ratio) {
      RatioModel model;
      if (r_method == "analytic") {
        if (r_scenario.empty()) return usage(ratio, "--method analytic needs --scenario");
        const Scenario s = make_scenario(parse_scenario_id(r_scenario), parse_shift_case(r_case));
        model = RatioModel::analytic(s.source_density, s.target_density);
      } else {
        if (r_source.empty() || r_target.empty()) return usage(ratio, "--method kliep needs --source and --target");
        const auto src = csv::read_points_file(r_source);
        const auto tgt = csv::read_points_file(r_target);
        KliepOptions ko;
        ko.basis = r_basis;
        ko.bandwidth = r_bandwidth;
        ko.seed = r_seed;
        KliepDiagnostics diag;
        model = kliep_fit(src.x, tgt.x, ko, &diag);
        std::cerr << "kliep: " << diag.iterations << " iterations, objective " << diag.objective
                  << ", normalization residual " << diag.normalization_residual << "\n";
      }
      if (r_gamma) model = model.truncated(*r_gamma);
      ensure_parent(r_out);
      write_text_file(r_out, to_json(model));
    } else if (*fitc) {
      const auto pts = csv::read_points_file(f_data);
      const Dataset d = source_only(pts, f_data);
      FitConfig cfg;
      cfg.loss = f_loss.build();
      cfg.kernel = f_kernel.build(d.source_x);
      cfg.lambda = f_lambda;
      cfg.weighting = parse_weighting(f_weighting);
      cfg.solver = f_solver;
      RatioModel r = RatioModel::constant_one();
      if (cfg.weighting != Weighting::unweighted) {
        if (f_ratio.empty()) return usage(fitc, "--weighting " + f_weighting + " needs --ratio");
        r = ratio_from_json(read_text_file(f_ratio));
      }
      if (cfg.weighting == Weighting::tirw) {
        if (f_gamma)
          cfg.truncation_level = f_gamma;
        else if (r.truncation)
          cfg.truncation_level = r.truncation;
        else
          cfg.truncation_level = truncation_level(long(d.n()), std::max(1.0, estimate_beta_sq(r, d.source_x)));
      }
      const FittedModel m = fit(d, cfg, r);
      ensure_parent(f_out);
      write_text_file(f_out, to_json(m));
    } else if (*pred) {
      const FittedModel m = model_from_json(read_text_file(p_model));
      const auto pts = csv::read_points_file(p_points);
      if (p_classify && !m.loss.is_margin()) return usage(pred, "--classify needs a hinge or logistic model");
      const Vector f = predict(m, pts.x);
      const Vector lab = p_classify ? classify(m, pts.x) : Vector();
      write_stream(p_out, [&](std::ostream& out) {
        for (Eigen::Index j = 0; j < pts.x.cols(); ++j) out << 'x' << j << ',';
        out << "f" << (p_classify ? ",label" : "") << '\n';
        for (Eigen::Index i = 0; i < pts.x.rows(); ++i) {
          for (Eigen::Index j = 0; j < pts.x.cols(); ++j) out << csv::format_double(pts.x(i, j)) << ',';
          out << csv::format_double(f[i]);
          if (p_classify) out << ',' << csv::format_double(lab[i]);
          out << '\n';
        }
      });
    } else if (*sel) {
      const auto pts = csv::read_points_file(s_data);
      const Dataset d = source_only(pts, s_data);
      const auto grid = fit_grid_from_json(read_text_file(s_grid));
      const RatioModel r = s_ratio.empty() ? RatioModel::constant_one() : ratio_from_json(read_text_file(s_ratio));
      const CVPlan plan = CVPlan::shuffled(d.n(), s_folds, s_seed);
      const SelectionReport rep = select(d, grid, r, plan);
      write_stream(s_out, [&](std::ostream& out) { out << to_json(rep); });
    } else if (*exp) {
      const ExperimentConfig cfg = experiment_config_from_json(read_text_file(e_config));
      const auto rows = run_experiment(cfg, resolve_threads(threads));
      write_stream(e_out, [&](std::ostream& out) {
        if (format == "json")
          write_rows_json(out, rows);
        else
          write_rows_csv(out, rows);
      });
      const fs::path dir = e_out == "-" ? fs::current_path() : fs::path(e_out).parent_path();
      write_text_file((dir / "resolved_config.json").string(), to_json(cfg.resolved()));
      if (!e_summary.empty()) {
        const auto by = default_grouping(cfg);
        write_stream(e_summary, [&](std::ostream& out) { write_summary_csv(out, by, summarize(rows, by)); });
      }
    } else if (*rates) {
      const auto ns = parse_list(t_grid);
      for (double n : ns)
        if (!(n >= 1 && n == std::floor(n))) return usage(rates, "--n-grid entries must be positive integers");
      ExperimentConfig base;
      base.name = "rates";
      ScenarioRef ref;
      ref.id = parse_scenario_id(t_scenario);
      ref.shift_case = parse_shift_case(t_case);
      ref.no_shift = !t_shift;
      base.scenario = ref;
      base.estimators = {parse_variant(t_estimator)};
      base.axis = SweepAxis::n;
      base.m = t_m;
      base.replicates = t_reps;
      base.base_seed = t_seed;
      std::vector<double> lambdas, means, stderrs;
      for (double n : ns) {
        ExperimentConfig c = base;
        c.values = {n};
        c.lambda = t_lambda ? *t_lambda : t_scale * std::log(n) * std::log(n) / n;
        const auto rows = run_experiment(c, resolve_threads(threads));
        const auto s = summarize(rows, {"n"});
        const bool classification = c.resolved().loss->is_margin();
        const auto& metric = classification ? s.front().misclassification : s.front().mse;
        if (!metric) throw Error("rates: every fit failed at n = " + csv::format_double(n));
        lambdas.push_back(c.lambda);
        means.push_back(metric->mean);
        stderrs.push_back(metric->stderr_);
      }
      const auto [slope, intercept] = rate_slope(ns, means);
      write_stream(t_out, [&](std::ostream& out) {
        out << "n,lambda,mean_error,stderr,replicates,slope,intercept\n";
        for (std::size_t i = 0; i < ns.size(); ++i)
          out << csv::format_double(ns[i]) << ',' << csv::format_double(lambdas[i]) << ','
              << csv::format_double(means[i]) << ',' << csv::format_double(stderrs[i]) << ',' << t_reps << ','
              << csv::format_double(slope) << ',' << csv::format_double(intercept) << '\n';
      });
    } else if (*split) {
      const LabeledTable t = load_csv(sp_data, sp_label, sp_positive, !sp_raw);
      const auto [src, tgt] = covariate_split(t, sp_ell, sp_seed);
      ensure_dir(sp_out);
      csv::write_points_file(join(sp_out, "source.csv"), src.x, &src.y);
      csv::write_points_file(join(sp_out, "target.csv"), tgt.x, &tgt.y);
    } else if (*summ) {
      std::ifstream in(su_rows, std::ios::binary);
      const auto rows = read_rows_csv(in);
      std::vector<std::string> by;
      std::stringstream ss(su_by);
      for (std::string col; std::getline(ss, col, ',');) {
        if (std::find(kSummaryKeys.begin(), kSummaryKeys.end(), col) == kSummaryKeys.end())
          return usage(summ, "unknown grouping column '" + col + "'");
        by.push_back(col);
      }
      write_stream(su_out, [&](std::ostream& out) { write_summary_csv(out, by, summarize(rows, by)); });
    } else if (*repro) {
      if (rp_list) {
        for (const auto& e : repro_registry())
          std::cout << e.id << '\t' << e.panels.size() << " panel(s)\t" << e.description << "\n\t" << e.predicate_text
                    << '\n';
        return 0;
      }
      if (!rp_export.empty()) {
        ensure_dir(rp_export);
        for (const auto& e : repro_registry())
          for (const auto& p : e.panels)
            write_text_file(join(rp_export, e.id + (p.name.empty() ? "" : "__" + p.name) + ".json"), to_json(p.config));
        if (rp_entry.empty()) return 0;
      }
      if (rp_entry.empty()) return usage(repro, "give --entry, --list or --export");
      const ReproEntry& entry = [&]() -> const ReproEntry& {
        try {
          return find_repro_entry(rp_entry);
        } catch (const std::invalid_argument& e) {
          std::cerr << "error: " << e.what() << '\n';
          std::exit(1);
        }
      }();
      ReproOptions opt;
      opt.replicates = rp_reps;
      opt.budget_seconds = rp_budget;
      opt.threads = resolve_threads(threads);
      if (!rp_data.empty()) {
        if (rp_positive.empty()) return usage(repro, "--data needs --positive");
        opt.data = DataSource{rp_data, rp_label, rp_positive, true};
      }
      const ReproOutcome o = verify_repro(entry, opt);
      const std::string verdict = o.skipped ? "SKIP" : o.passed ? "PASS" : "FAIL";
      if (!rp_out.empty() && !o.skipped) {
        ensure_dir(rp_out);
        for (std::size_t i = 0; i < o.panels.size(); ++i) {
          const std::string stem = entry.id + (o.panels[i].name.empty() ? "" : "__" + o.panels[i].name);
          const bool js = format == "json";
          write_stream(join(rp_out, stem + (js ? ".json" : ".csv")), [&](std::ostream& out) {
            js ? write_rows_json(out, o.rows[i]) : write_rows_csv(out, o.rows[i]);
          });
          const auto by = default_grouping(o.panels[i].config);
          write_stream(join(rp_out, stem + ".summary.csv"),
                       [&](std::ostream& out) { write_summary_csv(out, by, summarize(o.rows[i], by)); });
          write_text_file(join(rp_out, stem + ".config.json"), to_json(o.panels[i].config));
        }
        std::ostringstream v;
        v << "entry," << entry.id << "\nverdict," << verdict << "\npredicate,\"" << entry.predicate_text << "\"\n";
        for (const auto& [k, val] : o.stats) v << k << ',' << csv::format_double(val) << '\n';
        write_text_file(join(rp_out, entry.id + ".verdict.csv"), v.str());
      }
      std::cout << entry.id << ' ' << verdict << ": " << o.detail << '\n';
      std::cerr << "elapsed " << o.seconds << " s\n";
      return o.skipped || o.passed ? 0 : 2;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
