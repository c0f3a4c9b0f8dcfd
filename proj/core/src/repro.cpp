#include "kcs/repro.hpp"

#include <chrono>
#include <cmath>
#include <map>
#include <sstream>

#include "kcs/csv.hpp"

namespace kcs {

namespace {

using V = Variant;

const std::vector<double> kLambdaGrid{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
const std::vector<double> kLambdaGridS{1e-6, 1e-5, 5e-5, 1e-4, 1e-3, 1e-2, 1e-1};
const std::vector<double> kNGrid{100, 200, 500, 1000, 2000};
const std::vector<double> kMGrid{200, 500, 1000, 2000};
const std::vector<double> kCostGrid{0.01, 0.1, 1, 10, 100};

ExperimentConfig synthetic(const std::string& name, ScenarioId id, ShiftCase c, std::uint64_t seed) {
  ExperimentConfig cfg;
  cfg.name = name;
  ScenarioRef ref;
  ref.id = id;
  ref.shift_case = c;
  cfg.scenario = ref;
  cfg.estimators = {V::unweighted, V::tirw_true, V::tirw_kliep};
  cfg.n = 500;
  cfg.m = 1000;
  cfg.lambda = 1e-4;
  cfg.replicates = 100;
  cfg.base_seed = seed;
  return cfg;
}

// The three panels of a figure row: lambda sweep, n sweep, m sweep.
std::vector<ReproPanel> sweep_panels(const std::string& prefix, const ExperimentConfig& base,
                                     const std::vector<double>& lambdas, double fixed_lambda) {
  std::vector<ReproPanel> out;
  ExperimentConfig c = base;
  c.axis = SweepAxis::lambda;
  c.values = lambdas;
  c.name = base.name + "-" + prefix + "lambda";
  out.push_back({prefix + "lambda", c});
  c = base;
  c.lambda = fixed_lambda;
  c.axis = SweepAxis::n;
  c.values = kNGrid;
  c.name = base.name + "-" + prefix + "n";
  out.push_back({prefix + "n", c});
  c.axis = SweepAxis::m;
  c.values = kMGrid;
  c.name = base.name + "-" + prefix + "m";
  out.push_back({prefix + "m", c});
  return out;
}

struct Mean {
  double mean = 0.0;
  double stderr_ = 0.0;
  long count = 0;
};

std::optional<double> metric_of(const ResultRow& r, const std::string& metric) {
  if (metric == "mse") return r.mse;
  if (metric == "excess_risk") return r.excess_risk;
  if (metric == "misclassification") return r.misclassification;
  return std::nullopt;
}

// Mean of `metric` per scenario label and lambda for one estimator.
std::map<std::pair<std::string, double>, Mean> means_by_point(const std::vector<ResultRow>& rows,
                                                              const std::string& estimator,
                                                              const std::string& metric) {
  std::vector<ResultRow> sel;
  for (const auto& r : rows)
    if (r.estimator == estimator) sel.push_back(r);
  std::map<std::pair<std::string, double>, Mean> out;
  for (const auto& s : summarize(sel, {"scenario", "lambda"})) {
    const auto& m = metric == "mse"           ? s.mse
                    : metric == "excess_risk" ? s.excess_risk
                                              : s.misclassification;
    if (m) out[{s.key[0], csv::parse_double(s.key[1])}] = {m->mean, m->stderr_, m->count};
  }
  return out;
}

// Mean metric of `estimator` over all rows of the panel.
Mean overall_mean(const std::vector<ResultRow>& rows, const std::string& estimator, const std::string& metric) {
  std::vector<double> v;
  for (const auto& r : rows)
    if (r.estimator == estimator && r.error.empty())
      if (auto x = metric_of(r, metric)) v.push_back(*x);
  Mean m;
  m.count = long(v.size());
  if (v.empty()) return m;
  std::sort(v.begin(), v.end());
  for (double x : v) m.mean += x;
  m.mean /= double(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.stderr_ = std::sqrt(ss / double(v.size() - 1) / double(v.size()));
  }
  return m;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

// Mean metric of a < mean metric of b at lambda = at.
ReproPredicate ordering_at(std::size_t panel, const std::string& metric, double at, const std::string& a,
                           const std::string& b) {
  return [=](const std::vector<std::vector<ResultRow>>& rows) {
    ReproVerdict v;
    std::vector<ResultRow> sel;
    for (const auto& r : rows[panel])
      if (r.lambda == at) sel.push_back(r);
    const Mean ma = overall_mean(sel, a, metric), mb = overall_mean(sel, b, metric);
    if (ma.count == 0 || mb.count == 0) {
      v.detail = "no successful " + a + "/" + b + " rows at lambda = " + fmt(at);
      return v;
    }
    v.passed = ma.mean < mb.mean;
    v.stats = {{a + "_" + metric, ma.mean}, {b + "_" + metric, mb.mean}, {"difference", mb.mean - ma.mean}};
    v.detail = "mean " + metric + " " + a + " = " + fmt(ma.mean) + (v.passed ? " < " : " >= ") + b + " = " +
               fmt(mb.mean) + " at lambda = " + fmt(at);
    return v;
  };
}

// |min_lambda mean(a) - min_lambda mean(b)| / min_lambda mean(b) <= tol.
ReproPredicate gap_at_minimizer(std::size_t panel, const std::string& metric, const std::string& a,
                                const std::string& b, double tol) {
  return [=](const std::vector<std::vector<ResultRow>>& rows) {
    ReproVerdict v;
    auto best = [&](const std::string& est) {
      std::optional<std::pair<double, double>> out;  // (mean, lambda)
      for (const auto& [k, m] : means_by_point(rows[panel], est, metric))
        if (!out || m.mean < out->first) out = std::make_pair(m.mean, k.second);
      return out;
    };
    const auto ba = best(a), bb = best(b);
    if (!ba || !bb) {
      v.detail = "no successful " + a + "/" + b + " rows";
      return v;
    }
    const double gap = std::abs(ba->first - bb->first) / bb->first;
    v.passed = gap <= tol;
    v.stats = {{a + "_best_" + metric, ba->first},
               {a + "_best_lambda", ba->second},
               {b + "_best_" + metric, bb->first},
               {b + "_best_lambda", bb->second},
               {"relative_gap", gap}};
    v.detail = "relative gap " + fmt(gap) + (v.passed ? " <= " : " > ") + fmt(tol) + " between the best " + a +
               " and " + b + " mean " + metric;
    return v;
  };
}

// Relative gap of overall means (single grid point panel) <= tol.
ReproPredicate gap_overall(std::size_t panel, const std::string& metric, const std::string& a,
                           const std::string& b, double tol) {
  return [=](const std::vector<std::vector<ResultRow>>& rows) {
    ReproVerdict v;
    const Mean ma = overall_mean(rows[panel], a, metric), mb = overall_mean(rows[panel], b, metric);
    if (ma.count == 0 || mb.count == 0) {
      v.detail = "no successful " + a + "/" + b + " rows";
      return v;
    }
    const double gap = std::abs(ma.mean - mb.mean) / mb.mean;
    v.passed = gap <= tol;
    v.stats = {{a + "_" + metric, ma.mean}, {b + "_" + metric, mb.mean}, {"relative_gap", gap}};
    v.detail = "relative gap " + fmt(gap) + (v.passed ? " <= " : " > ") + fmt(tol) + " between mean " + metric +
               " of " + a + " (" + fmt(ma.mean) + ") and " + b + " (" + fmt(mb.mean) + ")";
    return v;
  };
}

// In every panel, the best accuracy over the cost grid of a is at least that of b.
ReproPredicate best_accuracy(const std::string& a, const std::string& b) {
  return [=](const std::vector<std::vector<ResultRow>>& rows) {
    ReproVerdict v;
    v.passed = true;
    for (std::size_t p = 0; p < rows.size(); ++p) {
      auto best = [&](const std::string& est) {
        double acc = -1.0;
        for (const auto& [k, m] : means_by_point(rows[p], est, "misclassification")) {
          (void)k;
          acc = std::max(acc, 1.0 - m.mean);
        }
        return acc;
      };
      const double aa = best(a), ab = best(b);
      if (aa < 0 || ab < 0) {
        v.passed = false;
        v.detail += "panel " + std::to_string(p) + ": no successful rows; ";
        continue;
      }
      v.stats.push_back({"panel" + std::to_string(p) + "_" + a + "_best_accuracy", aa});
      v.stats.push_back({"panel" + std::to_string(p) + "_" + b + "_best_accuracy", ab});
      if (aa < ab) v.passed = false;
      v.detail += "panel " + std::to_string(p) + ": " + a + " " + fmt(aa) + (aa >= ab ? " >= " : " < ") + b + " " +
                  fmt(ab) + "; ";
    }
    return v;
  };
}

ExperimentConfig dataset_config(const std::string& name, double ell, std::vector<Variant> est, std::uint64_t seed) {
  ExperimentConfig c;
  c.name = name;
  DataSource d;
  d.path = "data.csv";
  d.label = "class";
  d.positive = "1";
  c.dataset = d;
  c.loss = LossSpec::hinge();
  c.estimators = std::move(est);
  c.axis = SweepAxis::cost;
  c.values = kCostGrid;
  c.ell = ell;
  c.replicates = 50;
  c.base_seed = seed;
  c.gamma_rule = GammaRule::iwcv_grid;
  return c;
}

std::vector<ReproEntry> build_registry() {
  std::vector<ReproEntry> reg;
  const std::string sep = "-";

  {
    ReproEntry e;
    e.id = "Trivial";
    e.description = "harness smoke test without panels";
    e.predicate_text = "0 < 1";
    e.predicate = [](const std::vector<std::vector<ResultRow>>&) {
      return ReproVerdict{0 < 1, "0 < 1", {}};
    };
    e.budget_seconds = 10.0;
    reg.push_back(std::move(e));
  }
  {
    ReproEntry e;
    e.id = "Fig2";
    e.description = "KQR 1-d, uniformly bounded shift N(0,0.4) -> N(0.5,0.3), tau = 0.3, r = 1";
    const auto base = synthetic("Fig2", ScenarioId::kqr1d, ShiftCase::uniform, 20020);
    e.panels = sweep_panels("", base, kLambdaGrid, 1e-4);
    ExperimentConfig co = base;
    co.name = "Fig2-coincide";
    co.estimators = {V::unweighted, V::tirw_true};
    co.axis = SweepAxis::n;
    co.values = {2000};
    co.lambda_rule = LambdaRule::iwcv;
    co.lambda_grid = {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1};
    co.replicates = 50;
    e.panels.push_back({"coincide", co});
    e.predicate_text =
        "n = 2000, lambda by IWCV: |mse(tirw_true) - mse(unweighted)| / mse(unweighted) <= 0.25 "
        "(operationalization of the curves coinciding as n grows)";
    e.predicate = gap_overall(3, "mse", "tirw_true", "unweighted", 0.25);
    e.budget_seconds = 7200.0;
    reg.push_back(std::move(e));
  }
  {
    ReproEntry e;
    e.id = "Fig3";
    e.description = "KQR 1-d, moment bounded shift N(0,0.3) -> N(1,0.5), tau = 0.3, r = 1";
    e.panels = sweep_panels("", synthetic("Fig3", ScenarioId::kqr1d, ShiftCase::moment, 20030), kLambdaGrid, 1e-4);
    e.predicate_text = "mean mse(tirw_true) < mean mse(unweighted) at lambda = 1e-4";
    e.predicate = ordering_at(0, "mse", 1e-4, "tirw_true", "unweighted");
    e.budget_seconds = 3600.0;
    reg.push_back(std::move(e));
  }
  {
    ReproEntry e;
    e.id = "Fig4";
    e.description = "KSVM on a user-supplied labelled CSV, covariate split at shift levels 6, 8, 10";
    for (double ell : {6.0, 8.0, 10.0}) {
      auto c = dataset_config("Fig4-ell" + csv::format_double(ell), ell, {V::unweighted, V::irw_kliep, V::tirw_kliep},
                              20040);
      e.panels.push_back({"ell" + csv::format_double(ell), c});
    }
    e.predicate_text = "in every panel the best accuracy over C of tirw_kliep >= that of unweighted";
    e.predicate = best_accuracy("tirw_kliep", "unweighted");
    e.needs_dataset = true;
    e.budget_seconds = 7200.0;
    reg.push_back(std::move(e));
  }

  struct Fam {
    std::string id;
    ScenarioId sid;
    double lambda;
    std::string metric;
    std::string estimator;  // weighted estimator compared against unweighted
    std::vector<double> grid;
  };
  const Fam s1{"FigS1", ScenarioId::krr1d_s1, 1e-4, "mse", "tirw_true", kLambdaGrid};
  const Fam s2{"FigS2", ScenarioId::krr3d_s2, 5e-5, "mse", "tirw_true", kLambdaGridS};
  for (const Fam& f : {s1, s2}) {
    ReproEntry e;
    e.id = f.id;
    e.description = std::string(to_string(f.sid)) + ": uniformly bounded (top) and moment bounded (bottom) shifts";
    const std::uint64_t seed = f.id == "FigS1" ? 21010 : 21020;
    for (ShiftCase c : {ShiftCase::uniform, ShiftCase::moment}) {
      const auto base = synthetic(f.id + "-" + std::string(to_string(c)), f.sid, c, seed + (c == ShiftCase::moment));
      for (auto& p : sweep_panels(std::string(to_string(c)) + sep, base, f.grid, f.lambda)) e.panels.push_back(p);
    }
    e.predicate_text = "moment bounded case: mean mse(tirw_true) < mean mse(unweighted) at lambda = " + fmt(f.lambda);
    e.predicate = ordering_at(3, f.metric, f.lambda, f.estimator, "unweighted");
    e.budget_seconds = 7200.0;
    reg.push_back(std::move(e));
  }

  // KQR families over tau in {0.3, 0.5, 0.7} and r in {0, 1}.
  for (ScenarioId sid : {ScenarioId::kqr1d, ScenarioId::kqr3d_s4}) {
    for (ShiftCase c : {ShiftCase::uniform, ShiftCase::moment}) {
      ReproEntry e;
      const std::string fam = sid == ScenarioId::kqr1d ? "FigS3" : "FigS4";
      e.id = fam + "-" + std::string(to_string(c));
      e.description = std::string(to_string(sid)) + ", " + std::string(to_string(c)) +
                      " case, tau in {0.3, 0.5, 0.7}, r in {0, 1}";
      std::uint64_t seed = (sid == ScenarioId::kqr1d ? 21030 : 21040) * 10 + (c == ShiftCase::moment ? 5 : 0);
      for (double tau : {0.3, 0.5, 0.7})
        for (double r : {0.0, 1.0}) {
          auto base = synthetic(e.id + "-tau" + csv::format_double(tau) + "-r" + csv::format_double(r), sid, c, seed++);
          base.scenario->tau = tau;
          base.scenario->r = r;
          if (sid == ScenarioId::kqr1d && r == 0.0) base.scenario->homoscedastic = true;
          ExperimentConfig lam = base;
          lam.axis = SweepAxis::lambda;
          lam.values = kLambdaGrid;
          lam.name = base.name + "-lambda";
          e.panels.push_back({"tau" + csv::format_double(tau) + sep + "r" + csv::format_double(r), lam});
        }
      if (c == ShiftCase::moment) {
        e.predicate_text = "every panel: mean mse(tirw_true) < mean mse(unweighted) at lambda = 1e-4";
        const std::size_t panels = e.panels.size();
        e.predicate = [panels](const std::vector<std::vector<ResultRow>>& rows) {
          ReproVerdict v;
          v.passed = true;
          for (std::size_t p = 0; p < panels; ++p) {
            const ReproVerdict one = ordering_at(p, "mse", 1e-4, "tirw_true", "unweighted")(rows);
            v.passed = v.passed && one.passed;
            v.detail += "panel " + std::to_string(p) + ": " + one.detail + "; ";
            for (const auto& s : one.stats) v.stats.push_back({"panel" + std::to_string(p) + "_" + s.first, s.second});
          }
          return v;
        };
      } else {
        e.predicate_text =
            "every panel: relative gap between the best-lambda mean mse of tirw_true and unweighted <= 0.25 "
            "(operationalization of a negligible gap near the optimal lambda)";
        const std::size_t panels = e.panels.size();
        e.predicate = [panels](const std::vector<std::vector<ResultRow>>& rows) {
          ReproVerdict v;
          v.passed = true;
          for (std::size_t p = 0; p < panels; ++p) {
            const ReproVerdict one = gap_at_minimizer(p, "mse", "tirw_true", "unweighted", 0.25)(rows);
            v.passed = v.passed && one.passed;
            v.detail += "panel " + std::to_string(p) + ": " + one.detail + "; ";
            for (const auto& s : one.stats) v.stats.push_back({"panel" + std::to_string(p) + "_" + s.first, s.second});
          }
          return v;
        };
      }
      e.budget_seconds = 7200.0;
      reg.push_back(std::move(e));
    }
  }

  for (ShiftCase c : {ShiftCase::uniform, ShiftCase::moment}) {
    ReproEntry e;
    e.id = "FigS5-" + std::string(to_string(c));
    e.description = "KLR 3-d, " + std::string(to_string(c)) + " case";
    auto base = synthetic(e.id, ScenarioId::klr3d_s5, c, c == ShiftCase::uniform ? 21050 : 21055);
    e.panels = sweep_panels("", base, kLambdaGridS, 5e-5);
    if (c == ShiftCase::moment) {
      e.predicate_text = "mean misclassification(tirw_true) < mean misclassification(unweighted) at lambda = 5e-5";
      e.predicate = ordering_at(0, "misclassification", 5e-5, "tirw_true", "unweighted");
    } else {
      e.predicate_text =
          "relative gap between the best-lambda mean misclassification of tirw_true and unweighted <= 0.25 "
          "(operationalization)";
      e.predicate = gap_at_minimizer(0, "misclassification", "tirw_true", "unweighted", 0.25);
    }
    e.budget_seconds = 7200.0;
    reg.push_back(std::move(e));
  }

  for (const char* name : {"Ionosphere", "DryBean", "Magic04", "Authentication"}) {
    ReproEntry e;
    e.id = std::string("Table2-") + name;
    e.description = std::string("KSVM accuracy over C on the user-supplied ") + name + " CSV, shift level 8";
    e.panels.push_back({"cost", dataset_config(e.id, 8.0, {V::unweighted, V::tirw_kliep}, 22000 + reg.size())});
    e.predicate_text = "best accuracy over C of tirw_kliep >= that of unweighted";
    e.predicate = best_accuracy("tirw_kliep", "unweighted");
    e.needs_dataset = true;
    e.budget_seconds = 7200.0;
    reg.push_back(std::move(e));
  }
  return reg;
}

}  // namespace

const std::vector<ReproEntry>& repro_registry() {
  static const std::vector<ReproEntry> reg = build_registry();
  return reg;
}

const ReproEntry& find_repro_entry(const std::string& id) {
  std::string known;
  for (const auto& e : repro_registry()) {
    if (e.id == id) return e;
    known += (known.empty() ? "" : ", ") + e.id;
  }
  throw std::invalid_argument("unknown repro entry '" + id + "' (known: " + known + ")");
}

std::vector<ReproPanel> resolve_panels(const ReproEntry& entry, const ReproOptions& opt) {
  std::vector<ReproPanel> out = entry.panels;
  for (auto& p : out) {
    if (opt.replicates) p.config.replicates = *opt.replicates;
    if (p.config.dataset && opt.data) p.config.dataset = opt.data;
    p.config = p.config.resolved();
  }
  return out;
}

ReproOutcome verify_repro(const ReproEntry& entry, const ReproOptions& opt) {
  ReproOutcome out;
  out.id = entry.id;
  if (opt.replicates && *opt.replicates < 1) throw std::invalid_argument("repro: replicates must be >= 1");
  if (entry.needs_dataset && !opt.data) {
    out.skipped = true;
    out.detail = "skipped: entry needs a labelled CSV (--data, --label, --positive)";
    return out;
  }
  out.panels = resolve_panels(entry, opt);
  const double budget = opt.budget_seconds.value_or(entry.budget_seconds);
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& p : out.panels) out.rows.push_back(run_experiment(p.config, opt.threads));
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const ReproVerdict v = entry.predicate(out.rows);
  out.passed = v.passed;
  out.detail = v.detail;
  out.stats = v.stats;
  if (out.seconds > budget) {
    out.passed = false;
    out.detail = "budget exceeded: " + fmt(out.seconds) + " s > " + fmt(budget) + " s; " + out.detail;
  }
  return out;
}

}  // namespace kcs
