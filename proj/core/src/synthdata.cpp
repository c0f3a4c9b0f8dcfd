#include "kcs/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "kcs/csv.hpp"

namespace kcs {

namespace {

enum Stream : std::uint64_t { kSourceX = 1, kTargetX = 2, kSourceNoise = 3, kTargetNoise = 4, kSplit = 5 };

double draw_beta(Rng& rng, double a, double b) {
  std::gamma_distribution<double> ga(a, 1.0), gb(b, 1.0);
  const double u = ga(rng);
  const double v = gb(rng);
  return u / (u + v);
}

void draw_covariate(const Scenario& s, const DensitySpec& d, Rng& rng, Points& X, Eigen::Index i) {
  auto row = X.row(i);
  if (d.family == DensityFamily::normal) {
    std::normal_distribution<double> nd(d.p1, std::sqrt(d.p2));
    row[0] = nd(rng);
  } else {
    // Beta draws equal to 0 or 1 in floating point are redrawn to stay in the open support.
    double v;
    do v = draw_beta(rng, d.p1, d.p2);
    while (!(v > 0.0 && v < 1.0));
    row[0] = v;
  }
  for (int j = 1; j < s.dim; ++j) row[j] = uniform01(rng);
}

double noise_offset(const Scenario& s) {
  if (s.id == ScenarioId::kqr1d) return boost::math::quantile(boost::math::normal_distribution<double>(), s.tau);
  if (s.id == ScenarioId::kqr3d_s4)
    return boost::math::quantile(boost::math::students_t_distribution<double>(s.t_df), s.tau);
  return 0.0;
}

}  // namespace

std::string_view to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::kqr1d: return "kqr1d";
    case ScenarioId::krr1d_s1: return "krr1d_s1";
    case ScenarioId::krr3d_s2: return "krr3d_s2";
    case ScenarioId::kqr3d_s4: return "kqr3d_s4";
    case ScenarioId::klr3d_s5: return "klr3d_s5";
  }
  return "unknown";
}

std::string_view to_string(ShiftCase c) { return c == ShiftCase::uniform ? "uniform" : "moment"; }

ScenarioId parse_scenario_id(std::string_view name) {
  for (auto id : {ScenarioId::kqr1d, ScenarioId::krr1d_s1, ScenarioId::krr3d_s2, ScenarioId::kqr3d_s4,
                  ScenarioId::klr3d_s5})
    if (name == to_string(id)) return id;
  throw std::invalid_argument("unknown scenario '" + std::string(name) +
                              "' (kqr1d, krr1d_s1, krr3d_s2, kqr3d_s4, klr3d_s5 accepted)");
}

ShiftCase parse_shift_case(std::string_view name) {
  if (name == "uniform") return ShiftCase::uniform;
  if (name == "moment") return ShiftCase::moment;
  throw std::invalid_argument("unknown shift case '" + std::string(name) + "' (uniform, moment accepted)");
}

LossSpec Scenario::natural_loss() const {
  switch (id) {
    case ScenarioId::kqr1d:
    case ScenarioId::kqr3d_s4: return LossSpec::check(tau);
    case ScenarioId::krr1d_s1:
    case ScenarioId::krr3d_s2: return LossSpec::squared();
    case ScenarioId::klr3d_s5: return LossSpec::logistic();
  }
  return LossSpec::squared();
}

Scenario Scenario::without_shift() const {
  Scenario s = *this;
  s.target_density = s.source_density;
  return s;
}

Scenario make_scenario(ScenarioId id, ShiftCase c) {
  const bool uni = c == ShiftCase::uniform;
  Scenario s;
  s.id = id;
  s.shift_case = c;
  switch (id) {
    case ScenarioId::kqr1d:
      s.dim = 1;
      s.source_density = uni ? DensitySpec::normal(0.0, 0.4) : DensitySpec::normal(0.0, 0.3);
      s.target_density = uni ? DensitySpec::normal(0.5, 0.3) : DensitySpec::normal(1.0, 0.5);
      s.r = 1.0;
      s.sigma = 0.3;
      s.tau = 0.3;
      break;
    case ScenarioId::krr1d_s1:
      s.dim = 1;
      s.source_density = uni ? DensitySpec::normal(0.0, 0.5) : DensitySpec::normal(0.0, 0.3);
      s.target_density = uni ? DensitySpec::normal(0.8, 0.3) : DensitySpec::normal(1.5, 0.5);
      s.sigma = 0.05;
      s.r = 0.0;
      break;
    case ScenarioId::krr3d_s2:
      s.dim = 3;
      s.source_density = uni ? DensitySpec::beta(2.5, 1.5) : DensitySpec::beta(4.0, 1.0);
      s.target_density = uni ? DensitySpec::beta(3.0, 4.0) : DensitySpec::beta(3.0, 6.0);
      s.sigma = 0.3;
      s.r = 0.0;
      break;
    case ScenarioId::kqr3d_s4:
      s.dim = 3;
      s.source_density = uni ? DensitySpec::beta(2.5, 1.5) : DensitySpec::beta(5.5, 1.5);
      s.target_density = DensitySpec::beta(3.0, 6.0);
      s.sigma = 0.3;
      s.r = 1.0;
      s.tau = 0.3;
      break;
    case ScenarioId::klr3d_s5:
      s.dim = 3;
      s.source_density = uni ? DensitySpec::beta(2.5, 2.0) : DensitySpec::beta(4.0, 1.0);
      s.target_density = uni ? DensitySpec::beta(3.0, 4.0) : DensitySpec::beta(3.0, 6.0);
      s.sigma = 0.0;
      s.r = 0.0;
      break;
  }
  return s;
}

Scenario homoscedastic(Scenario s) {
  if (s.id == ScenarioId::kqr1d) {
    s.r = 0.0;
    s.sigma = 0.5;
  } else if (s.id == ScenarioId::kqr3d_s4) {
    s.r = 0.0;
    s.sigma = 0.3;
  }
  return s;
}

ShiftClass published_class(const Scenario& s) {
  if (!s.shifted() || s.shift_case == ShiftCase::uniform) return ShiftClass::uniformly_bounded;
  return ShiftClass::moment_bounded_only;
}

double scenario_truth(const Scenario& s, PointRef x) {
  using std::numbers::pi;
  switch (s.id) {
    case ScenarioId::kqr1d:
      return std::sin(pi * x[0]);
    case ScenarioId::krr1d_s1:
      return x[0] == 0.0 ? 0.0 : std::exp(-1.0 / (x[0] * x[0]));
    case ScenarioId::krr3d_s2:
      return std::sin(2.0 * pi * x[0]) - std::exp(-x[1] * x[1] - x[2] * x[2]);
    case ScenarioId::kqr3d_s4:
      return std::sin(1.5 * pi * x[0]) - std::exp(-x[1] * x[1] - x[2] * x[2]);
    case ScenarioId::klr3d_s5:
      return -x[0] * x[0] + 3.0 * std::sin(3.0 * pi * x[0]) + std::exp(x[1] * x[1] - x[2] * x[2]);
  }
  return 0.0;
}

double sample_response(const Scenario& s, PointRef x, Rng& noise_rng) {
  const double f0 = scenario_truth(s, x);
  switch (s.id) {
    case ScenarioId::kqr1d: {
      std::normal_distribution<double> nd(0.0, 1.0);
      const double e = nd(noise_rng);
      const double scale = 1.0 + s.r * (x[0] - 0.5) * (x[0] - 0.5);
      return f0 + scale * s.sigma * (e - noise_offset(s));
    }
    case ScenarioId::krr1d_s1:
    case ScenarioId::krr3d_s2: {
      std::normal_distribution<double> nd(0.0, 1.0);
      return f0 + s.sigma * nd(noise_rng);
    }
    case ScenarioId::kqr3d_s4: {
      std::student_t_distribution<double> td(s.t_df);
      const double e = td(noise_rng);
      return f0 + (1.0 + s.r * x[0]) * s.sigma * (e - noise_offset(s));
    }
    case ScenarioId::klr3d_s5: {
      const double p = 1.0 / (1.0 + std::exp(-f0));
      return uniform01(noise_rng) < p ? 1.0 : -1.0;
    }
  }
  return f0;
}

Dataset generate(const Scenario& s, Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  if (n < 1 || m < 1) throw std::invalid_argument("generate: n and m must be >= 1");
  if (s.id == ScenarioId::kqr1d || s.id == ScenarioId::kqr3d_s4)
    if (!(s.tau > 0.0 && s.tau < 1.0)) throw std::invalid_argument("generate: tau must lie in (0, 1)");

  Dataset d;
  d.source_x.resize(n, s.dim);
  d.target_x.resize(m, s.dim);
  d.source_y.resize(n);
  Vector ty(m);

  Rng sx(derive_seed(seed, kSourceX)), tx(derive_seed(seed, kTargetX));
  Rng sn(derive_seed(seed, kSourceNoise)), tn(derive_seed(seed, kTargetNoise));
  for (Eigen::Index i = 0; i < n; ++i) draw_covariate(s, s.source_density, sx, d.source_x, i);
  for (Eigen::Index i = 0; i < m; ++i) draw_covariate(s, s.target_density, tx, d.target_x, i);
  for (Eigen::Index i = 0; i < n; ++i) d.source_y[i] = sample_response(s, d.source_x.row(i).transpose(), sn);
  for (Eigen::Index i = 0; i < m; ++i) ty[i] = sample_response(s, d.target_x.row(i).transpose(), tn);
  d.target_y = std::move(ty);

  d.truth = Truth{[s](PointRef x) { return scenario_truth(s, x); },
                  RatioModel::analytic(s.source_density, s.target_density)};
  return d;
}

LabeledTable load_csv(const std::string& path, const std::string& label_column, const std::string& positive_label,
                      bool standardize) {
  const csv::Table t = csv::read_file(path);
  const std::size_t lc = t.column(label_column);
  if (t.rows.empty()) throw Error("load_csv: '" + path + "' has no data rows");

  LabeledTable out;
  std::vector<std::size_t> fcols;
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (j != lc) {
      fcols.push_back(j);
      out.feature_names.push_back(t.header[j]);
    }
  if (fcols.empty()) throw Error("load_csv: '" + path + "' has no feature columns");

  const auto N = Eigen::Index(t.rows.size());
  out.x.resize(N, Eigen::Index(fcols.size()));
  out.y.resize(N);
  std::optional<std::string> negative;
  for (Eigen::Index i = 0; i < N; ++i) {
    const auto& row = t.rows[std::size_t(i)];
    for (std::size_t j = 0; j < fcols.size(); ++j) {
      const std::string& field = row[fcols[j]];
      if (field.empty() || field == "?" || field == "NA" || field == "NaN")
        throw Error("load_csv: missing value at row " + std::to_string(i + 1) + ", column '" + t.header[fcols[j]] + "'");
      try {
        out.x(i, Eigen::Index(j)) = csv::parse_double(field);
      } catch (const Error&) {
        throw Error("load_csv: non-numeric value '" + field + "' at row " + std::to_string(i + 1) + ", column '" +
                    t.header[fcols[j]] + "'");
      }
    }
    const std::string& label = row[lc];
    if (label == positive_label) {
      out.y[i] = 1.0;
    } else if (!negative || *negative == label) {
      negative = label;
      out.y[i] = -1.0;
    } else {
      throw Error("load_csv: unknown label value '" + label + "' at row " + std::to_string(i + 1) +
                  " (expected '" + positive_label + "' or '" + *negative + "')");
    }
  }

  if (standardize && N > 1) {
    for (Eigen::Index j = 0; j < out.x.cols(); ++j) {
      const double mean = out.x.col(j).mean();
      const double var = (out.x.col(j).array() - mean).square().sum() / double(N - 1);
      const double sd = var > 0.0 ? std::sqrt(var) : 1.0;
      out.x.col(j) = (out.x.col(j).array() - mean) / sd;
    }
  }
  return out;
}

std::pair<LabeledTable, LabeledTable> covariate_split(const LabeledTable& table, double ell, std::uint64_t seed) {
  if (table.x.rows() == 0 || table.x.cols() == 0) throw std::invalid_argument("covariate_split: empty table");
  if (!(ell > 0.0)) throw std::invalid_argument("covariate_split: ell must be positive");
  const double c = table.x.col(0).minCoeff();
  Rng rng(derive_seed(seed, kSplit));
  std::vector<Eigen::Index> src, tgt;
  for (Eigen::Index i = 0; i < table.x.rows(); ++i) {
    const double d = table.x(i, 0) - c;
    const double p = std::min(1.0, d * d / ell);
    (uniform01(rng) < p ? tgt : src).push_back(i);
  }
  if (src.empty() || tgt.empty()) {
    std::ostringstream os;
    os << "covariate_split: degenerate split with ell = " << ell << " (" << src.size() << " source, " << tgt.size()
       << " target rows); try a " << (tgt.empty() ? "smaller" : "larger") << " ell";
    throw Error(os.str());
  }
  auto take = [&](const std::vector<Eigen::Index>& rows) {
    LabeledTable t;
    t.feature_names = table.feature_names;
    t.x.resize(Eigen::Index(rows.size()), table.x.cols());
    t.y.resize(Eigen::Index(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
      t.x.row(Eigen::Index(r)) = table.x.row(rows[r]);
      t.y[Eigen::Index(r)] = table.y[rows[r]];
    }
    return t;
  };
  return {take(src), take(tgt)};
}

Dataset to_dataset(const LabeledTable& source, const LabeledTable& target) {
  Dataset d;
  d.source_x = source.x;
  d.source_y = source.y;
  d.target_x = target.x;
  d.target_y = target.y;
  d.validate();
  return d;
}

}  // namespace kcs
