#include "kcs/serialize.hpp"

#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace kcs {

namespace detail {

json parse(std::string_view text) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(std::string("json: ") + e.what());
  }
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v[i]));
  return a;
}

Vector vector_from(const json& j, const char* what) {
  if (!j.is_array()) throw Error(std::string("json: field '") + what + "' must be an array");
  Vector v(Eigen::Index(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[Eigen::Index(i)] = get_number(j[i], what);
  return v;
}

json points_json(const Points& x) {
  json a = json::array();
  for (Eigen::Index i = 0; i < x.rows(); ++i) a.push_back(vector_json(x.row(i).transpose()));
  return a;
}

Points points_from(const json& j, const char* what) {
  if (!j.is_array()) throw Error(std::string("json: field '") + what + "' must be an array of rows");
  if (j.empty()) return Points(0, 0);
  const auto d = Eigen::Index(j[0].size());
  Points x(Eigen::Index(j.size()), d);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vector row = vector_from(j[i], what);
    if (row.size() != d) throw Error(std::string("json: ragged rows in '") + what + "'");
    x.row(Eigen::Index(i)) = row.transpose();
  }
  return x;
}

json kernel_json(const KernelSpec& k) {
  json j;
  j["family"] = std::string(to_string(k.family));
  switch (k.family) {
    case KernelFamily::gaussian: j["bandwidth"] = number(k.bandwidth); break;
    case KernelFamily::polynomial:
      j["degree"] = k.degree;
      j["offset"] = number(k.offset);
      break;
    case KernelFamily::linear: break;
  }
  return j;
}

KernelSpec kernel_from(const json& j) {
  KernelSpec k;
  try {
    k.family = parse_kernel_family(string_field(j, "family"));
  } catch (const std::invalid_argument& e) {
    throw Error(e.what());
  }
  if (k.family == KernelFamily::gaussian) k.bandwidth = number_field(j, "bandwidth");
  if (k.family == KernelFamily::polynomial) {
    k.degree = field(j, "degree").get<int>();
    k.offset = number_field(j, "offset");
  }
  return k;
}

json loss_json(const LossSpec& l) {
  json j;
  j["kind"] = std::string(to_string(l.kind));
  if (l.tau) j["tau"] = number(*l.tau);
  if (l.huber_delta) j["delta"] = number(*l.huber_delta);
  return j;
}

LossSpec loss_from(const json& j) {
  LossSpec l;
  if (j.is_string()) {
    l.kind = parse_loss_kind(j.get<std::string>());
  } else {
    l.kind = parse_loss_kind(string_field(j, "kind"));
    if (j.contains("tau")) l.tau = number_field(j, "tau");
    if (j.contains("delta")) l.huber_delta = number_field(j, "delta");
  }
  if (l.kind == LossKind::check && !l.tau) l.tau = 0.5;
  if (l.kind == LossKind::huber && !l.huber_delta) l.huber_delta = 1.0;
  return l;
}

json solver_json(const SolverOptions& s) {
  json j;
  j["tol"] = number(s.tol);
  j["max_iter"] = s.max_iter;
  return j;
}

SolverOptions solver_from(const json& j) {
  SolverOptions s;
  if (j.contains("tol")) s.tol = number_field(j, "tol");
  if (j.contains("max_iter")) s.max_iter = field(j, "max_iter").get<long>();
  return s;
}

json fit_config_json(const FitConfig& cfg) {
  json j;
  j["loss"] = loss_json(cfg.loss);
  j["kernel"] = kernel_json(cfg.kernel);
  j["lambda"] = number(cfg.lambda);
  j["weighting"] = std::string(to_string(cfg.weighting));
  if (cfg.truncation_level) j["truncation_level"] = number(*cfg.truncation_level);
  j["solver"] = solver_json(cfg.solver);
  return j;
}

FitConfig fit_config_from(const json& j) {
  FitConfig cfg;
  cfg.loss = loss_from(field(j, "loss"));
  cfg.kernel = kernel_from(field(j, "kernel"));
  cfg.lambda = number_field(j, "lambda");
  if (j.contains("weighting")) cfg.weighting = parse_weighting(string_field(j, "weighting"));
  if (j.contains("truncation_level") && !j["truncation_level"].is_null())
    cfg.truncation_level = number_field(j, "truncation_level");
  if (j.contains("solver")) cfg.solver = solver_from(j["solver"]);
  return cfg;
}

}  // namespace detail

using namespace detail;

namespace {

template <class F>
auto wrap(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(std::string("json: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw Error(std::string("json: ") + e.what());
  }
}

void check_header(const json& j, const char* format) {
  if (string_field(j, "format") != format) throw Error(std::string("json: expected format '") + format + "'");
  if (field(j, "version").get<int>() != 1)
    throw Error("json: unsupported " + std::string(format) + " version " + field(j, "version").dump());
}

}  // namespace

std::string to_json(const KernelSpec& k) { return kernel_json(k).dump(); }
std::string to_json(const LossSpec& l) { return loss_json(l).dump(); }

std::string to_json(const FittedModel& model) {
  json j;
  j["format"] = "kcs.model";
  j["version"] = 1;
  j["kernel"] = kernel_json(model.kernel);
  j["loss"] = loss_json(model.loss);
  j["alpha"] = vector_json(model.alpha);
  j["bias"] = model.bias ? number(*model.bias) : json(nullptr);
  j["train_x"] = points_json(model.train_x);
  j["weights"] = vector_json(model.weights_used);
  j["diagnostics"] = {{"iterations", model.diagnostics.iterations},
                      {"kkt_residual", number(model.diagnostics.kkt_residual)},
                      {"objective", number(model.diagnostics.objective)}};
  return j.dump(2) + "\n";
}

FittedModel model_from_json(std::string_view text) {
  return wrap([&] {
    const json j = parse(text);
    check_header(j, "kcs.model");
    FittedModel m;
    m.kernel = kernel_from(field(j, "kernel"));
    m.loss = loss_from(field(j, "loss"));
    m.alpha = vector_from(field(j, "alpha"), "alpha");
    if (j.contains("bias") && !j["bias"].is_null()) m.bias = number_field(j, "bias");
    m.train_x = points_from(field(j, "train_x"), "train_x");
    if (m.train_x.rows() != m.alpha.size()) throw Error("json: alpha and train_x lengths differ");
    if (j.contains("weights")) m.weights_used = vector_from(j["weights"], "weights");
    if (j.contains("diagnostics")) {
      const json& d = j["diagnostics"];
      m.diagnostics.iterations = field(d, "iterations").get<long>();
      m.diagnostics.kkt_residual = number_field(d, "kkt_residual");
      m.diagnostics.objective = number_field(d, "objective");
    }
    m.kernel.validate();
    m.loss.validate();
    return m;
  });
}

namespace {

json density_json(const DensitySpec& d) {
  json j;
  j["family"] = std::string(to_string(d.family));
  if (d.family == DensityFamily::normal) {
    j["mean"] = number(d.p1);
    j["variance"] = number(d.p2);
  } else {
    j["a"] = number(d.p1);
    j["b"] = number(d.p2);
  }
  return j;
}

DensitySpec density_from(const json& j) {
  const auto fam = string_field(j, "family");
  if (fam == "normal") return DensitySpec::normal(number_field(j, "mean"), number_field(j, "variance"));
  if (fam == "beta") return DensitySpec::beta(number_field(j, "a"), number_field(j, "b"));
  throw Error("json: unknown density family '" + fam + "'");
}

}  // namespace

std::string to_json(const RatioModel& ratio) {
  json j;
  j["format"] = "kcs.ratio";
  j["version"] = 1;
  j["kind"] = std::string(to_string(ratio.kind));
  if (ratio.kind == RatioKind::analytic) {
    j["source"] = density_json(ratio.source);
    j["target"] = density_json(ratio.target);
  } else if (ratio.kind == RatioKind::kliep) {
    j["kernel"] = kernel_json(ratio.kernel);
    j["basis"] = points_json(ratio.basis);
    j["coeffs"] = vector_json(ratio.coeffs);
  }
  j["gamma"] = ratio.truncation ? number(*ratio.truncation) : json(nullptr);
  return j.dump(2) + "\n";
}

RatioModel ratio_from_json(std::string_view text) {
  return wrap([&] {
    const json j = parse(text);
    check_header(j, "kcs.ratio");
    const auto kind = string_field(j, "kind");
    RatioModel r;
    if (kind == "analytic")
      r = RatioModel::analytic(density_from(field(j, "source")), density_from(field(j, "target")));
    else if (kind == "kliep")
      r = RatioModel::kliep(points_from(field(j, "basis"), "basis"), vector_from(field(j, "coeffs"), "coeffs"),
                            kernel_from(field(j, "kernel")));
    else if (kind == "constant_one")
      r = RatioModel::constant_one();
    else
      throw Error("json: unknown ratio kind '" + kind + "'");
    if (j.contains("gamma") && !j["gamma"].is_null()) r = r.truncated(number_field(j, "gamma"));
    return r;
  });
}

std::string to_json(const FitConfig& cfg) { return fit_config_json(cfg).dump(2) + "\n"; }

FitConfig fit_config_from_json(std::string_view text) {
  return wrap([&] {
    FitConfig cfg = fit_config_from(parse(text));
    cfg.validate();
    return cfg;
  });
}

std::vector<FitConfig> fit_grid_from_json(std::string_view text) {
  return wrap([&] {
    const json j = parse(text);
    if (!j.is_array() || j.empty()) throw Error("json: grid must be a nonempty array of fit configurations");
    std::vector<FitConfig> grid;
    for (const auto& e : j) {
      grid.push_back(fit_config_from(e));
      grid.back().validate();
    }
    return grid;
  });
}

std::string to_json(const SelectionReport& report) {
  json j;
  j["format"] = "kcs.selection";
  j["version"] = 1;
  json cands = json::array();
  for (std::size_t i = 0; i < report.grid.size(); ++i) {
    json c;
    c["config"] = fit_config_json(report.grid[i]);
    c["risk"] = number(report.risks[i]);
    c["error"] = report.failures[i].empty() ? json(nullptr) : json(report.failures[i]);
    cands.push_back(std::move(c));
  }
  j["candidates"] = std::move(cands);
  j["chosen"] = report.chosen;
  j["chosen_config"] = fit_config_json(report.grid[report.chosen]);
  json folds = json::array();
  for (double r : report.chosen_fold_risks) folds.push_back(number(r));
  j["chosen_fold_risks"] = std::move(folds);
  return j.dump(2) + "\n";
}

std::string scenario_to_json(const Scenario& s, Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
  json j;
  j["format"] = "kcs.scenario";
  j["version"] = 1;
  j["scenario"] = std::string(to_string(s.id));
  j["case"] = std::string(to_string(s.shift_case));
  j["dim"] = s.dim;
  j["source_density"] = density_json(s.source_density);
  j["target_density"] = density_json(s.target_density);
  j["sigma"] = number(s.sigma);
  j["r"] = number(s.r);
  if (s.id == ScenarioId::kqr1d || s.id == ScenarioId::kqr3d_s4) j["tau"] = number(s.tau);
  if (s.id == ScenarioId::kqr3d_s4) j["t_df"] = number(s.t_df);
  j["loss"] = loss_json(s.natural_loss());
  j["n"] = n;
  j["m"] = m;
  j["seed"] = seed;
  const ShiftDiagnostics d = classify_shift(s.source_density, s.target_density);
  j["published_class"] = std::string(to_string(published_class(s)));
  j["classification"] = std::string(to_string(d.classification));
  j["alpha_bound"] = d.alpha_bound ? number(*d.alpha_bound) : json(nullptr);
  j["beta_sq"] = d.beta_sq ? number(*d.beta_sq) : json(nullptr);
  return j.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace kcs
