#include "kcs/ratio.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "kcs/random.hpp"

namespace kcs {

namespace {

double log_beta_fn(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double log_pdf(const DensitySpec& d, double x) {
  if (d.family == DensityFamily::normal) {
    const double z = x - d.p1;
    return -0.5 * std::log(2.0 * std::numbers::pi * d.p2) - z * z / (2.0 * d.p2);
  }
  return (d.p1 - 1.0) * std::log(x) + (d.p2 - 1.0) * std::log1p(-x) - log_beta_fn(d.p1, d.p2);
}

// x^p (1 - x)^q maximized over (0, 1) for p, q >= 0, in logs.
double log_max_power_product(double p, double q) {
  if (p == 0.0 && q == 0.0) return 0.0;
  auto xlogx = [](double v) { return v > 0.0 ? v * std::log(v) : 0.0; };
  return xlogx(p) + xlogx(q) - xlogx(p + q);
}

}  // namespace

DensitySpec DensitySpec::normal(double mean, double variance) {
  DensitySpec d{DensityFamily::normal, mean, variance};
  d.validate();
  return d;
}

DensitySpec DensitySpec::beta(double a, double b) {
  DensitySpec d{DensityFamily::beta, a, b};
  d.validate();
  return d;
}

void DensitySpec::validate() const {
  if (family == DensityFamily::normal && !(p2 > 0.0))
    throw std::invalid_argument("normal density needs a positive variance");
  if (family == DensityFamily::beta && !(p1 > 0.0 && p2 > 0.0))
    throw std::invalid_argument("beta density needs positive shape parameters");
}

double DensitySpec::pdf(double x) const {
  if (!in_support(x)) return 0.0;
  return std::exp(log_pdf(*this, x));
}

bool DensitySpec::in_support(double x) const {
  if (family == DensityFamily::normal) return std::isfinite(x);
  return x > 0.0 && x < 1.0;
}

std::string_view to_string(DensityFamily family) {
  return family == DensityFamily::normal ? "normal" : "beta";
}

double analytic_ratio(const DensitySpec& source, const DensitySpec& target, PointRef x) {
  if (x.size() < 1) throw std::invalid_argument("analytic_ratio: empty point");
  const double x0 = x[0];
  if (!source.in_support(x0)) {
    std::ostringstream os;
    os << "analytic_ratio: x0 = " << x0 << " is outside the source support";
    throw std::invalid_argument(os.str());
  }
  if (!target.in_support(x0)) return 0.0;
  if (source == target) return 1.0;
  return std::exp(log_pdf(target, x0) - log_pdf(source, x0));
}

std::string_view to_string(RatioKind kind) {
  switch (kind) {
    case RatioKind::analytic: return "analytic";
    case RatioKind::kliep: return "kliep";
    case RatioKind::constant_one: return "constant_one";
  }
  return "unknown";
}

RatioModel RatioModel::constant_one() { return {}; }

RatioModel RatioModel::analytic(const DensitySpec& source, const DensitySpec& target) {
  source.validate();
  target.validate();
  RatioModel m;
  m.kind = RatioKind::analytic;
  m.source = source;
  m.target = target;
  return m;
}

RatioModel RatioModel::kliep(Points basis, Vector coeffs, const KernelSpec& kernel) {
  if (basis.rows() != coeffs.size() || basis.rows() == 0)
    throw std::invalid_argument("kliep ratio: basis/coefficient size mismatch");
  if ((coeffs.array() < 0.0).any())
    throw std::invalid_argument("kliep ratio: coefficients must be nonnegative");
  RatioModel m;
  m.kind = RatioKind::kliep;
  m.basis = std::move(basis);
  m.coeffs = std::move(coeffs);
  m.kernel = kernel;
  return m;
}

RatioModel RatioModel::truncated(double gamma) const {
  if (!(gamma > 0.0)) throw std::invalid_argument("truncation level must be positive");
  RatioModel m = *this;
  m.truncation = gamma;
  return m;
}

double ratio_raw(const RatioModel& model, PointRef x) {
  switch (model.kind) {
    case RatioKind::constant_one: return 1.0;
    case RatioKind::analytic: return analytic_ratio(model.source, model.target, x);
    case RatioKind::kliep: {
      if (x.size() != model.basis.cols())
        throw std::invalid_argument("kliep ratio: dimension mismatch");
      double v = 0.0;
      for (Eigen::Index k = 0; k < model.basis.rows(); ++k)
        if (model.coeffs[k] != 0.0) v += model.coeffs[k] * eval(model.kernel, model.basis.row(k).transpose(), x);
      return v;
    }
  }
  return 1.0;
}

double ratio_eval(const RatioModel& model, PointRef x) {
  const double v = ratio_raw(model, x);
  return model.truncation ? std::min(v, *model.truncation) : v;
}

Vector ratio_raw(const RatioModel& model, const Points& X) {
  Vector out(X.rows());
  if (model.kind == RatioKind::kliep) {
    if (X.cols() != model.basis.cols()) throw std::invalid_argument("kliep ratio: dimension mismatch");
    out = gram(model.kernel, X, model.basis) * model.coeffs;
    return out;
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) out[i] = ratio_raw(model, PointRef(X.row(i).transpose()));
  return out;
}

Vector ratio_eval(const RatioModel& model, const Points& X) {
  Vector out = ratio_raw(model, X);
  if (model.truncation) out = out.cwiseMin(*model.truncation);
  return out;
}

RatioModel kliep_fit(const Points& source_x, const Points& target_x, const KliepOptions& opt,
                     KliepDiagnostics* diagnostics) {
  const Eigen::Index n = source_x.rows();
  const Eigen::Index m = target_x.rows();
  if (n < 2 || m < 2) throw std::invalid_argument("kliep_fit: need at least two source and two target points");
  if (source_x.cols() != target_x.cols()) throw std::invalid_argument("kliep_fit: dimension mismatch");
  if (opt.basis < 1) throw std::invalid_argument("kliep_fit: basis count must be >= 1");
  const Eigen::Index b = std::min<Eigen::Index>(opt.basis, m);

  Rng rng(derive_seed(opt.seed, 0x6b6c696570ULL));
  const auto perm = permutation(static_cast<std::size_t>(m), rng);
  Points basis(b, target_x.cols());
  for (Eigen::Index k = 0; k < b; ++k) basis.row(k) = target_x.row(Eigen::Index(perm[std::size_t(k)]));

  const double bw = opt.bandwidth ? *opt.bandwidth : median_heuristic_bandwidth(target_x);
  const KernelSpec kernel = KernelSpec::gaussian(bw);

  const Matrix A = gram(kernel, target_x, basis);                          // m x b
  const Vector norm_vec = gram(kernel, source_x, basis).colwise().mean();  // b
  for (Eigen::Index i = 0; i < m; ++i)
    if (!(A.row(i).maxCoeff() > 0.0)) {
      std::ostringstream os;
      os << "kliep_fit: every basis function vanishes at target point " << i << " (bandwidth " << bw
         << "); use a larger bandwidth";
      throw Error(os.str());
    }
  if (!(norm_vec.maxCoeff() > 0.0))
    throw Error("kliep_fit: basis functions vanish on the whole source sample; use a larger bandwidth");

  auto objective = [&](const Vector& a) {
    const Vector v = A * a;
    if ((v.array() <= 0.0).any()) return -std::numeric_limits<double>::infinity();
    return v.array().log().mean();
  };

  // With beta_l = norm_vec_l * alpha_l the feasible set is the probability
  // simplex and the problem is a mixture-weight likelihood. Fixed-point
  // iteration beta <- beta .* g(beta), g = (1/m) At' (1 ./ At beta), is
  // monotone and keeps the constraints exactly.
  const Eigen::Index active = (norm_vec.array() > 0.0).count();
  Matrix At = Matrix::Zero(m, b);
  Vector beta = Vector::Zero(b);
  for (Eigen::Index l = 0; l < b; ++l)
    if (norm_vec[l] > 0.0) {
      At.col(l) = A.col(l) / norm_vec[l];
      beta[l] = 1.0 / double(active);
    }
  auto to_alpha = [&](const Vector& be) {
    Vector a = Vector::Zero(b);
    for (Eigen::Index l = 0; l < b; ++l)
      if (norm_vec[l] > 0.0) a[l] = be[l] / norm_vec[l];
    return a;
  };

  Vector alpha = to_alpha(beta);
  double J = objective(alpha);
  if (!std::isfinite(J)) throw Error("kliep_fit: initial ratio is not positive on the target sample");

  KliepDiagnostics diag;
  long it = 0;
  for (; it < opt.max_iter; ++it) {
    const Vector g = At.transpose() * (At * beta).cwiseInverse() / double(m);
    beta = beta.cwiseProduct(g);
    beta /= beta.sum();
    const double Jn = objective(to_alpha(beta));
    if (Jn < J - 1e-12 * std::abs(J)) diag.objective_monotone = false;
    const double gain = Jn - J;
    J = Jn;
    if (gain < opt.tol) {
      ++it;
      break;
    }
  }
  alpha = to_alpha(beta);

  // Exact renormalization of the returned coefficients.
  alpha /= norm_vec.dot(alpha);
  diag.iterations = it;
  diag.objective = objective(alpha);
  diag.normalization_residual = std::abs(norm_vec.dot(alpha) - 1.0);
  if (diagnostics) *diagnostics = diag;
  return RatioModel::kliep(std::move(basis), std::move(alpha), kernel);
}

double truncation_level(long n, double beta_sq) {
  if (n < 1) throw std::invalid_argument("truncation_level: n must be >= 1");
  if (!(beta_sq >= 1.0)) throw std::invalid_argument("truncation_level: beta_sq must be >= 1");
  return std::sqrt(double(n) * beta_sq);
}

double estimate_beta_sq(const RatioModel& model, const Points& source_x) {
  if (source_x.rows() < 2) throw std::invalid_argument("estimate_beta_sq: need at least two points");
  return ratio_raw(model, source_x).array().square().mean();
}

std::string_view to_string(ShiftClass c) {
  switch (c) {
    case ShiftClass::uniformly_bounded: return "uniformly_bounded";
    case ShiftClass::moment_bounded_only: return "moment_bounded_only";
    case ShiftClass::unbounded_second_moment: return "unbounded_second_moment";
  }
  return "unknown";
}

ShiftDiagnostics classify_shift(const DensitySpec& source, const DensitySpec& target) {
  source.validate();
  target.validate();
  if (source.family != target.family)
    throw std::invalid_argument("classify_shift: source and target must share a density family");
  ShiftDiagnostics out;
  if (source == target) {
    out.classification = ShiftClass::uniformly_bounded;
    out.alpha_bound = 1.0;
    out.beta_sq = 1.0;
    return out;
  }

  bool bounded = false;
  if (source.family == DensityFamily::normal) {
    const double ms = source.p1, vs = source.p2, mt = target.p1, vt = target.p2;
    // log ratio = -(x-mt)^2/(2vt) + (x-ms)^2/(2vs) + log(sqrt(vs/vt)).
    if (vt < vs) {
      bounded = true;
      const double xs = (ms / vs - mt / vt) / (1.0 / vs - 1.0 / vt);
      out.alpha_bound = std::exp(-(xs - mt) * (xs - mt) / (2.0 * vt) + (xs - ms) * (xs - ms) / (2.0 * vs) +
                                 0.5 * std::log(vs / vt));
    } else if (vt == vs && mt == ms) {
      bounded = true;
      out.alpha_bound = 1.0;
    }
    // E_S[ratio^2] = int rho_T^2 / rho_S, finite iff 2/vt - 1/vs > 0.
    const double A = 1.0 / vt - 1.0 / (2.0 * vs);
    if (A > 0.0) {
      const double B = 2.0 * mt / vt - ms / vs;
      const double C = mt * mt / vt - ms * ms / (2.0 * vs);
      const double log_pref = -std::log(2.0 * std::numbers::pi * vt) + 0.5 * std::log(2.0 * std::numbers::pi * vs);
      out.beta_sq = std::exp(log_pref + 0.5 * std::log(std::numbers::pi / A) + B * B / (4.0 * A) - C);
    }
  } else {
    const double as = source.p1, bs = source.p2, at = target.p1, bt = target.p2;
    const double log_const = log_beta_fn(as, bs) - log_beta_fn(at, bt);
    if (at >= as && bt >= bs) {
      bounded = true;
      out.alpha_bound = std::exp(log_const + log_max_power_product(at - as, bt - bs));
    }
    if (2.0 * at - as > 0.0 && 2.0 * bt - bs > 0.0)
      out.beta_sq = std::exp(log_beta_fn(as, bs) + log_beta_fn(2.0 * at - as, 2.0 * bt - bs) -
                             2.0 * log_beta_fn(at, bt));
  }

  if (bounded)
    out.classification = ShiftClass::uniformly_bounded;
  else if (out.beta_sq)
    out.classification = ShiftClass::moment_bounded_only;
  else
    out.classification = ShiftClass::unbounded_second_moment;
  return out;
}

}  // namespace kcs
