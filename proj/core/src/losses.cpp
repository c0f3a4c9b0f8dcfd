#include "kcs/losses.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace kcs {

namespace {

void require_label(double y) {
  if (y != 1.0 && y != -1.0)
    throw std::invalid_argument("margin loss requires y in {-1, +1}, got " + std::to_string(y));
}

// log(1 + exp(-m)) without overflow.
double softplus_neg(double m) {
  return m > 0.0 ? std::log1p(std::exp(-m)) : -m + std::log1p(std::exp(m));
}

// 1 / (1 + exp(m)).
double sigmoid_neg(double m) {
  if (m >= 0.0) {
    const double e = std::exp(-m);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(m));
}

}  // namespace

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::squared: return "squared";
    case LossKind::check: return "check";
    case LossKind::huber: return "huber";
    case LossKind::logistic: return "logistic";
    case LossKind::hinge: return "hinge";
  }
  return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "squared") return LossKind::squared;
  if (name == "check") return LossKind::check;
  if (name == "huber") return LossKind::huber;
  if (name == "logistic") return LossKind::logistic;
  if (name == "hinge") return LossKind::hinge;
  throw std::invalid_argument("unknown loss '" + std::string(name) +
                              "' (squared, check, huber, logistic, hinge accepted)");
}

LossSpec LossSpec::squared() { return {}; }

LossSpec LossSpec::check(double tau) {
  LossSpec s;
  s.kind = LossKind::check;
  s.tau = tau;
  s.validate();
  return s;
}

LossSpec LossSpec::huber(double delta) {
  LossSpec s;
  s.kind = LossKind::huber;
  s.huber_delta = delta;
  s.validate();
  return s;
}

LossSpec LossSpec::logistic() {
  LossSpec s;
  s.kind = LossKind::logistic;
  return s;
}

LossSpec LossSpec::hinge() {
  LossSpec s;
  s.kind = LossKind::hinge;
  return s;
}

void LossSpec::validate() const {
  if (tau.has_value() != (kind == LossKind::check))
    throw std::invalid_argument("tau must be given for the check loss and only for it");
  if (huber_delta.has_value() != (kind == LossKind::huber))
    throw std::invalid_argument("huber_delta must be given for the Huber loss and only for it");
  if (tau && !(*tau > 0.0 && *tau < 1.0)) throw std::invalid_argument("tau must lie in (0, 1)");
  if (huber_delta && !(*huber_delta > 0.0))
    throw std::invalid_argument("huber_delta must be positive");
}

double loss_value(const LossSpec& spec, double y, double f) {
  switch (spec.kind) {
    case LossKind::squared: {
      const double r = y - f;
      return r * r;
    }
    case LossKind::check: {
      const double r = y - f;
      return r * (*spec.tau - (y <= f ? 1.0 : 0.0));
    }
    case LossKind::huber: {
      const double r = std::abs(y - f);
      const double d = *spec.huber_delta;
      return r <= d ? 0.5 * r * r : d * r - 0.5 * d * d;
    }
    case LossKind::logistic:
      require_label(y);
      return softplus_neg(y * f) / std::numbers::ln2;
    case LossKind::hinge:
      require_label(y);
      return std::max(0.0, 1.0 - y * f);
  }
  return 0.0;
}

double loss_subgradient(const LossSpec& spec, double y, double f) {
  switch (spec.kind) {
    case LossKind::squared:
      return -2.0 * (y - f);
    case LossKind::check: {
      const double tau = *spec.tau;
      if (f > y) return 1.0 - tau;
      if (f < y) return -tau;
      return 0.5 - tau;
    }
    case LossKind::huber: {
      const double r = y - f;
      const double d = *spec.huber_delta;
      if (r > d) return -d;
      if (r < -d) return d;
      return -r;
    }
    case LossKind::logistic:
      require_label(y);
      return -y * sigmoid_neg(y * f) / std::numbers::ln2;
    case LossKind::hinge: {
      require_label(y);
      const double m = y * f;
      if (m < 1.0) return -y;
      if (m > 1.0) return 0.0;
      return -0.5 * y;
    }
  }
  return 0.0;
}

double lipschitz_bound(const LossSpec& spec, double V, double M_y) {
  switch (spec.kind) {
    case LossKind::squared: return 2.0 * (M_y + V);
    case LossKind::check: return 1.0;
    case LossKind::huber: return *spec.huber_delta;
    case LossKind::logistic: return sigmoid_neg(-V) / std::numbers::ln2;
    case LossKind::hinge: return 1.0;
  }
  return 0.0;
}

}  // namespace kcs
