#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace kcs {

enum class LossKind { squared, check, huber, logistic, hinge };

std::string_view to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);

// One member of the convex, locally Lipschitz loss family. `tau` is set only
// for the check loss and `huber_delta` only for the Huber loss.
struct LossSpec {
  LossKind kind = LossKind::squared;
  std::optional<double> tau;
  std::optional<double> huber_delta;

  static LossSpec squared();
  static LossSpec check(double tau);
  static LossSpec huber(double delta);
  static LossSpec logistic();
  static LossSpec hinge();

  void validate() const;
  bool is_margin() const { return kind == LossKind::logistic || kind == LossKind::hinge; }

  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

// Margin losses (logistic, hinge) require y in {-1, +1}.
double loss_value(const LossSpec& spec, double y, double f);

// Derivative in f where it exists. At a kink returns the midpoint of the
// subdifferential: 0.5 - tau for the check loss at y == f, -y/2 for the
// hinge loss at y*f == 1.
double loss_subgradient(const LossSpec& spec, double y, double f);

// Lipschitz constant of f -> L(y, f) on [-V, V] given |y| <= M_y.
double lipschitz_bound(const LossSpec& spec, double V, double M_y);

}  // namespace kcs
