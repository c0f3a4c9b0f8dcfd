#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "kcs/estimators.hpp"
#include "kcs/synthdata.hpp"
#include "oracles.hpp"

using namespace kcs;
using kcs::testing::random_points;
using kcs::testing::random_vector;

namespace {

Dataset make_data(const Points& x, const Vector& y) {
  Dataset d;
  d.source_x = x;
  d.source_y = y;
  d.target_x = x;
  return d;
}

FitConfig config(LossSpec loss, KernelSpec k, double lambda) {
  FitConfig c;
  c.loss = loss;
  c.kernel = k;
  c.lambda = lambda;
  return c;
}

// Dual feasibility of a KQR/KSVM fit, reconstructed from the model.
void expect_dual_feasible(const FittedModel& m, const Vector& y, double lambda) {
  ASSERT_TRUE(m.bias.has_value());
  EXPECT_LE(m.diagnostics.kkt_residual, 1e-6);
  const double n = double(m.alpha.size());
  const double C = 1.0 / (2.0 * n * lambda);
  if (m.loss.kind == LossKind::check) {
    const double tau = *m.loss.tau;
    for (Eigen::Index i = 0; i < m.alpha.size(); ++i) {
      EXPECT_GE(m.alpha[i], C * (tau - 1.0) * m.weights_used[i] - 1e-9);
      EXPECT_LE(m.alpha[i], C * tau * m.weights_used[i] + 1e-9);
    }
    EXPECT_LE(std::abs(m.alpha.sum()), 1e-8 * std::max(1.0, m.alpha.norm()));
  } else {
    const Vector eta = m.alpha.cwiseProduct(y);
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      EXPECT_GE(eta[i], -1e-9);
      EXPECT_LE(eta[i], C * m.weights_used[i] + 1e-9);
    }
    EXPECT_LE(std::abs(y.dot(eta)), 1e-8 * std::max(1.0, eta.norm()));
  }
}

}  // namespace

TEST(Fit, SquaredDispatchMatchesRidge) {
  Points X(2, 1);
  X << 0, 1;
  Vector y(2);
  y << 1, 2;
  // A linear kernel on these points is not the worked example; use a
  // Gaussian bandwidth with K01 = 0.5 exactly.
  const double bw = 1.0 / std::sqrt(2.0 * std::log(2.0));
  const auto cfg = config(LossSpec::squared(), KernelSpec::gaussian(bw), 0.5);
  const FittedModel m = fit(make_data(X, y), cfg);
  EXPECT_NEAR(m.alpha[0], 4.0 / 15.0, 1e-12);
  EXPECT_NEAR(m.alpha[1], 14.0 / 15.0, 1e-12);
  EXPECT_FALSE(m.bias.has_value());
  const Vector p = predict(m, X);
  EXPECT_NEAR(p[0], 11.0 / 15.0, 1e-12);
  EXPECT_NEAR(p[1], 16.0 / 15.0, 1e-12);
}

TEST(Fit, HingeSeparatesTwoPoints) {
  Points X(2, 1);
  X << 1, -1;
  Vector y(2);
  y << 1, -1;
  const auto cfg = config(LossSpec::hinge(), KernelSpec::linear(), 1e-4);
  const FittedModel m = fit(make_data(X, y), cfg);
  EXPECT_EQ(classify(m, X), y);
  expect_dual_feasible(m, y, cfg.lambda);
}

TEST(Fit, CheckInterpolatesWellSeparatedPoints) {
  Points X(6, 1);
  X << 0, 10, 20, 30, 40, 50;
  Vector y(6);
  y << 0.3, -1.0, 2.0, 0.5, 1.5, -0.4;
  const auto cfg = config(LossSpec::check(0.5), KernelSpec::gaussian(1.0), 1e-6);
  const FittedModel m = fit(make_data(X, y), cfg);
  EXPECT_LE((predict(m, X) - y).lpNorm<Eigen::Infinity>(), 5e-2);
  expect_dual_feasible(m, y, cfg.lambda);
}

TEST(Fit, BiasPresenceByLoss) {
  Rng rng(1);
  const Points X = random_points(rng, 15, 2);
  const Vector yr = random_vector(rng, 15, -1, 1);
  const Vector yc = kcs::testing::random_labels(rng, 15);
  const auto k = KernelSpec::gaussian(0.7);
  EXPECT_FALSE(fit(make_data(X, yr), config(LossSpec::squared(), k, 1e-2)).bias);
  EXPECT_FALSE(fit(make_data(X, yr), config(LossSpec::huber(0.5), k, 1e-2)).bias);
  EXPECT_FALSE(fit(make_data(X, yc), config(LossSpec::logistic(), k, 1e-2)).bias);
  EXPECT_TRUE(fit(make_data(X, yr), config(LossSpec::check(0.4), k, 1e-2)).bias);
  EXPECT_TRUE(fit(make_data(X, yc), config(LossSpec::hinge(), k, 1e-2)).bias);
}

TEST(Fit, ObjectiveNoWorseThanOracle) {
  Rng rng(2);
  const std::vector<LossSpec> losses{LossSpec::squared(), LossSpec::check(0.3), LossSpec::huber(0.5),
                                     LossSpec::logistic(), LossSpec::hinge()};
  for (const auto& loss : losses)
    for (int t = 0; t < 3; ++t) {
      const Eigen::Index n = 8 + 4 * t;
      const Points X = random_points(rng, n, 2);
      const Vector y = loss.is_margin() ? kcs::testing::random_labels(rng, n) : random_vector(rng, n, -1, 1);
      const Vector w = random_vector(rng, n, 0.0, 3.0);
      const double lambda = t % 2 ? 1e-3 : 1e-1;
      auto cfg = config(loss, KernelSpec::gaussian(0.8), lambda);
      const FittedModel m = fit_weighted(X, y, w, cfg);
      const Matrix K = gram(cfg.kernel, X);
      const Vector o = primal_subgradient_oracle(K, w, y, loss, lambda, 200000);
      EXPECT_LE(m.diagnostics.objective, regularized_risk(K, w, y, loss, lambda, o) + 1e-4)
          << to_string(loss.kind) << " instance " << t;
      if (m.bias) expect_dual_feasible(m, y, lambda);
    }
}

TEST(Fit, WeightingsCoincideWithUnitRatio) {
  Rng rng(3);
  const Points X = random_points(rng, 20, 1);
  const Vector y = random_vector(rng, 20, -1, 1);
  const Dataset d = make_data(X, y);
  for (const auto& loss : {LossSpec::squared(), LossSpec::check(0.6)}) {
    auto cfg = config(loss, KernelSpec::gaussian(0.5), 1e-3);
    const Vector a0 = fit(d, cfg).alpha;
    cfg.weighting = Weighting::irw;
    const Vector a1 = fit(d, cfg).alpha;
    cfg.weighting = Weighting::tirw;
    cfg.truncation_level = 2.0;
    const Vector a2 = fit(d, cfg).alpha;
    if (loss.kind == LossKind::squared) {
      EXPECT_EQ(a0, a1);
      EXPECT_EQ(a0, a2);
    } else {
      EXPECT_LE((a0 - a1).lpNorm<Eigen::Infinity>(), 1e-6);
      EXPECT_LE((a0 - a2).lpNorm<Eigen::Infinity>(), 1e-6);
    }
  }
}

TEST(Fit, TruncatedWeightsAreMonotone) {
  const Scenario s = make_scenario(ScenarioId::kqr1d, ShiftCase::moment);
  const Dataset d = generate(s, 200, 10, 4);
  auto cfg = config(LossSpec::squared(), KernelSpec::gaussian(0.5), 1e-3);
  cfg.weighting = Weighting::irw;
  const Vector irw = fit_weights(d.source_x, cfg, d.truth->ratio);
  cfg.weighting = Weighting::tirw;
  cfg.truncation_level = 3.0;
  const Vector tirw = fit_weights(d.source_x, cfg, d.truth->ratio);
  EXPECT_TRUE((tirw.array() <= irw.array()).all());
  EXPECT_LE(tirw.maxCoeff(), 3.0);
  cfg.truncation_level = std::numeric_limits<double>::infinity();
  EXPECT_EQ(fit_weights(d.source_x, cfg, d.truth->ratio), irw);
}

TEST(Fit, InfiniteTruncationReproducesIrw) {
  const Scenario s = make_scenario(ScenarioId::kqr1d, ShiftCase::uniform);
  const Dataset d = generate(s, 60, 10, 5);
  for (const auto& loss : {LossSpec::squared(), LossSpec::check(0.3)}) {
    auto cfg = config(loss, KernelSpec::gaussian(0.4), 1e-3);
    cfg.weighting = Weighting::irw;
    const FittedModel a = fit(d, cfg, d.truth->ratio);
    cfg.weighting = Weighting::tirw;
    cfg.truncation_level = std::numeric_limits<double>::infinity();
    const FittedModel b = fit(d, cfg, d.truth->ratio);
    EXPECT_EQ(a.alpha, b.alpha);
  }
}

TEST(Fit, PermutationInvariantPredictions) {
  Rng rng(6);
  const Points X = random_points(rng, 25, 2);
  const Vector y = random_vector(rng, 25, -1, 1);
  const Points Xt = random_points(rng, 10, 2);
  const auto perm = permutation(25, rng);
  Points Xp(25, 2);
  Vector yp(25);
  for (Eigen::Index i = 0; i < 25; ++i) {
    Xp.row(i) = X.row(Eigen::Index(perm[std::size_t(i)]));
    yp[i] = y[Eigen::Index(perm[std::size_t(i)])];
  }
  for (const auto& loss : {LossSpec::squared(), LossSpec::huber(0.3)}) {
    const auto cfg = config(loss, KernelSpec::gaussian(0.6), 1e-3);
    const FittedModel a = fit(make_data(X, y), cfg), b = fit(make_data(Xp, yp), cfg);
    for (Eigen::Index i = 0; i < 25; ++i) EXPECT_NEAR(b.alpha[i], a.alpha[Eigen::Index(perm[std::size_t(i)])], 1e-8);
    EXPECT_LE((predict(a, Xt) - predict(b, Xt)).lpNorm<Eigen::Infinity>(), 1e-10);
  }
}

TEST(Fit, CheckModelMinimizesItsOwnPinballObjective) {
  const Scenario s = make_scenario(ScenarioId::kqr1d, ShiftCase::uniform);
  const Dataset d = generate(s, 80, 10, 7);
  const double lambda = 1e-3;
  std::vector<FittedModel> models;
  for (double tau : {0.2, 0.5, 0.8})
    models.push_back(fit(d, config(LossSpec::check(tau), KernelSpec::gaussian(0.5), lambda)));
  for (const auto& own : models) {
    const double J = own.diagnostics.objective;
    for (const auto& other : models) {
      FittedModel swapped = other;
      swapped.loss = own.loss;
      EXPECT_LE(J, training_objective(swapped, d.source_y, lambda) + 1e-6);
    }
  }
}

TEST(Fit, ErrorsAndEdgeCases) {
  Rng rng(8);
  const Points X = random_points(rng, 5, 1);
  const Vector y = random_vector(rng, 5, -1, 1);
  auto cfg = config(LossSpec::squared(), KernelSpec::gaussian(1.0), 1e-2);
  EXPECT_THROW(fit_weighted(X, y, Vector::Zero(5), cfg), Error);
  Vector neg = Vector::Ones(5);
  neg[2] = -1.0;
  EXPECT_THROW(fit_weighted(X, y, neg, cfg), Error);
  cfg.weighting = Weighting::tirw;
  EXPECT_THROW(fit(make_data(X, y), cfg), std::invalid_argument);
  cfg.weighting = Weighting::unweighted;
  cfg.lambda = 0.0;
  EXPECT_THROW(fit(make_data(X, y), cfg), std::invalid_argument);
  cfg.lambda = 1e-2;
  EXPECT_THROW(fit(make_data(X.topRows(1), y.head(1)), cfg), std::invalid_argument);
  cfg.loss = LossSpec::hinge();
  EXPECT_THROW(fit(make_data(X, y), cfg), std::invalid_argument);

  FittedModel m = fit(make_data(X, y), config(LossSpec::squared(), KernelSpec::gaussian(1.0), 1e-2));
  EXPECT_THROW(predict(m, Points::Zero(2, 3)), std::invalid_argument);
  EXPECT_THROW(classify(m, X), std::invalid_argument);
  m.alpha.setZero();
  EXPECT_EQ(predict(m, X), Vector::Zero(5));
}

TEST(Predict, SinglePointAndClassifyTies) {
  FittedModel m;
  m.kernel = KernelSpec::gaussian(1.0);
  m.loss = LossSpec::hinge();
  m.train_x = Points::Zero(1, 1);
  m.alpha = Vector::Ones(1);
  EXPECT_EQ(predict(m, Points::Zero(1, 1))[0], 1.0);
  m.kernel = KernelSpec::linear();
  m.alpha.setZero();
  for (double b : {0.3, -2.0, 0.0}) {
    m.bias = b;
    EXPECT_EQ(classify(m, Points::Zero(1, 1))[0], b >= 0.0 ? 1.0 : -1.0);
  }
}

TEST(Weighting, Parse) {
  EXPECT_EQ(parse_weighting("tirw"), Weighting::tirw);
  EXPECT_THROW(parse_weighting("iw"), std::invalid_argument);
}
