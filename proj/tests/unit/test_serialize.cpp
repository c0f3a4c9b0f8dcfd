#include <gtest/gtest.h>

#include <limits>

#include "kcs/serialize.hpp"
#include "oracles.hpp"

using namespace kcs;

namespace {
Dataset sample(ScenarioId id, std::uint64_t seed) { return generate(make_scenario(id, ShiftCase::moment), 30, 20, seed); }
}  // namespace

TEST(Serialize, ModelRoundTripPredictsIdentically) {
  const Dataset d = sample(ScenarioId::kqr1d, 1);
  FitConfig cfg;
  cfg.loss = LossSpec::check(0.3);
  cfg.kernel = KernelSpec::gaussian(0.45);
  cfg.lambda = 1e-3;
  const FittedModel m = fit(d, cfg);
  const FittedModel back = model_from_json(to_json(m));
  EXPECT_EQ(back.alpha, m.alpha);
  EXPECT_EQ(back.bias, m.bias);
  EXPECT_EQ(back.train_x, m.train_x);
  EXPECT_EQ(back.kernel, m.kernel);
  EXPECT_EQ(back.loss, m.loss);
  EXPECT_EQ(predict(back, d.target_x), predict(m, d.target_x));
  EXPECT_EQ(to_json(back), to_json(m));
}

TEST(Serialize, RatioRoundTrips) {
  const auto analytic = RatioModel::analytic(DensitySpec::beta(4, 1), DensitySpec::beta(3, 6));
  const Dataset d = sample(ScenarioId::krr3d_s2, 2);
  KliepOptions ko;
  ko.basis = 10;
  const auto kliep = kliep_fit(d.source_x, d.target_x, ko);
  for (const RatioModel& r : {RatioModel::constant_one(), analytic, analytic.truncated(2.5),
                              analytic.truncated(std::numeric_limits<double>::infinity()), kliep}) {
    const RatioModel back = ratio_from_json(to_json(r));
    EXPECT_EQ(back.kind, r.kind);
    EXPECT_EQ(back.truncation, r.truncation);
    EXPECT_EQ(ratio_eval(back, d.source_x), ratio_eval(r, d.source_x));
  }
  EXPECT_NE(to_json(analytic.truncated(std::numeric_limits<double>::infinity())).find("\"inf\""),
            std::string::npos);
}

TEST(Serialize, FitConfigAndGrid) {
  FitConfig cfg;
  cfg.loss = LossSpec::huber(0.7);
  cfg.kernel = KernelSpec::polynomial(3, 0.5);
  cfg.lambda = 2.5e-4;
  cfg.weighting = Weighting::tirw;
  cfg.truncation_level = 12.0;
  cfg.solver.tol = 1e-7;
  const FitConfig back = fit_config_from_json(to_json(cfg));
  EXPECT_EQ(back.loss, cfg.loss);
  EXPECT_EQ(back.kernel, cfg.kernel);
  EXPECT_EQ(back.lambda, cfg.lambda);
  EXPECT_EQ(back.weighting, cfg.weighting);
  EXPECT_EQ(back.truncation_level, cfg.truncation_level);
  EXPECT_EQ(back.solver, cfg.solver);

  const auto grid = fit_grid_from_json(R"([
    {"loss": {"kind": "check", "tau": 0.3}, "kernel": {"family": "gaussian", "bandwidth": 0.5}, "lambda": 1e-3},
    {"loss": {"kind": "check"}, "kernel": {"family": "gaussian", "bandwidth": 0.5}, "lambda": 1e-2}])");
  ASSERT_EQ(grid.size(), 2u);
  EXPECT_EQ(*grid[0].loss.tau, 0.3);
  EXPECT_EQ(*grid[1].loss.tau, 0.5);
  EXPECT_THROW(fit_grid_from_json("{}"), Error);
  EXPECT_THROW(fit_config_from_json("not json"), Error);
  EXPECT_THROW(model_from_json(R"({"format": "kcs.ratio", "version": 1})"), Error);
}

TEST(Serialize, ScenarioDocument) {
  const std::string s = scenario_to_json(make_scenario(ScenarioId::kqr3d_s4, ShiftCase::uniform), 10, 20, 7);
  for (const char* key : {"\"published_class\"", "\"classification\"", "\"beta_sq\"", "\"alpha_bound\"",
                          "\"t_df\"", "\"seed\": 7"})
    EXPECT_NE(s.find(key), std::string::npos) << key;
}

TEST(Serialize, SelectionReport) {
  const Dataset d = sample(ScenarioId::krr1d_s1, 3);
  FitConfig a;
  a.kernel = KernelSpec::gaussian(0.5);
  a.lambda = 1e-3;
  FitConfig b = a;
  b.lambda = 1e-1;
  const auto rep = select(d, {a, b}, RatioModel::constant_one(), CVPlan::shuffled(30, 3, 1));
  const std::string j = to_json(rep);
  EXPECT_NE(j.find("kcs.selection"), std::string::npos);
  EXPECT_NE(j.find("\"chosen\""), std::string::npos);
}

TEST(Serialize, FileHelpers) {
  const std::string dir = kcs::testing::scratch_dir("ser");
  write_text_file(dir + "/a.txt", "hello\n");
  EXPECT_EQ(read_text_file(dir + "/a.txt"), "hello\n");
  EXPECT_THROW(read_text_file(dir + "/missing.txt"), Error);
}
