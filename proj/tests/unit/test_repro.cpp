#include <gtest/gtest.h>

#include <set>

#include "kcs/repro.hpp"

using namespace kcs;

TEST(Repro, RegistryCoversEveryFigureAndTable) {
  std::set<std::string> ids;
  for (const auto& e : repro_registry()) EXPECT_TRUE(ids.insert(e.id).second) << "duplicate " << e.id;
  for (const char* id : {"Trivial", "Fig2", "Fig3", "Fig4", "FigS1", "FigS2", "FigS3-uniform", "FigS3-moment",
                         "FigS4-uniform", "FigS4-moment", "FigS5-uniform", "FigS5-moment", "Table2-Ionosphere",
                         "Table2-DryBean", "Table2-Magic04", "Table2-Authentication"})
    EXPECT_TRUE(ids.count(id)) << id;
  const auto& fig4 = find_repro_entry("Fig4");
  std::set<double> ells;
  for (const auto& p : fig4.panels) ells.insert(p.config.ell);
  EXPECT_EQ(ells, (std::set<double>{6, 8, 10}));
  EXPECT_THROW(find_repro_entry("Fig99"), std::invalid_argument);
}

TEST(Repro, PanelConfigsRoundTripThroughParser) {
  for (const auto& e : repro_registry())
    for (const auto& p : e.panels) {
      const std::string text = to_json(p.config);
      const ExperimentConfig back = experiment_config_from_json(text);
      EXPECT_EQ(to_json(back), text) << e.id << "/" << p.name;
      EXPECT_NO_THROW(back.validate()) << e.id << "/" << p.name;
      EXPECT_FALSE(e.predicate_text.empty());
    }
}

TEST(Repro, TrivialEntryPasses) {
  const auto out = verify_repro(find_repro_entry("Trivial"));
  EXPECT_TRUE(out.passed);
  EXPECT_FALSE(out.skipped);
}

TEST(Repro, DatasetEntrySkipsWithoutData) {
  const auto out = verify_repro(find_repro_entry("Table2-Ionosphere"));
  EXPECT_TRUE(out.skipped);
  EXPECT_FALSE(out.passed);
}

TEST(Repro, ReplicateOverrideAndBudget) {
  const auto& e = find_repro_entry("Fig3");
  ReproOptions opt;
  opt.replicates = 1;
  for (const auto& p : resolve_panels(e, opt)) EXPECT_EQ(p.config.replicates, 1);

  // Shrink the run to one cheap panel point so the budget check is fast.
  ReproEntry small = e;
  small.panels.resize(1);
  small.panels[0].config.values = {1e-4};
  small.panels[0].config.n = 50;
  small.panels[0].config.m = 50;
  opt.budget_seconds = 0.0;
  const auto out = verify_repro(small, opt);
  EXPECT_FALSE(out.passed);
  EXPECT_NE(out.detail.find("budget exceeded"), std::string::npos) << out.detail;
}
