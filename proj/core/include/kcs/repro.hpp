#pragma once

#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kcs/experiments.hpp"

namespace kcs {

struct ReproPanel {
  std::string name;
  ExperimentConfig config;
};

struct ReproVerdict {
  bool passed = false;
  std::string detail;
  std::vector<std::pair<std::string, double>> stats;
};

using ReproPredicate = std::function<ReproVerdict(const std::vector<std::vector<ResultRow>>& panel_rows)>;

// One figure or table bound to runnable configurations and a qualitative
// check on their results. Thresholds in the predicates are operationalizations
// chosen for this library.
struct ReproEntry {
  std::string id;
  std::string description;
  std::vector<ReproPanel> panels;
  std::string predicate_text;
  ReproPredicate predicate;
  double budget_seconds = 3600.0;
  bool needs_dataset = false;  // panels read a user-supplied labelled CSV
};

const std::vector<ReproEntry>& repro_registry();
// Throws std::invalid_argument listing the known ids.
const ReproEntry& find_repro_entry(const std::string& id);

struct ReproOptions {
  std::optional<int> replicates;           // overrides every panel's replicate count
  std::optional<DataSource> data;          // required by dataset entries
  std::optional<double> budget_seconds;    // overrides the entry budget
  int threads = 0;
};

// Panel configurations after applying the options.
std::vector<ReproPanel> resolve_panels(const ReproEntry& entry, const ReproOptions& opt);

struct ReproOutcome {
  std::string id;
  bool passed = false;
  bool skipped = false;  // dataset entry without a dataset
  std::string detail;
  std::vector<std::pair<std::string, double>> stats;
  double seconds = 0.0;
  std::vector<ReproPanel> panels;
  std::vector<std::vector<ResultRow>> rows;
};

// Runs every panel and evaluates the predicate. Exceeding the budget fails
// the entry and reports the elapsed time.
ReproOutcome verify_repro(const ReproEntry& entry, const ReproOptions& opt = {});

}  // namespace kcs
