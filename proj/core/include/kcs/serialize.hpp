#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "kcs/estimators.hpp"
#include "kcs/model_selection.hpp"
#include "kcs/ratio.hpp"
#include "kcs/synthdata.hpp"

namespace kcs {

// JSON documents exchanged by the command-line tool. Every reader throws
// kcs::Error on malformed input. Non-finite numbers are written as the
// strings "inf", "-inf" and "nan".

std::string to_json(const KernelSpec& k);
std::string to_json(const LossSpec& l);

// {"format": "kcs.model", "version": 1, ...}
std::string to_json(const FittedModel& model);
FittedModel model_from_json(std::string_view text);

// {"format": "kcs.ratio", "version": 1, ...}
std::string to_json(const RatioModel& ratio);
RatioModel ratio_from_json(std::string_view text);

std::string to_json(const FitConfig& cfg);
FitConfig fit_config_from_json(std::string_view text);
// A JSON array of fit configurations.
std::vector<FitConfig> fit_grid_from_json(std::string_view text);

std::string to_json(const SelectionReport& report);

// Scenario parameters plus the generation arguments and the classifier's
// verdict on the density pair.
std::string scenario_to_json(const Scenario& s, Eigen::Index n, Eigen::Index m, std::uint64_t seed);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace kcs
