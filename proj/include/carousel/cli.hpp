#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "carousel/data.hpp"
#include "carousel/evaluation.hpp"

namespace carousel {

/// Effective settings of one CLI run: config file values with flag overrides
/// applied on top.
struct RunConfig {
  std::string ratings_path;
  std::optional<InteractionFormat> format;  // inferred from the extension when unset
  std::string movies_path;
  std::string tags_path;
  SplitRatios ratios;
  std::uint64_t seed = 42;
  Index k = 10;
  DiscountWeights weights;
  std::vector<std::string> fixed_models;
  /// (model name, parameter source); the source is "tuned", "default" or an
  /// inline JSON object of parameters.
  std::vector<std::pair<std::string, std::string>> models;
  int tuning_budget = 50;
  double relevance_threshold = -1.0;
  bool normalize = true;
  std::string out_dir = "runs/default";

  /// Throws std::invalid_argument describing the first problem found.
  void validate() const;
};

/// Derives an independent seed for one named use of the root seed.
std::uint64_t derive_seed(std::uint64_t root, const std::string& label);

/// Entry point of the `carousel` tool. Returns the process exit status.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace carousel
