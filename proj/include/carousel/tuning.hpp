#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "carousel/data.hpp"
#include "carousel/recommenders.hpp"

namespace carousel {

struct ParamRange {
  enum class Scale { Uniform, LogUniform };

  std::string name;
  double low = 0.0;
  double high = 1.0;
  Scale scale = Scale::Uniform;
  bool integer = false;

  double sample(std::mt19937_64& rng) const;
  bool contains(double value) const { return value >= low && value <= high; }
};

struct SearchSpace {
  std::vector<ParamRange> ranges;

  /// Default ranges per family; TopPopular has none.
  static SearchSpace defaults(Family family);
  /// Throws std::invalid_argument unless low < high (and low > 0 for log ranges).
  void validate() const;
};

struct Trial {
  ParamMap params;
  double validation_ndcg = 0.0;
  double train_seconds = 0.0;
  std::string error;  // non-empty when fitting failed; the trial then scores 0
};

struct TrialLog {
  Family family = Family::TopPopular;
  std::uint64_t seed = 0;
  std::vector<Trial> trials;  // in trial-index order
  std::size_t best_index = 0;

  const ParamMap& best_params() const { return trials.at(best_index).params; }
  double best_value() const { return trials.at(best_index).validation_ndcg; }
  /// trial,validation_ndcg,train_seconds,error,<param columns...>
  void write_csv(std::ostream& out) const;
  /// Flat JSON object of the best parameters.
  void write_best_params(std::ostream& out) const;
};

ParamMap read_param_file(std::istream& in);

/// Samples `budget` points, fits each on split.train and scores NDCG@k on
/// split.validation. Seeds for stochastic models are drawn from the same
/// generator, so the whole log is a function of `seed`.
TrialLog random_search(Family family, const SearchSpace& space, int budget,
                       const DataSplit& split, const ItemContentMatrix* icm, std::uint64_t seed,
                       Index k = 10);

/// Validation NDCG@k of one parameter point; the value random_search logs.
double validation_score(const HyperParams& params, const DataSplit& split,
                        const ItemContentMatrix* icm, Index k = 10);

}  // namespace carousel
