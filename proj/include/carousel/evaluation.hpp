#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "carousel/data.hpp"
#include "carousel/metrics.hpp"
#include "carousel/recommenders.hpp"

namespace carousel {

struct EvaluationConfig {
  Index k = 10;
  DiscountWeights weights;
  std::vector<std::string> fixed_models;      // top rows of every page, in order
  std::vector<std::string> candidate_models;  // each one becomes the last row
  bool exclude_seen = true;
  double relevance_threshold = -1.0;  // any interaction counts as relevant
  bool normalize = true;              // false reports raw DCG2D for the page metric

  void validate() const;
};

/// Named trained models.
using ModelSet = std::map<std::string, Model>;

/// Mean plus the per-user values it averages, in ascending user order.
struct Evaluation {
  double mean = 0.0;
  std::vector<Index> users;
  std::vector<double> per_user;
};

/// Users with at least one relevant interaction in `target`.
std::vector<Index> evaluable_users(const InteractionMatrix& target, double threshold);

/// The model's list for every user in `users`, padded with kNoItem to length k.
std::vector<RecommendationList> recommend_all(const Model& model, const InteractionMatrix& train,
                                              const std::vector<Index>& users, Index k,
                                              bool exclude_seen);

/// Mean NDCG@k against `target` over evaluable users.
Evaluation evaluate_individual(const Model& model, const InteractionMatrix& train,
                               const InteractionMatrix& target, const EvaluationConfig& cfg);
/// Same, against the test partition of `split`.
Evaluation evaluate_individual(const Model& model, const DataSplit& split,
                               const EvaluationConfig& cfg);

/// Mean NDCG2D of the page [fixed..., candidate] on the test partition. Each
/// list is generated independently; nothing shown above is excluded below.
Evaluation evaluate_page(const std::vector<const Model*>& fixed, const Model& candidate,
                         const DataSplit& split, const EvaluationConfig& cfg);

struct MetricRow {
  std::string model;
  double individual_ndcg = 0.0;
  double carousel_ndcg2d = 0.0;
  int individual_rank = 0;
  int carousel_rank = 0;
  int delta_rank = 0;  // individual_rank - carousel_rank
};

struct MetricReport {
  std::vector<MetricRow> rows;  // candidates in cfg order
  /// Individual NDCG of each fixed model, reported without ranks.
  std::vector<std::pair<std::string, double>> baselines;
  std::size_t n_users_evaluated = 0;

  const MetricRow& row(const std::string& model) const;
  /// model,individual_ndcg,carousel_ndcg2d,individual_rank,carousel_rank,delta_rank.
  /// Baseline rows come first with the carousel and rank fields left empty.
  void write_csv(std::ostream& out) const;
};

/// Ranks are 1..n by descending metric, ties broken by model name.
MetricReport rank_candidates(const ModelSet& models, const DataSplit& split,
                             const EvaluationConfig& cfg);

/// Appends, one row at a time, the pool model that maximizes the page metric
/// given the rows chosen so far (starting from cfg.fixed_models, which are not
/// part of the result). Ties go to the lexicographically smaller name.
std::vector<std::string> greedy_page_builder(const ModelSet& models,
                                             const std::vector<std::string>& pool, Index n_rows,
                                             const DataSplit& split, const EvaluationConfig& cfg);

/// Hit counts per cell of the [fixed..., candidate] page over evaluable users.
Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> page_heatmap(
    const std::vector<const Model*>& fixed, const Model& candidate, const DataSplit& split,
    const EvaluationConfig& cfg);

}  // namespace carousel
