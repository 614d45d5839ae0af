#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "carousel/data.hpp"
#include "carousel/metrics.hpp"

namespace carousel {

enum class Family { TopPopular, ItemKNNHybrid, RP3beta, EASE, FunkSVD, NMF };

std::string_view family_name(Family family);
std::optional<Family> family_from_name(std::string_view name);
const std::vector<Family>& all_families();

struct TopPopularParams {};

struct ItemKnnParams {
  Index top_k = 100;
  double shrink = 10.0;
  double icm_weight = 1.0;
};

struct Rp3betaParams {
  Index top_k = 100;
  double alpha = 1.0;
  double beta = 0.5;
};

struct EaseParams {
  double l2 = 100.0;
  Index max_items = 25000;
};

struct FunkSvdParams {
  Index factors = 32;
  double learn_rate = 0.01;
  double reg = 0.01;
  int epochs = 50;
  /// Unobserved (user, item) pairs sampled per epoch as zero-valued targets,
  /// as a fraction of the observed ratings. 0 trains on observed ratings only.
  double negative_ratio = 0.0;
  std::uint64_t seed = 0;
};

struct NmfParams {
  Index factors = 32;
  int iterations = 200;
  std::uint64_t seed = 0;
};

using HyperParams = std::variant<TopPopularParams, ItemKnnParams, Rp3betaParams, EaseParams,
                                 FunkSvdParams, NmfParams>;
using ParamMap = std::map<std::string, double>;

Family family_of(const HyperParams& params);
HyperParams default_params(Family family);
/// Throws std::invalid_argument when a field is outside its domain.
void validate(const HyperParams& params);
ParamMap to_param_map(const HyperParams& params);
/// Starts from the family defaults; unknown keys are rejected.
HyperParams params_from_map(Family family, const ParamMap& values);

/// One global score per item.
struct ItemScoresModel {
  Eigen::VectorXd scores;
};

/// Sparse item-item weights; row = source item the user has seen, column =
/// candidate item. At most top_k entries per column and a zero diagonal.
struct SimilarityModel {
  SparseRowMatrix<double> weights;
};

struct DenseSimilarityModel {
  Eigen::MatrixXd weights;
};

struct FactorModel {
  Eigen::MatrixXd user_factors;  // n_users x f
  Eigen::MatrixXd item_factors;  // n_items x f
};

using ModelBody = std::variant<ItemScoresModel, SimilarityModel, DenseSimilarityModel, FactorModel>;

struct Model {
  HyperParams params;
  ModelBody body;

  Family family() const { return family_of(params); }
  bool personalized() const { return !std::holds_alternative<ItemScoresModel>(body); }
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ItemScoresModel fit_top_popular(const InteractionMatrix& train);

/// Cosine over stacked [ratings column ; icm_weight * feature row] vectors with
/// additive shrink in the denominator.
SimilarityModel fit_itemknn_hybrid(const InteractionMatrix& train, const ItemContentMatrix& icm,
                                   const ItemKnnParams& p);

/// Two-step item -> user -> item random walk on the binarized graph, transition
/// probabilities raised to alpha, divided by popularity^beta of the target.
SimilarityModel fit_rp3beta(const InteractionMatrix& train, const Rp3betaParams& p);

/// Closed-form ridge item-item regression with a zero-diagonal constraint.
DenseSimilarityModel fit_ease(const InteractionMatrix& train, const EaseParams& p);

/// Called after each FunkSVD epoch or NMF iteration with (step, U, V).
using FactorObserver =
    std::function<void(int, const Eigen::MatrixXd&, const Eigen::MatrixXd&)>;

FactorModel fit_funksvd(const InteractionMatrix& train, const FunkSvdParams& p,
                        const FactorObserver& observer = {});
FactorModel fit_nmf(const InteractionMatrix& train, const NmfParams& p,
                    const FactorObserver& observer = {});

/// Dispatches on the family of `params`. `icm` is required for ItemKNNHybrid.
Model fit(const HyperParams& params, const InteractionMatrix& train,
          const ItemContentMatrix* icm = nullptr);

/// Top-k list for users of one training matrix. Users with no training
/// interactions get TopPopular scores under personalized models.
class Recommender {
 public:
  Recommender(const Model& model, const InteractionMatrix& train);

  /// Scores for every item; ignores exclusion.
  Eigen::VectorXd scores(Index user) const;
  RecommendationList recommend(Index user, Index k, bool exclude_seen) const;
  bool uses_fallback(Index user) const;

 private:
  const Model& model_;
  const InteractionMatrix& train_;
  Eigen::VectorXd popularity_;
};

RecommendationList recommend(const Model& model, const InteractionMatrix& train, Index user,
                             Index k, bool exclude_seen);

/// Highest-scoring k items not in `excluded` (sorted ascending); ties by
/// ascending item index.
RecommendationList top_k(const Eigen::Ref<const Eigen::VectorXd>& scores,
                         const std::vector<Index>& excluded, Index k);

}  // namespace carousel
