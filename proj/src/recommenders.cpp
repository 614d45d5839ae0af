#include "carousel/recommenders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace carousel {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

constexpr std::string_view kFamilyNames[] = {"TopPopular", "ItemKNNHybrid", "RP3beta",
                                             "EASE",       "FunkSVD",       "NMF"};

void require(bool ok, const char* message) {
  if (!ok) throw std::invalid_argument(message);
}

// Rows of the train matrix as the model consumes them.
bool uses_binary_profile(Family f) { return f == Family::RP3beta || f == Family::EASE; }

double take(ParamMap& m, const std::string& key, double fallback) {
  const auto it = m.find(key);
  if (it == m.end()) return fallback;
  const double v = it->second;
  m.erase(it);
  return v;
}

}  // namespace

std::string_view family_name(Family family) { return kFamilyNames[static_cast<int>(family)]; }

std::optional<Family> family_from_name(std::string_view name) {
  for (Family f : all_families()) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

const std::vector<Family>& all_families() {
  static const std::vector<Family> families{Family::TopPopular, Family::ItemKNNHybrid,
                                            Family::RP3beta,    Family::EASE,
                                            Family::FunkSVD,    Family::NMF};
  return families;
}

Family family_of(const HyperParams& params) { return static_cast<Family>(params.index()); }

HyperParams default_params(Family family) {
  switch (family) {
    case Family::TopPopular: return TopPopularParams{};
    case Family::ItemKNNHybrid: return ItemKnnParams{};
    case Family::RP3beta: return Rp3betaParams{};
    case Family::EASE: return EaseParams{};
    case Family::FunkSVD: return FunkSvdParams{};
    case Family::NMF: return NmfParams{};
  }
  throw std::invalid_argument("unknown family");
}

void validate(const HyperParams& params) {
  std::visit(Overloaded{
                 [](const TopPopularParams&) {},
                 [](const ItemKnnParams& p) {
                   require(p.top_k >= 1, "ItemKNNHybrid top_k must be >= 1");
                   require(p.shrink >= 0.0, "ItemKNNHybrid shrink must be >= 0");
                   require(p.icm_weight >= 0.0, "ItemKNNHybrid icm_weight must be >= 0");
                 },
                 [](const Rp3betaParams& p) {
                   require(p.top_k >= 1, "RP3beta top_k must be >= 1");
                   require(p.alpha >= 0.0, "RP3beta alpha must be >= 0");
                   require(p.beta >= 0.0, "RP3beta beta must be >= 0");
                 },
                 [](const EaseParams& p) {
                   require(p.l2 > 0.0, "EASE l2 must be > 0");
                   require(p.max_items >= 1, "EASE max_items must be >= 1");
                 },
                 [](const FunkSvdParams& p) {
                   require(p.factors >= 1, "FunkSVD factors must be >= 1");
                   require(p.epochs >= 1, "FunkSVD epochs must be >= 1");
                   require(p.learn_rate > 0.0, "FunkSVD learn_rate must be > 0");
                   require(p.reg >= 0.0, "FunkSVD reg must be >= 0");
                   require(p.negative_ratio >= 0.0, "FunkSVD negative_ratio must be >= 0");
                 },
                 [](const NmfParams& p) {
                   require(p.factors >= 1, "NMF factors must be >= 1");
                   require(p.iterations >= 1, "NMF iterations must be >= 1");
                 },
             },
             params);
}

ParamMap to_param_map(const HyperParams& params) {
  return std::visit(
      Overloaded{
          [](const TopPopularParams&) { return ParamMap{}; },
          [](const ItemKnnParams& p) {
            return ParamMap{{"top_k", p.top_k}, {"shrink", p.shrink}, {"icm_weight", p.icm_weight}};
          },
          [](const Rp3betaParams& p) {
            return ParamMap{{"top_k", p.top_k}, {"alpha", p.alpha}, {"beta", p.beta}};
          },
          [](const EaseParams& p) {
            return ParamMap{{"l2", p.l2}, {"max_items", p.max_items}};
          },
          [](const FunkSvdParams& p) {
            return ParamMap{{"factors", p.factors},
                            {"learn_rate", p.learn_rate},
                            {"reg", p.reg},
                            {"epochs", p.epochs},
                            {"negative_ratio", p.negative_ratio},
                            {"seed", static_cast<double>(p.seed)}};
          },
          [](const NmfParams& p) {
            return ParamMap{{"factors", p.factors},
                            {"iterations", p.iterations},
                            {"seed", static_cast<double>(p.seed)}};
          },
      },
      params);
}

HyperParams params_from_map(Family family, const ParamMap& values) {
  ParamMap m = values;
  HyperParams out = default_params(family);
  std::visit(Overloaded{
                 [](TopPopularParams&) {},
                 [&](ItemKnnParams& p) {
                   p.top_k = static_cast<Index>(std::lround(take(m, "top_k", p.top_k)));
                   p.shrink = take(m, "shrink", p.shrink);
                   p.icm_weight = take(m, "icm_weight", p.icm_weight);
                 },
                 [&](Rp3betaParams& p) {
                   p.top_k = static_cast<Index>(std::lround(take(m, "top_k", p.top_k)));
                   p.alpha = take(m, "alpha", p.alpha);
                   p.beta = take(m, "beta", p.beta);
                 },
                 [&](EaseParams& p) {
                   p.l2 = take(m, "l2", p.l2);
                   p.max_items = static_cast<Index>(std::lround(take(m, "max_items", p.max_items)));
                 },
                 [&](FunkSvdParams& p) {
                   p.factors = static_cast<Index>(std::lround(take(m, "factors", p.factors)));
                   p.learn_rate = take(m, "learn_rate", p.learn_rate);
                   p.reg = take(m, "reg", p.reg);
                   p.epochs = static_cast<int>(std::lround(take(m, "epochs", p.epochs)));
                   p.negative_ratio = take(m, "negative_ratio", p.negative_ratio);
                   p.seed = static_cast<std::uint64_t>(take(m, "seed", static_cast<double>(p.seed)));
                 },
                 [&](NmfParams& p) {
                   p.factors = static_cast<Index>(std::lround(take(m, "factors", p.factors)));
                   p.iterations = static_cast<int>(std::lround(take(m, "iterations", p.iterations)));
                   p.seed = static_cast<std::uint64_t>(take(m, "seed", static_cast<double>(p.seed)));
                 },
             },
             out);
  if (!m.empty()) {
    throw std::invalid_argument("unknown parameter \"" + m.begin()->first + "\" for " +
                                std::string(family_name(family)));
  }
  validate(out);
  return out;
}

ItemScoresModel fit_top_popular(const InteractionMatrix& train) {
  ItemScoresModel model;
  model.scores.setZero(train.n_items());
  const Index* inner = train.values.innerIndexPtr();
  for (Index n = 0; n < train.nnz(); ++n) model.scores[inner[n]] += 1.0;
  return model;
}

Model fit(const HyperParams& params, const InteractionMatrix& train, const ItemContentMatrix* icm) {
  validate(params);
  Model model{params, ItemScoresModel{}};
  std::visit(Overloaded{
                 [&](const TopPopularParams&) { model.body = fit_top_popular(train); },
                 [&](const ItemKnnParams& p) {
                   if (icm == nullptr) {
                     throw std::invalid_argument("ItemKNNHybrid needs an item content matrix");
                   }
                   model.body = fit_itemknn_hybrid(train, *icm, p);
                 },
                 [&](const Rp3betaParams& p) { model.body = fit_rp3beta(train, p); },
                 [&](const EaseParams& p) { model.body = fit_ease(train, p); },
                 [&](const FunkSvdParams& p) { model.body = fit_funksvd(train, p); },
                 [&](const NmfParams& p) { model.body = fit_nmf(train, p); },
             },
             params);
  return model;
}

Recommender::Recommender(const Model& model, const InteractionMatrix& train)
    : model_(model), train_(train) {
  if (model.personalized()) popularity_ = fit_top_popular(train).scores;
}

bool Recommender::uses_fallback(Index user) const {
  return model_.personalized() && train_.row_nnz(user) == 0;
}

Eigen::VectorXd Recommender::scores(Index user) const {
  if (user < 0 || user >= train_.n_users()) throw std::out_of_range("user index out of range");
  if (uses_fallback(user)) return popularity_;
  const bool binary = uses_binary_profile(model_.family());
  return std::visit(
      Overloaded{
          [](const ItemScoresModel& m) -> Eigen::VectorXd { return m.scores; },
          [&](const SimilarityModel& m) -> Eigen::VectorXd {
            Eigen::VectorXd s = Eigen::VectorXd::Zero(train_.n_items());
            for (SparseRowMatrix<double>::InnerIterator it(train_.values, user); it; ++it) {
              const double x = binary ? 1.0 : it.value();
              for (SparseRowMatrix<double>::InnerIterator w(m.weights, it.col()); w; ++w) {
                s[w.col()] += x * w.value();
              }
            }
            return s;
          },
          [&](const DenseSimilarityModel& m) -> Eigen::VectorXd {
            Eigen::VectorXd s = Eigen::VectorXd::Zero(train_.n_items());
            for (SparseRowMatrix<double>::InnerIterator it(train_.values, user); it; ++it) {
              s.noalias() += (binary ? 1.0 : it.value()) * m.weights.row(it.col()).transpose();
            }
            return s;
          },
          [&](const FactorModel& m) -> Eigen::VectorXd {
            return m.item_factors * m.user_factors.row(user).transpose();
          },
      },
      model_.body);
}

RecommendationList Recommender::recommend(Index user, Index k, bool exclude_seen) const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const Eigen::VectorXd s = scores(user);
  std::vector<Index> seen;
  if (exclude_seen) {
    const auto begin = train_.values.outerIndexPtr()[user];
    const auto end = train_.values.outerIndexPtr()[user + 1];
    seen.assign(train_.values.innerIndexPtr() + begin, train_.values.innerIndexPtr() + end);
  }
  return top_k(s, seen, k);
}

RecommendationList recommend(const Model& model, const InteractionMatrix& train, Index user,
                             Index k, bool exclude_seen) {
  return Recommender(model, train).recommend(user, k, exclude_seen);
}

RecommendationList top_k(const Eigen::Ref<const Eigen::VectorXd>& scores,
                         const std::vector<Index>& excluded, Index k) {
  std::vector<Index> candidates;
  candidates.reserve(static_cast<std::size_t>(scores.size()));
  auto ex = excluded.begin();
  for (Index i = 0; i < scores.size(); ++i) {
    while (ex != excluded.end() && *ex < i) ++ex;
    if (ex != excluded.end() && *ex == i) continue;
    candidates.push_back(i);
  }
  const auto better = [&](Index a, Index b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + n, candidates.end(), better);
  candidates.resize(n);
  return RecommendationList{std::move(candidates)};
}

}  // namespace carousel
