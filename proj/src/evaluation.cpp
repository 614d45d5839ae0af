#include "carousel/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <set>
#include <stdexcept>

namespace carousel {
namespace {

using UserLists = std::vector<RecommendationList>;

std::vector<RelevanceJudgments> judgments(const InteractionMatrix& target,
                                          const std::vector<Index>& users, double threshold) {
  std::vector<RelevanceJudgments> rels;
  rels.reserve(users.size());
  for (Index u : users) rels.push_back(relevant_items(target, u, threshold));
  return rels;
}

double mean_of(const std::vector<double>& values) {
  // fixed left-to-right order keeps the mean independent of how values were produced
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

void require_users(const std::vector<Index>& users) {
  if (users.empty()) throw std::runtime_error("no users with relevant interactions to evaluate");
}

Evaluation individual_from_lists(const UserLists& lists, const std::vector<Index>& users,
                                 const std::vector<RelevanceJudgments>& rels, Index k) {
  Evaluation ev;
  ev.users = users;
  ev.per_user.reserve(users.size());
  for (std::size_t n = 0; n < users.size(); ++n) ev.per_user.push_back(ndcg_at_k(lists[n], rels[n], k));
  ev.mean = mean_of(ev.per_user);
  return ev;
}

Page page_for(const std::vector<const UserLists*>& rows, std::size_t user_slot) {
  Page page;
  page.carousels.reserve(rows.size());
  for (const UserLists* lists : rows) page.carousels.push_back((*lists)[user_slot]);
  return page;
}

Evaluation page_from_lists(const std::vector<const UserLists*>& rows,
                           const std::vector<Index>& users,
                           const std::vector<RelevanceJudgments>& rels,
                           const EvaluationConfig& cfg) {
  const DiscountGrid grid(static_cast<Index>(rows.size()), cfg.k, cfg.weights);
  Evaluation ev;
  ev.users = users;
  ev.per_user.reserve(users.size());
  for (std::size_t n = 0; n < users.size(); ++n) {
    const Dcg2d d = page_dcg2d(page_for(rows, n), rels[n], grid);
    ev.per_user.push_back(cfg.normalize ? d.normalized() : d.gain);
  }
  ev.mean = mean_of(ev.per_user);
  return ev;
}

const Model& lookup(const ModelSet& models, const std::string& name) {
  const auto it = models.find(name);
  if (it == models.end()) throw std::invalid_argument("no trained model named \"" + name + "\"");
  return it->second;
}

// Lists per model name, computed once.
class ListCache {
 public:
  ListCache(const ModelSet& models, const DataSplit& split, const std::vector<Index>& users,
            const EvaluationConfig& cfg)
      : models_(models), split_(split), users_(users), cfg_(cfg) {}

  const UserLists& get(const std::string& name) {
    auto it = lists_.find(name);
    if (it == lists_.end()) {
      it = lists_
               .emplace(name, recommend_all(lookup(models_, name), split_.train, users_, cfg_.k,
                                            cfg_.exclude_seen))
               .first;
    }
    return it->second;
  }

 private:
  const ModelSet& models_;
  const DataSplit& split_;
  const std::vector<Index>& users_;
  const EvaluationConfig& cfg_;
  std::map<std::string, UserLists> lists_;
};

std::vector<int> ranks_by(const std::vector<MetricRow>& rows, double MetricRow::*metric) {
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double va = rows[a].*metric, vb = rows[b].*metric;
    return va > vb || (va == vb && rows[a].model < rows[b].model);
  });
  std::vector<int> rank(rows.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) rank[order[pos]] = static_cast<int>(pos + 1);
  return rank;
}

}  // namespace

void EvaluationConfig::validate() const {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  weights.validate();
}

std::vector<Index> evaluable_users(const InteractionMatrix& target, double threshold) {
  std::vector<Index> users;
  for (Index u = 0; u < target.n_users(); ++u) {
    for (SparseRowMatrix<double>::InnerIterator it(target.values, u); it; ++it) {
      if (it.value() >= threshold) {
        users.push_back(u);
        break;
      }
    }
  }
  return users;
}

std::vector<RecommendationList> recommend_all(const Model& model, const InteractionMatrix& train,
                                              const std::vector<Index>& users, Index k,
                                              bool exclude_seen) {
  const Recommender rec(model, train);
  std::vector<RecommendationList> lists;
  lists.reserve(users.size());
  for (Index u : users) {
    RecommendationList list = rec.recommend(u, k, exclude_seen);
    list.items.resize(static_cast<std::size_t>(k), kNoItem);
    lists.push_back(std::move(list));
  }
  return lists;
}

Evaluation evaluate_individual(const Model& model, const InteractionMatrix& train,
                               const InteractionMatrix& target, const EvaluationConfig& cfg) {
  cfg.validate();
  const auto users = evaluable_users(target, cfg.relevance_threshold);
  require_users(users);
  const auto rels = judgments(target, users, cfg.relevance_threshold);
  const auto lists = recommend_all(model, train, users, cfg.k, cfg.exclude_seen);
  return individual_from_lists(lists, users, rels, cfg.k);
}

Evaluation evaluate_individual(const Model& model, const DataSplit& split,
                               const EvaluationConfig& cfg) {
  return evaluate_individual(model, split.train, split.test, cfg);
}

Evaluation evaluate_page(const std::vector<const Model*>& fixed, const Model& candidate,
                         const DataSplit& split, const EvaluationConfig& cfg) {
  cfg.validate();
  const auto users = evaluable_users(split.test, cfg.relevance_threshold);
  require_users(users);
  const auto rels = judgments(split.test, users, cfg.relevance_threshold);
  std::vector<UserLists> lists;
  lists.reserve(fixed.size() + 1);
  for (const Model* m : fixed) {
    lists.push_back(recommend_all(*m, split.train, users, cfg.k, cfg.exclude_seen));
  }
  lists.push_back(recommend_all(candidate, split.train, users, cfg.k, cfg.exclude_seen));
  std::vector<const UserLists*> rows;
  for (const auto& l : lists) rows.push_back(&l);
  return page_from_lists(rows, users, rels, cfg);
}

const MetricRow& MetricReport::row(const std::string& model) const {
  for (const auto& r : rows) {
    if (r.model == model) return r;
  }
  throw std::out_of_range("no report row for " + model);
}

void MetricReport::write_csv(std::ostream& out) const {
  out << "model,individual_ndcg,carousel_ndcg2d,individual_rank,carousel_rank,delta_rank\n";
  for (const auto& [name, value] : baselines) {
    out << name << ',' << format_double(value) << ",,,,\n";
  }
  for (const auto& r : rows) {
    out << r.model << ',' << format_double(r.individual_ndcg) << ','
        << format_double(r.carousel_ndcg2d) << ',' << r.individual_rank << ',' << r.carousel_rank
        << ',' << r.delta_rank << '\n';
  }
}

MetricReport rank_candidates(const ModelSet& models, const DataSplit& split,
                             const EvaluationConfig& cfg) {
  cfg.validate();
  if (cfg.candidate_models.size() < 2) {
    throw std::invalid_argument("ranking needs at least two candidate models");
  }
  const auto users = evaluable_users(split.test, cfg.relevance_threshold);
  require_users(users);
  const auto rels = judgments(split.test, users, cfg.relevance_threshold);
  ListCache cache(models, split, users, cfg);

  MetricReport report;
  report.n_users_evaluated = users.size();
  std::vector<const UserLists*> rows;
  for (const auto& name : cfg.fixed_models) {
    rows.push_back(&cache.get(name));
    report.baselines.emplace_back(name, individual_from_lists(*rows.back(), users, rels, cfg.k).mean);
  }
  rows.push_back(nullptr);
  for (const auto& name : cfg.candidate_models) {
    const UserLists& lists = cache.get(name);
    rows.back() = &lists;
    MetricRow row;
    row.model = name;
    row.individual_ndcg = individual_from_lists(lists, users, rels, cfg.k).mean;
    row.carousel_ndcg2d = page_from_lists(rows, users, rels, cfg).mean;
    report.rows.push_back(std::move(row));
  }
  const auto individual = ranks_by(report.rows, &MetricRow::individual_ndcg);
  const auto carousel = ranks_by(report.rows, &MetricRow::carousel_ndcg2d);
  for (std::size_t n = 0; n < report.rows.size(); ++n) {
    report.rows[n].individual_rank = individual[n];
    report.rows[n].carousel_rank = carousel[n];
    report.rows[n].delta_rank = individual[n] - carousel[n];
  }
  return report;
}

std::vector<std::string> greedy_page_builder(const ModelSet& models,
                                             const std::vector<std::string>& pool, Index n_rows,
                                             const DataSplit& split, const EvaluationConfig& cfg) {
  cfg.validate();
  std::set<std::string> remaining(pool.begin(), pool.end());
  for (const auto& name : cfg.fixed_models) remaining.erase(name);
  if (n_rows < 0 || static_cast<std::size_t>(n_rows) > remaining.size()) {
    throw std::invalid_argument("pool has fewer models than requested rows");
  }
  const auto users = evaluable_users(split.test, cfg.relevance_threshold);
  require_users(users);
  const auto rels = judgments(split.test, users, cfg.relevance_threshold);
  ListCache cache(models, split, users, cfg);

  std::vector<const UserLists*> rows;
  for (const auto& name : cfg.fixed_models) rows.push_back(&cache.get(name));
  std::vector<std::string> chosen;
  for (Index step = 0; step < n_rows; ++step) {
    const std::string* best = nullptr;
    double best_value = 0.0;
    rows.push_back(nullptr);
    for (const auto& name : remaining) {
      rows.back() = &cache.get(name);
      const double value = page_from_lists(rows, users, rels, cfg).mean;
      if (best == nullptr || value > best_value) {
        best = &name;
        best_value = value;
      }
    }
    rows.back() = &cache.get(*best);
    chosen.push_back(*best);
    remaining.erase(chosen.back());
  }
  return chosen;
}

Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> page_heatmap(
    const std::vector<const Model*>& fixed, const Model& candidate, const DataSplit& split,
    const EvaluationConfig& cfg) {
  cfg.validate();
  const auto users = evaluable_users(split.test, cfg.relevance_threshold);
  const auto rels = judgments(split.test, users, cfg.relevance_threshold);
  std::vector<UserLists> lists;
  for (const Model* m : fixed) {
    lists.push_back(recommend_all(*m, split.train, users, cfg.k, cfg.exclude_seen));
  }
  lists.push_back(recommend_all(candidate, split.train, users, cfg.k, cfg.exclude_seen));
  std::vector<Page> pages(users.size());
  for (std::size_t n = 0; n < users.size(); ++n) {
    for (const auto& l : lists) pages[n].carousels.push_back(l[n]);
  }
  return hit_heatmap(static_cast<Index>(lists.size()), cfg.k, pages, rels);
}

}  // namespace carousel
