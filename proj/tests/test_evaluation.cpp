#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <doctest.h>

#include "carousel/evaluation.hpp"
#include "synthetic.hpp"

using namespace carousel;

namespace {

DataSplit random_split(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  InteractionSet set;
  for (ExternalId u = 0; u < 60; ++u) {
    for (ExternalId i = 0; i < 40; ++i) {
      if (rng() % 5 == 0) set.records.push_back({u, i, 1.0 + static_cast<double>(rng() % 5), 0});
    }
  }
  return holdout_split(set, {0.7, 0.1, 0.2}, seed);
}

ModelSet random_models(const DataSplit& split) {
  ItemContentMatrix icm;
  icm.values.resize(split.train.n_items(), 0);
  ModelSet models;
  models.emplace("TopPopular", fit(TopPopularParams{}, split.train));
  models.emplace("EASE", fit(EaseParams{20.0, 1000}, split.train));
  models.emplace("RP3beta", fit(Rp3betaParams{30, 1.0, 0.4}, split.train));
  models.emplace("ItemKNNHybrid", fit(ItemKnnParams{30, 5.0, 1.0}, split.train, &icm));
  models.emplace("NMF", fit(NmfParams{4, 30, 2}, split.train));
  return models;
}

}  // namespace

TEST_CASE("config validation") {
  EvaluationConfig cfg;
  cfg.candidate_models = {"EASE"};
  CHECK_NOTHROW(cfg.validate());
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.k = 10;
  cfg.weights = {-1.0, 1.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.weights = {0.0, 0.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("a recommender that knows the test set scores 1") {
  const DataSplit split = random_split(1);
  EvaluationConfig cfg;
  cfg.k = 40;
  cfg.exclude_seen = false;
  // score each user's test items above everything else, per user
  for (Index u : evaluable_users(split.test, -1.0)) {
    Eigen::VectorXd scores = Eigen::VectorXd::Zero(split.train.n_items());
    for (SparseRowMatrix<double>::InnerIterator it(split.test.values, u); it; ++it) scores[it.col()] = 1.0;
    Model oracle_model{TopPopularParams{}, ItemScoresModel{scores}};
    const auto list = recommend(oracle_model, split.train, u, cfg.k, false);
    CHECK(ndcg_at_k(list, relevant_items(split.test, u), cfg.k) == doctest::Approx(1.0));
  }
}

TEST_CASE("zero evaluable users is an error") {
  DataSplit split = random_split(2);
  split.test = InteractionMatrix::from_triplets(split.train.n_users(), split.train.n_items(), {});
  const Model pop = fit(TopPopularParams{}, split.train);
  CHECK_THROWS(evaluate_individual(pop, split, EvaluationConfig{}));
}

TEST_CASE("empty fixed prefix reduces the page metric to the list metric") {
  const DataSplit split = random_split(3);
  const ModelSet models = random_models(split);
  EvaluationConfig cfg;
  for (const auto& [name, model] : models) {
    const Evaluation ind = evaluate_individual(model, split, cfg);
    const Evaluation page = evaluate_page({}, model, split, cfg);
    REQUIRE(ind.users == page.users);
    for (std::size_t n = 0; n < ind.per_user.size(); ++n) {
      CHECK(std::abs(ind.per_user[n] - page.per_user[n]) <= 1e-12);
    }
  }
}

TEST_CASE("the same model twice adds nothing in the second row") {
  const DataSplit split = random_split(4);
  const ModelSet models = random_models(split);
  EvaluationConfig cfg;
  const DiscountGrid one_row(1, cfg.k, cfg.weights), two_rows(2, cfg.k, cfg.weights);
  for (const auto& [name, model] : models) {
    const Evaluation page = evaluate_page({&model}, model, split, cfg);
    const auto lists = recommend_all(model, split.train, page.users, cfg.k, true);
    for (std::size_t n = 0; n < page.users.size(); ++n) {
      const auto rel = relevant_items(split.test, page.users[n]);
      const double gain = page_dcg2d(Page{{lists[n]}}, rel, one_row).gain;
      const double ideal = two_rows.ideal_gain(rel.size());
      CHECK(page.per_user[n] == doctest::Approx(gain / ideal).epsilon(1e-12));
    }
  }
}

TEST_CASE("a fixed prefix does not change the individual metric") {
  const DataSplit split = random_split(5);
  const ModelSet models = random_models(split);
  EvaluationConfig a, b;
  a.candidate_models = b.candidate_models = {"EASE", "NMF"};
  b.fixed_models = {"TopPopular"};
  const auto ra = rank_candidates(models, split, a), rb = rank_candidates(models, split, b);
  for (const auto& name : a.candidate_models) {
    CHECK(ra.row(name).individual_ndcg == rb.row(name).individual_ndcg);
  }
}

TEST_CASE("rank validity") {
  const DataSplit split = random_split(6);
  const ModelSet models = random_models(split);
  EvaluationConfig cfg;
  cfg.fixed_models = {"TopPopular"};
  cfg.candidate_models = {"EASE", "RP3beta", "ItemKNNHybrid", "NMF"};
  const auto report = rank_candidates(models, split, cfg);
  REQUIRE(report.rows.size() == 4);
  std::vector<int> ind, car;
  int delta_sum = 0;
  for (const auto& row : report.rows) {
    ind.push_back(row.individual_rank);
    car.push_back(row.carousel_rank);
    CHECK(row.delta_rank == row.individual_rank - row.carousel_rank);
    delta_sum += row.delta_rank;
  }
  std::sort(ind.begin(), ind.end());
  std::sort(car.begin(), car.end());
  CHECK(ind == std::vector<int>{1, 2, 3, 4});
  CHECK(car == std::vector<int>{1, 2, 3, 4});
  CHECK(delta_sum == 0);
  for (const auto& a : report.rows) {
    for (const auto& b : report.rows) {
      if (a.individual_ndcg > b.individual_ndcg) CHECK(a.individual_rank < b.individual_rank);
      if (a.carousel_ndcg2d > b.carousel_ndcg2d) CHECK(a.carousel_rank < b.carousel_rank);
    }
  }
  REQUIRE(report.baselines.size() == 1);
  CHECK(report.baselines[0].first == "TopPopular");
  CHECK_THROWS_AS(report.row("SLIM"), std::out_of_range);
}

TEST_CASE("rank ties go to the smaller name") {
  const DataSplit split = synthetic::reversal_split();
  ModelSet models = synthetic::reversal_models(split);
  models.emplace("AClone", models.at("PopClone"));
  EvaluationConfig cfg = synthetic::reversal_config();
  cfg.candidate_models = {"PopClone", "AClone"};
  const auto report = rank_candidates(models, split, cfg);
  CHECK(report.row("AClone").individual_rank == 1);
  CHECK(report.row("PopClone").individual_rank == 2);
  CHECK_THROWS_AS(
      [&] {
        cfg.candidate_models = {"PopClone"};
        rank_candidates(models, split, cfg);
      }(),
      std::invalid_argument);
}

TEST_CASE("dedup reverses the ranking on the synthetic catalog") {
  const DataSplit split = synthetic::reversal_split();
  const ModelSet models = synthetic::reversal_models(split);
  const auto report = rank_candidates(models, split, synthetic::reversal_config());
  CHECK(report.n_users_evaluated == 4);
  const auto& clone = report.row("PopClone");
  const auto& niche = report.row("Niche");
  CHECK(clone.individual_ndcg == doctest::Approx(synthetic::clone_individual()).epsilon(1e-12));
  CHECK(niche.individual_ndcg == doctest::Approx(synthetic::niche_individual()).epsilon(1e-12));
  CHECK(clone.carousel_ndcg2d == doctest::Approx(synthetic::clone_carousel()).epsilon(1e-12));
  CHECK(niche.carousel_ndcg2d == doctest::Approx(synthetic::niche_carousel()).epsilon(1e-12));
  CHECK(clone.individual_rank == 1);
  CHECK(niche.individual_rank == 2);
  CHECK(clone.carousel_rank == 2);
  CHECK(niche.carousel_rank == 1);
  CHECK(clone.delta_rank == -1);
  CHECK(niche.delta_rank == 1);
}

TEST_CASE("greedy page builder") {
  const DataSplit split = synthetic::reversal_split();
  ModelSet models = synthetic::reversal_models(split);
  models.emplace("M", models.at("PopClone"));
  models.emplace("M-copy", models.at("PopClone"));
  models.emplace("N", models.at("Niche"));
  EvaluationConfig cfg = synthetic::reversal_config();
  cfg.fixed_models.clear();
  const std::vector<std::string> pool{"M", "M-copy", "N"};

  SUBCASE("one row is the best individual model") {
    CHECK(greedy_page_builder(models, pool, 1, split, cfg) == std::vector<std::string>{"M"});
  }
  SUBCASE("the disjoint model is picked second") {
    CHECK(greedy_page_builder(models, pool, 2, split, cfg) == std::vector<std::string>{"M", "N"});
  }
  SUBCASE("exhausting the pool gives a permutation") {
    auto page = greedy_page_builder(models, pool, 3, split, cfg);
    std::sort(page.begin(), page.end());
    CHECK(page == pool);
  }
  SUBCASE("fixed rows condition the first pick") {
    cfg.fixed_models = {"TopPopular"};
    CHECK(greedy_page_builder(models, pool, 1, split, cfg) == std::vector<std::string>{"N"});
  }
  SUBCASE("pool smaller than the page") {
    CHECK_THROWS_AS(greedy_page_builder(models, pool, 4, split, cfg), std::invalid_argument);
  }
}

TEST_CASE("report csv") {
  const DataSplit split = synthetic::reversal_split();
  const auto report =
      rank_candidates(synthetic::reversal_models(split), split, synthetic::reversal_config());
  std::ostringstream out;
  report.write_csv(out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "model,individual_ndcg,carousel_ndcg2d,individual_rank,carousel_rank,delta_rank");
  std::getline(in, line);
  CHECK(line.rfind("TopPopular,", 0) == 0);
  CHECK(line.substr(line.size() - 4) == ",,,,");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    CHECK(std::count(line.begin(), line.end(), ',') == 5);
  }
  CHECK(rows == 2);
}

TEST_CASE("page heatmap counts hits per cell") {
  const DataSplit split = synthetic::reversal_split();
  const ModelSet models = synthetic::reversal_models(split);
  const auto cfg = synthetic::reversal_config();
  const auto grid =
      page_heatmap({&models.at("TopPopular")}, models.at("Niche"), split, cfg);
  // row 1 is [A,B]: A hits u0,u1; B hits u1,u3. row 2 is [D,E]: D hits u2, E hits u3
  CHECK(grid(0, 0) == 2);
  CHECK(grid(0, 1) == 2);
  CHECK(grid(1, 0) == 1);
  CHECK(grid(1, 1) == 1);
}

TEST_CASE("unnormalized page metric reports raw gain") {
  const DataSplit split = synthetic::reversal_split();
  const ModelSet models = synthetic::reversal_models(split);
  EvaluationConfig cfg = synthetic::reversal_config();
  cfg.normalize = false;
  const Evaluation page = evaluate_page({&models.at("TopPopular")}, models.at("Niche"), split, cfg);
  const double b2 = 1.0 / std::log2(3.0);
  CHECK(page.mean == doctest::Approx((1.0 + (1.0 + b2) + b2 + (b2 + 0.5)) / 4.0).epsilon(1e-12));
}
