// Acceptance suite: one PASS/FAIL/SKIP line per criterion. Exit status is 0
// iff no criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "carousel/cli.hpp"
#include "carousel/evaluation.hpp"
#include "carousel/kernels.hpp"
#include "carousel/metrics.hpp"
#include "carousel/recommenders.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace carousel;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

struct Outcome {
  Status status;
  std::string detail;
};

Outcome pass(std::string d) { return {Status::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Status::Fail, std::move(d)}; }
Outcome skip(std::string d) { return {Status::Skip, std::move(d)}; }

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Every page shape with R*C <= 9 over a 5-item catalog, every arrangement of
// distinct items per row, every relevance subset.
Outcome metric_oracle() {
  constexpr Index kCatalog = 5;
  const DiscountWeights w{1, 1};
  std::vector<RelevanceJudgments> subsets;
  std::vector<std::vector<Index>> subset_items;
  for (unsigned mask = 0; mask < (1u << kCatalog); ++mask) {
    std::vector<Index> items;
    for (Index i = 0; i < kCatalog; ++i) {
      if (mask & (1u << i)) items.push_back(i);
    }
    subsets.emplace_back(items);
    subset_items.push_back(items);
  }

  double worst = 0.0;
  long pages = 0, with_duplicates = 0, comparisons = 0;
  for (Index cols = 1; cols <= kCatalog; ++cols) {
    // all ordered selections of `cols` distinct items
    std::vector<std::vector<Index>> rows_pool;
    std::vector<Index> perm(kCatalog);
    std::function<void(std::vector<Index>&, unsigned)> extend = [&](std::vector<Index>& row,
                                                                     unsigned used) {
      if (static_cast<Index>(row.size()) == cols) {
        rows_pool.push_back(row);
        return;
      }
      for (Index i = 0; i < kCatalog; ++i) {
        if (used & (1u << i)) continue;
        row.push_back(i);
        extend(row, used | (1u << i));
        row.pop_back();
      }
    };
    std::vector<Index> scratch;
    extend(scratch, 0);

    for (Index rows = 1; rows * cols <= 9; ++rows) {
      const DiscountGrid grid(rows, cols, w);
      // oracle ideal terms: sorted discounts of the full shape
      std::vector<double> discounts;
      for (Index r = 1; r <= rows; ++r) {
        for (Index c = 1; c <= cols; ++c) discounts.push_back(oracle::cell_discount(r, c, w));
      }
      std::sort(discounts.begin(), discounts.end());
      std::vector<double> ideal_prefix(discounts.size() + 1, 0.0);
      for (std::size_t n = 0; n < discounts.size(); ++n) {
        ideal_prefix[n + 1] = ideal_prefix[n] + 1.0 / discounts[n];
      }

      Page page;
      page.carousels.assign(static_cast<std::size_t>(rows), RecommendationList{});
      std::vector<std::size_t> choice(static_cast<std::size_t>(rows), 0);
      for (;;) {
        for (Index r = 0; r < rows; ++r) page.carousels[r].items = rows_pool[choice[r]];
        ++pages;
        // oracle: each item's earliest cell by (discount, row, col)
        std::vector<double> first(kCatalog, 0.0);
        std::vector<bool> seen(kCatalog, false);
        bool duplicate = false;
        for (Index r = 1; r <= rows; ++r) {
          for (Index c = 1; c <= cols; ++c) {
            const Index item = page.carousels[r - 1].items[c - 1];
            const double d = oracle::cell_discount(r, c, w);
            if (seen[item]) {
              duplicate = true;
              if (d < first[item]) first[item] = d;
            } else {
              seen[item] = true;
              first[item] = d;
            }
          }
        }
        with_duplicates += duplicate;
        for (std::size_t s = 0; s < subsets.size(); ++s) {
          double gain = 0.0;
          for (Index item : subset_items[s]) {
            if (seen[item]) gain += 1.0 / first[item];
          }
          const std::size_t n = std::min(subset_items[s].size(), discounts.size());
          const double expected = n == 0 ? 0.0 : gain / ideal_prefix[n];
          const Dcg2d got = page_dcg2d(page, subsets[s], grid);
          worst = std::max({worst, std::abs(got.normalized() - expected),
                            std::abs(got.gain - gain), std::abs(got.ideal - ideal_prefix[n])});
          ++comparisons;
        }
        std::size_t r = 0;
        while (r < choice.size() && ++choice[r] == rows_pool.size()) choice[r++] = 0;
        if (r == choice.size()) break;
      }
    }
  }
  const std::string detail = std::to_string(pages) + " pages (" + std::to_string(with_duplicates) +
                             " with cross-carousel duplicates), " + std::to_string(comparisons) +
                             " comparisons, max abs diff " + sci(worst);
  return worst <= 1e-12 ? pass(detail) : fail(detail);
}

Outcome reduction_law() {
  std::mt19937_64 rng(101);
  double worst = 0.0;
  for (int n = 0; n < 10000; ++n) {
    const Index k = 1 + static_cast<Index>(rng() % 20);
    const Index catalog = k + static_cast<Index>(rng() % 30);
    const Page page = oracle::random_page(1, k, catalog, rng);
    const RelevanceJudgments rel = oracle::random_relevance(catalog, rng);
    worst = std::max(worst, std::abs(page_ndcg2d(page, rel, {1, 1}) -
                                     ndcg_at_k(page.carousels[0], rel, k)));
  }
  const std::string detail = "10000 single-carousel pages, max abs diff " + sci(worst);
  return worst <= 1e-12 ? pass(detail) : fail(detail);
}

Outcome dedup_law() {
  std::mt19937_64 rng(202);
  int violations = 0;
  for (int n = 0; n < 1000; ++n) {
    const Index rows = 1 + static_cast<Index>(rng() % 5);
    const Index cols = 1 + static_cast<Index>(rng() % 10);
    const Index catalog = cols + static_cast<Index>(rng() % 15);
    const DiscountWeights w{0.25 + 0.25 * static_cast<double>(rng() % 8),
                            0.25 + 0.25 * static_cast<double>(rng() % 8)};
    Page page = oracle::random_page(rows, cols, catalog, rng);
    const RelevanceJudgments rel = oracle::random_relevance(catalog, rng);
    const double before = page_dcg2d(page, rel, DiscountGrid(rows, cols, w)).gain;
    page.carousels.push_back(page.carousels[rng() % static_cast<std::uint64_t>(rows)]);
    const double after = page_dcg2d(page, rel, DiscountGrid(rows + 1, cols, w)).gain;
    violations += after - before != 0.0;
  }
  const std::string detail = "1000 pages, " + std::to_string(violations) + " with nonzero added gain";
  return violations == 0 ? pass(detail) : fail(detail);
}

Outcome ease_correctness() {
  std::mt19937_64 rng(303);
  double worst = 0.0;
  bool diagonal_zero = true;
  for (int n = 0; n < 200; ++n) {
    const std::size_t items = 2 + rng() % 19, users = 1 + rng() % 40;
    std::vector<std::vector<int>> x(users, std::vector<int>(items, 0));
    for (auto& row : x) {
      for (auto& v : row) v = rng() % 3 == 0;
    }
    const double l2 = std::exp(std::log(0.1) + (std::log(1000.0) - std::log(0.1)) *
                                                   static_cast<double>(rng() >> 11) * 0x1.0p-53);
    const auto b = fit_ease(oracle::dense_to_matrix(x), {l2, 100}).weights;
    const auto expected = oracle::ease_by_inverse(x, l2);
    for (std::size_t i = 0; i < items; ++i) {
      diagonal_zero = diagonal_zero && b(static_cast<Index>(i), static_cast<Index>(i)) == 0.0;
      for (std::size_t j = 0; j < items; ++j) {
        worst = std::max(worst, std::abs(b(static_cast<Index>(i), static_cast<Index>(j)) - expected[i][j]));
      }
    }
  }
  const std::string detail = "200 matrices up to 20 items, max abs diff " + sci(worst) +
                             (diagonal_zero ? ", diagonal exactly 0" : ", nonzero diagonal");
  return worst <= 1e-8 && diagonal_zero ? pass(detail) : fail(detail);
}

Outcome rp3beta_correctness() {
  double worst = 0.0;
  long graphs = 0;
  for (std::size_t users = 1; users <= 3; ++users) {
    for (std::size_t items = 1; items <= 3; ++items) {
      const std::size_t cells = users * items;
      // the empty graph has no walks and is outside the fit's domain
      for (unsigned mask = 1; mask < (1u << cells); ++mask) {
        std::vector<std::vector<int>> x(users, std::vector<int>(items, 0));
        for (std::size_t c = 0; c < cells; ++c) x[c / items][c % items] = (mask >> c) & 1u;
        const auto s = fit_rp3beta(oracle::dense_to_matrix(x), {10, 1.0, 0.0}).weights;
        for (std::size_t i = 0; i < items; ++i) {
          for (std::size_t j = 0; j < items; ++j) {
            const double expected = i == j ? 0.0 : oracle::two_hop_probability(x, i, j);
            worst = std::max(worst, std::abs(s.coeff(static_cast<Index>(i), static_cast<Index>(j)) - expected));
          }
        }
        ++graphs;
      }
    }
  }
  const std::string detail = std::to_string(graphs) + " non-empty graphs, max abs diff " + sci(worst);
  return worst <= 1e-12 ? pass(detail) : fail(detail);
}

Outcome funksvd_gradient() {
  // 3 users x 3 items, every cell rated, 3 latent factors
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Eigen::Matrix3d users, items;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      users(r, c) = uni(rng);
      items(r, c) = uni(rng);
    }
  }
  const double ratings[3][3] = {{5, 3, 1}, {4, 2, 2}, {1, 4.5, 3}};
  constexpr double h = 1e-5, reg = 0.02;
  double worst = 0.0;
  for (int u = 0; u < 3; ++u) {
    for (int i = 0; i < 3; ++i) {
      const Eigen::Vector3d pu = users.row(u).transpose(), qi = items.row(i).transpose();
      Eigen::Vector3d gu, gi, fu, fi;
      funksvd_sample_gradient(pu, qi, ratings[u][i], reg, gu, gi);
      for (int k = 0; k < 3; ++k) {
        Eigen::Vector3d a = pu, b = pu;
        a[k] += h;
        b[k] -= h;
        fu[k] = (funksvd_sample_loss(a, qi, ratings[u][i], reg) -
                 funksvd_sample_loss(b, qi, ratings[u][i], reg)) / (2 * h);
        a = qi;
        b = qi;
        a[k] += h;
        b[k] -= h;
        fi[k] = (funksvd_sample_loss(pu, a, ratings[u][i], reg) -
                 funksvd_sample_loss(pu, b, ratings[u][i], reg)) / (2 * h);
      }
      worst = std::max({worst, (gu - fu).norm() / fu.norm(), (gi - fi).norm() / fi.norm()});
    }
  }
  const std::string detail = "9 samples, max relative error " + sci(worst);
  return worst < 1e-4 ? pass(detail) : fail(detail);
}

Outcome nmf_properties() {
  double worst_increase = 0.0, min_factor = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::vector<Eigen::Triplet<double, Index>> t;
    for (Index u = 0; u < 10; ++u) {
      for (Index i = 0; i < 8; ++i) {
        if (rng() % 2) t.emplace_back(u, i, 1.0 + static_cast<double>(rng() % 5));
      }
    }
    const auto x = InteractionMatrix::from_triplets(10, 8, t);
    const Eigen::MatrixXd dense(x.values);
    double previous = std::numeric_limits<double>::infinity();
    fit_nmf(x, {3, 200, seed}, [&](int, const Eigen::MatrixXd& w, const Eigen::MatrixXd& h) {
      const double obj = (dense - w * h.transpose()).squaredNorm();
      if (std::isfinite(previous)) worst_increase = std::max(worst_increase, obj - previous);
      previous = obj;
      min_factor = std::min({min_factor, w.minCoeff(), h.minCoeff()});
    });
  }
  const std::string detail = "100 seeds, max objective increase " + sci(worst_increase) +
                             ", min factor " + sci(min_factor);
  return worst_increase <= 1e-9 && min_factor >= 0.0 ? pass(detail) : fail(detail);
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "carousel");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, std::cerr);
}

std::map<std::string, std::vector<std::string>> read_report(const fs::path& path) {
  std::map<std::string, std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream s(line);
    std::string f;
    while (std::getline(s, f, ',')) fields.push_back(f);
    rows[fields.at(0)] = fields;
  }
  return rows;
}

std::string write_config(const fs::path& dir, const std::string& ratings, const std::string& movies,
                         const std::string& tags, const fs::path& out) {
  const auto path = dir / "config.json";
  fs::create_directories(dir);
  std::ofstream cfg(path);
  cfg << R"({"dataset": {"ratings": ")" << ratings << R"(", "movies": ")" << movies
      << R"(", "tags": ")" << tags << R"("},
  "split": {"ratios": [0.8, 0.1, 0.1]}, "seed": 42, "k": 10, "w_row": 1, "w_col": 1,
  "fixed": ["TopPopular"],
  "models": {"TopPopular": "default", "ItemKNNHybrid": "tuned", "RP3beta": "tuned",
             "EASE": "tuned", "FunkSVD": "tuned", "NMF": "tuned"},
  "tuning": {"budget": 50}, "out": ")"
      << out.string() << R"("})";
  return path.string();
}

const std::vector<std::string> kPersonalized{"ItemKNNHybrid", "RP3beta", "EASE", "FunkSVD", "NMF"};

Outcome ml100k_sanity() {
  const fs::path data(CAROUSEL_ML100K_DIR);
  if (!fs::exists(data / "u.data") || !fs::exists(data / "movies.dat")) {
    return fail("ML-100k not found in " + data.string() + "; run tools/fetch_ml100k.py");
  }
  const fs::path work = fs::path(CAROUSEL_ACCEPTANCE_TMP) / "ml100k";
  fs::remove_all(work);
  const auto config = write_config(work, (data / "u.data").string(),
                                   (data / "movies.dat").string(), "", work / "run");
  const auto start = std::chrono::steady_clock::now();
  if (cli({"tune", "--config", config}) != 0) return fail("tune failed");
  if (cli({"evaluate", "--config", config}) != 0) return fail("evaluate failed");
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto report = read_report(work / "run" / "report.csv");
  const double top_pop = std::stod(report.at("TopPopular").at(1));
  std::string detail = "TopPopular " + sci(top_pop);
  bool ok = true;
  for (const auto& name : kPersonalized) {
    const double v = std::stod(report.at(name).at(1));
    detail += ", " + name + " " + sci(v);
    ok = ok && v > top_pop;
  }
  detail += "; tune+evaluate " + std::to_string(static_cast<int>(seconds)) + " s";
  ok = ok && seconds < 600.0;
  return ok ? pass(detail) : fail(detail);
}

Outcome rank_reversal() {
  const DataSplit split = synthetic::reversal_split();
  const auto report =
      rank_candidates(synthetic::reversal_models(split), split, synthetic::reversal_config());
  const auto& niche = report.row("Niche");
  const auto& clone = report.row("PopClone");
  const std::string detail = "Niche individual rank " + std::to_string(niche.individual_rank) +
                             " -> carousel rank " + std::to_string(niche.carousel_rank) +
                             " (NDCG " + sci(niche.individual_ndcg) + ", NDCG2D " +
                             sci(niche.carousel_ndcg2d) + " vs clone " + sci(clone.carousel_ndcg2d) +
                             ")";
  return niche.individual_rank == 2 && niche.carousel_rank == 1 && clone.carousel_rank == 2
             ? pass(detail)
             : fail(detail);
}

Outcome ml10m_reference() {
  const fs::path data(CAROUSEL_ML10M_DIR);
  if (!fs::exists(data / "ratings.dat")) {
    return skip("ML-10M not found in " + data.string() + "; criteria 1-9 constitute acceptance");
  }
  const fs::path work = fs::path(CAROUSEL_ACCEPTANCE_TMP) / "ml10m";
  fs::remove_all(work);
  const std::string tags = fs::exists(data / "tags.dat") ? (data / "tags.dat").string() : "";
  const auto config = write_config(work, (data / "ratings.dat").string(),
                                   (data / "movies.dat").string(), tags, work / "run");
  const auto start = std::chrono::steady_clock::now();
  if (cli({"tune", "--config", config}) != 0) return fail("tune failed");
  if (cli({"evaluate", "--config", config}) != 0) return fail("evaluate failed");
  const double hours =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 3600.0;

  // reference table: individual NDCG@10 and NDCG2D under a fixed TopPopular row
  const std::map<std::string, std::pair<double, double>> reference{
      {"ItemKNNHybrid", {0.2174, 0.2148}}, {"RP3beta", {0.2160, 0.2035}},
      {"EASE", {0.2566, 0.2293}},          {"FunkSVD", {0.2307, 0.2373}},
      {"NMF", {0.1974, 0.2281}}};
  const auto report = read_report(work / "run" / "report.csv");
  const double top_pop = std::stod(report.at("TopPopular").at(1));
  bool ok = std::abs(top_pop - 0.0983) <= 0.015;
  std::string detail = "TopPopular " + sci(top_pop);
  for (const auto& [name, ref] : reference) {
    const double ind = std::stod(report.at(name).at(1)), car = std::stod(report.at(name).at(2));
    ok = ok && std::abs(ind - ref.first) <= 0.03 && std::abs(car - ref.second) <= 0.03;
    detail += ", " + name + " " + sci(ind) + "/" + sci(car) + " (ranks " + report.at(name).at(3) +
              "/" + report.at(name).at(4) + ")";
  }
  detail += "; " + sci(hours) + " h";
  ok = ok && hours <= 4.0;
  return ok ? pass(detail) : fail(detail);
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"metric oracle equivalence", metric_oracle},
      {"reduction law", reduction_law},
      {"dedup law", dedup_law},
      {"EASE correctness", ease_correctness},
      {"RP3beta correctness", rp3beta_correctness},
      {"FunkSVD gradient check", funksvd_gradient},
      {"NMF properties", nmf_properties},
      {"tuned models beat popularity (ML-100k)", ml100k_sanity},
      {"rank reversal", rank_reversal},
      {"reference table (ML-10M)", ml10m_reference},
  };
  int failures = 0;
  for (std::size_t n = 0; n < criteria.size(); ++n) {
    Outcome o;
    try {
      o = criteria[n].second();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* label = o.status == Status::Pass ? "PASS" : o.status == Status::Fail ? "FAIL" : "SKIP";
    std::printf("[%s] %zu. %s: %s\n", label, n + 1, criteria[n].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failures += o.status == Status::Fail;
  }
  return failures == 0 ? 0 : 1;
}
