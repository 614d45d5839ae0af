#include "carousel/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace carousel {

void Page::validate() const {
  if (carousels.empty()) throw std::invalid_argument("page has no carousels");
  const Index width = cols();
  for (std::size_t r = 0; r < carousels.size(); ++r) {
    if (carousels[r].size() != width) {
      throw std::invalid_argument("page is not rectangular: row " + std::to_string(r + 1) +
                                  " has " + std::to_string(carousels[r].size()) +
                                  " items, expected " + std::to_string(width));
    }
  }
}

RelevanceJudgments::RelevanceJudgments(std::vector<Index> items) : items_(std::move(items)) {
  std::sort(items_.begin(), items_.end());
  items_.erase(std::unique(items_.begin(), items_.end()), items_.end());
}

bool RelevanceJudgments::contains(Index item) const {
  return std::binary_search(items_.begin(), items_.end(), item);
}

RelevanceJudgments relevant_items(const InteractionMatrix& target, Index user, double threshold) {
  std::vector<Index> items;
  for (SparseRowMatrix<double>::InnerIterator it(target.values, user); it; ++it) {
    if (it.value() >= threshold) items.push_back(it.col());
  }
  return RelevanceJudgments(std::move(items));
}

void DiscountWeights::validate() const {
  if (!std::isfinite(row) || !std::isfinite(col) || row < 0.0 || col < 0.0) {
    throw std::invalid_argument("discount weights must be finite and non-negative");
  }
  if (row == 0.0 && col == 0.0) throw std::invalid_argument("discount weights are both zero");
}

double discount2d(Index row, Index col, const DiscountWeights& w) {
  return std::log2(w.row * (row - 1) + w.col * (col - 1) + 2.0);
}

std::vector<Cell> scan_order(Index rows, Index cols, const DiscountWeights& w) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("grid shape must be at least 1x1");
  std::vector<std::pair<double, Cell>> keyed;
  keyed.reserve(static_cast<std::size_t>(rows) * cols);
  for (Index r = 1; r <= rows; ++r) {
    for (Index c = 1; c <= cols; ++c) keyed.push_back({discount2d(r, c, w), Cell{r, c}});
  }
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<Cell> order;
  order.reserve(keyed.size());
  for (const auto& [d, cell] : keyed) order.push_back(cell);
  return order;
}

DiscountGrid::DiscountGrid(Index rows, Index cols, const DiscountWeights& w)
    : weights_(w), values_(rows, cols), order_(scan_order(rows, cols, w)) {
  w.validate();
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) values_(r, c) = discount2d(r + 1, c + 1, w);
  }
  ideal_prefix_.assign(order_.size() + 1, 0.0);
  for (std::size_t n = 0; n < order_.size(); ++n) {
    ideal_prefix_[n + 1] = ideal_prefix_[n] + 1.0 / at(order_[n]);
  }
}

double DiscountGrid::ideal_gain(Index n_relevant) const {
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(std::max<Index>(n_relevant, 0)),
                                       order_.size());
  return ideal_prefix_[n];
}

double ndcg_at_k(const RecommendationList& list, const RelevanceJudgments& rel, Index k) {
  if (rel.empty() || k < 1) return 0.0;
  double dcg = 0.0;
  const Index shown = std::min(k, list.size());
  for (Index i = 0; i < shown; ++i) {
    if (rel.contains(list.items[i])) dcg += 1.0 / std::log2(i + 2.0);
  }
  double idcg = 0.0;
  const Index n_ideal = std::min(rel.size(), k);
  for (Index i = 0; i < n_ideal; ++i) idcg += 1.0 / std::log2(i + 2.0);
  return dcg / idcg;
}

Dcg2d page_dcg2d(const Page& page, const RelevanceJudgments& rel, const DiscountGrid& grid) {
  page.validate();
  if (page.rows() != grid.rows() || page.cols() != grid.cols()) {
    throw std::invalid_argument("page shape does not match the discount grid");
  }
  Dcg2d out;
  if (rel.empty()) return out;
  std::vector<Index> rewarded;
  rewarded.reserve(static_cast<std::size_t>(rel.size()));
  for (const Cell& cell : grid.order()) {
    const Index item = page.carousels[cell.row - 1].items[cell.col - 1];
    if (!rel.contains(item)) continue;
    if (std::find(rewarded.begin(), rewarded.end(), item) != rewarded.end()) continue;
    rewarded.push_back(item);
    out.gain += 1.0 / grid.at(cell);
  }
  out.ideal = grid.ideal_gain(rel.size());
  return out;
}

double page_ndcg2d(const Page& page, const RelevanceJudgments& rel, const DiscountWeights& w) {
  page.validate();
  const DiscountGrid grid(page.rows(), page.cols(), w);
  return page_dcg2d(page, rel, grid).normalized();
}

Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> hit_heatmap(
    Index rows, Index cols, std::span<const Page> pages, std::span<const RelevanceJudgments> rels) {
  if (pages.size() != rels.size()) {
    throw std::invalid_argument("hit_heatmap needs one relevance set per page");
  }
  Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> counts;
  counts.setZero(rows, cols);
  for (std::size_t u = 0; u < pages.size(); ++u) {
    const Page& page = pages[u];
    page.validate();
    if (page.rows() != counts.rows() || page.cols() != counts.cols()) {
      throw std::invalid_argument("hit_heatmap pages differ in shape");
    }
    for (Index r = 0; r < page.rows(); ++r) {
      for (Index c = 0; c < page.cols(); ++c) {
        if (rels[u].contains(page.carousels[r].items[c])) ++counts(r, c);
      }
    }
  }
  return counts;
}

}  // namespace carousel
