#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "carousel/data.hpp"

namespace carousel {

/// Marks an empty slot, used to pad lists that ran out of candidate items.
inline constexpr Index kNoItem = -1;

/// A ranked list of item indices. Items are unique within one list.
struct RecommendationList {
  std::vector<Index> items;

  Index size() const { return static_cast<Index>(items.size()); }
  bool operator==(const RecommendationList&) const = default;
};

/// Stack of carousels, one row each. Rows must share a length; the same item
/// may appear in several rows.
struct Page {
  std::vector<RecommendationList> carousels;

  Index rows() const { return static_cast<Index>(carousels.size()); }
  Index cols() const { return carousels.empty() ? 0 : carousels.front().size(); }
  /// Throws std::invalid_argument on an empty or ragged page.
  void validate() const;
};

/// Binary relevance for one user: a sorted set of item indices.
class RelevanceJudgments {
 public:
  RelevanceJudgments() = default;
  explicit RelevanceJudgments(std::vector<Index> items);

  bool contains(Index item) const;
  Index size() const { return static_cast<Index>(items_.size()); }
  bool empty() const { return items_.empty(); }
  const std::vector<Index>& items() const { return items_; }

 private:
  std::vector<Index> items_;
};

/// Items of `user` in `target` whose rating is >= `threshold`. The default
/// threshold counts every interaction as relevant.
RelevanceJudgments relevant_items(const InteractionMatrix& target, Index user,
                                  double threshold = -1.0);

struct DiscountWeights {
  double row = 1.0;
  double col = 1.0;

  /// Throws std::invalid_argument on negative, non-finite or all-zero weights.
  void validate() const;
};

/// 1-indexed grid coordinate.
struct Cell {
  Index row = 1;
  Index col = 1;
  bool operator==(const Cell&) const = default;
};

/// log2(w_row (row-1) + w_col (col-1) + 2). Equals 1 at (1,1) and reduces to
/// the list discount log2(col+1) on the first row when w_col = 1.
double discount2d(Index row, Index col, const DiscountWeights& w);

/// All cells of an R x C grid by ascending discount, ties by (row, col).
std::vector<Cell> scan_order(Index rows, Index cols, const DiscountWeights& w);

/// Discounts and scan order for one page shape, reusable across users.
class DiscountGrid {
 public:
  DiscountGrid(Index rows, Index cols, const DiscountWeights& w);

  Index rows() const { return static_cast<Index>(values_.rows()); }
  Index cols() const { return static_cast<Index>(values_.cols()); }
  const DiscountWeights& weights() const { return weights_; }
  double at(Cell c) const { return values_(c.row - 1, c.col - 1); }
  const Eigen::MatrixXd& values() const { return values_; }
  const std::vector<Cell>& order() const { return order_; }
  /// Best achievable gain for `n_relevant` relevant items on this shape.
  double ideal_gain(Index n_relevant) const;

 private:
  DiscountWeights weights_;
  Eigen::MatrixXd values_;
  std::vector<Cell> order_;
  std::vector<double> ideal_prefix_;  // ideal_prefix_[n] = sum of the n best 1/discount
};

/// Binary NDCG of the first k positions. Zero when `rel` is empty.
double ndcg_at_k(const RecommendationList& list, const RelevanceJudgments& rel, Index k);

/// Unnormalized DCG2D and its ideal for one page.
struct Dcg2d {
  double gain = 0.0;
  double ideal = 0.0;

  double normalized() const { return ideal > 0.0 ? gain / ideal : 0.0; }
};

/// Walks the page in scan order and rewards each relevant item once, at the
/// first cell where it is seen.
Dcg2d page_dcg2d(const Page& page, const RelevanceJudgments& rel, const DiscountGrid& grid);
double page_ndcg2d(const Page& page, const RelevanceJudgments& rel, const DiscountWeights& w);

/// Per-cell count of users whose item at that cell is relevant, duplicates
/// included. Every page must have shape rows x cols.
Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic> hit_heatmap(
    Index rows, Index cols, std::span<const Page> pages, std::span<const RelevanceJudgments> rels);

/// "row,col,value" CSV, 1-indexed, row-major.
template <typename Derived>
void write_grid_csv(std::ostream& out, const Eigen::DenseBase<Derived>& grid);

}  // namespace carousel

#include "carousel/metrics_inl.hpp"
