#include <algorithm>
#include <cmath>
#include <string>

#include "carousel/kernels.hpp"
#include "carousel/recommenders.hpp"

namespace carousel {
namespace {

using Triplet = Eigen::Triplet<double, Index>;
using SparseColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, Index>;

constexpr Index kBlockColumns = 256;

// Keeps the top_k largest positive entries of each column of `block`
// (columns first_col.. of the full matrix), skipping the diagonal.
void keep_top_k(const Eigen::MatrixXd& block, Index first_col, Index top_k,
                std::vector<Triplet>& out) {
  std::vector<Index> rows;
  for (Index c = 0; c < block.cols(); ++c) {
    const Index col = first_col + c;
    rows.clear();
    for (Index r = 0; r < block.rows(); ++r) {
      if (r != col && block(r, c) > 0.0) rows.push_back(r);
    }
    if (static_cast<Index>(rows.size()) > top_k) {
      std::nth_element(rows.begin(), rows.begin() + top_k, rows.end(), [&](Index a, Index b) {
        return block(a, c) > block(b, c) || (block(a, c) == block(b, c) && a < b);
      });
      rows.resize(static_cast<std::size_t>(top_k));
    }
    for (Index r : rows) out.emplace_back(r, col, block(r, c));
  }
}

SimilarityModel assemble(Index n_items, const std::vector<Triplet>& triplets) {
  SimilarityModel model;
  model.weights.resize(n_items, n_items);
  model.weights.setFromTriplets(triplets.begin(), triplets.end());
  model.weights.makeCompressed();
  return model;
}

}  // namespace

SimilarityModel fit_itemknn_hybrid(const InteractionMatrix& train, const ItemContentMatrix& icm,
                                   const ItemKnnParams& p) {
  validate(p);
  const Index n_items = train.n_items();
  if (icm.n_items() != n_items) {
    throw std::invalid_argument("item content matrix has " + std::to_string(icm.n_items()) +
                                " items, train has " + std::to_string(n_items));
  }

  // row i of `stacked` is item i's vector [ratings column ; w * feature row]
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(train.nnz() + icm.values.nonZeros()));
  for (Index u = 0; u < train.n_users(); ++u) {
    for (SparseRowMatrix<double>::InnerIterator it(train.values, u); it; ++it) {
      entries.emplace_back(it.col(), u, it.value());
    }
  }
  if (p.icm_weight > 0.0) {
    for (Index i = 0; i < icm.n_items(); ++i) {
      for (SparseRowMatrix<double>::InnerIterator it(icm.values, i); it; ++it) {
        entries.emplace_back(i, train.n_users() + it.col(), p.icm_weight * it.value());
      }
    }
  }
  SparseRowMatrix<double> stacked(n_items, train.n_users() + icm.n_features());
  stacked.setFromTriplets(entries.begin(), entries.end());
  stacked.makeCompressed();

  Eigen::VectorXd norms(n_items);
  for (Index i = 0; i < n_items; ++i) norms[i] = stacked.row(i).norm();

  std::vector<Triplet> kept;
  for (Index j0 = 0; j0 < n_items; j0 += kBlockColumns) {
    const Index width = std::min(kBlockColumns, n_items - j0);
    const SparseColMatrix dots = stacked * SparseColMatrix(stacked.middleRows(j0, width).transpose());
    Eigen::MatrixXd block = Eigen::MatrixXd(dots);
    for (Index c = 0; c < width; ++c) {
      const double nj = norms[j0 + c];
      for (Index i = 0; i < n_items; ++i) {
        const double denom = norms[i] * nj + p.shrink;
        block(i, c) = (norms[i] > 0.0 && nj > 0.0) ? block(i, c) / denom : 0.0;
      }
    }
    keep_top_k(block, j0, p.top_k, kept);
  }
  return assemble(n_items, kept);
}

SimilarityModel fit_rp3beta(const InteractionMatrix& train, const Rp3betaParams& p) {
  validate(p);
  if (train.nnz() == 0) throw std::invalid_argument("RP3beta needs a non-empty train matrix");
  const Index n_items = train.n_items();
  const SparseRowMatrix<double> x = binarized(train.values);

  Eigen::VectorXd user_degree = Eigen::VectorXd::Zero(train.n_users());
  Eigen::VectorXd item_degree = Eigen::VectorXd::Zero(n_items);
  for (Index u = 0; u < x.rows(); ++u) {
    for (SparseRowMatrix<double>::InnerIterator it(x, u); it; ++it) {
      user_degree[u] += 1.0;
      item_degree[it.col()] += 1.0;
    }
  }

  // user -> item (users x items) and item -> user (items x users) transitions
  std::vector<Triplet> ui, iu;
  ui.reserve(static_cast<std::size_t>(x.nonZeros()));
  iu.reserve(static_cast<std::size_t>(x.nonZeros()));
  for (Index u = 0; u < x.rows(); ++u) {
    for (SparseRowMatrix<double>::InnerIterator it(x, u); it; ++it) {
      ui.emplace_back(u, it.col(), std::pow(1.0 / user_degree[u], p.alpha));
      iu.emplace_back(it.col(), u, std::pow(1.0 / item_degree[it.col()], p.alpha));
    }
  }
  SparseColMatrix user_to_item(x.rows(), n_items);
  user_to_item.setFromTriplets(ui.begin(), ui.end());
  SparseRowMatrix<double> item_to_user(n_items, x.rows());
  item_to_user.setFromTriplets(iu.begin(), iu.end());

  std::vector<Triplet> kept;
  for (Index j0 = 0; j0 < n_items; j0 += kBlockColumns) {
    const Index width = std::min(kBlockColumns, n_items - j0);
    const SparseColMatrix walk = item_to_user * user_to_item.middleCols(j0, width);
    Eigen::MatrixXd block = Eigen::MatrixXd(walk);
    for (Index c = 0; c < width; ++c) {
      const double pop = item_degree[j0 + c];
      if (pop > 0.0) {
        block.col(c) /= std::pow(pop, p.beta);
      } else {
        block.col(c).setZero();
      }
    }
    keep_top_k(block, j0, p.top_k, kept);
  }
  return assemble(n_items, kept);
}

DenseSimilarityModel fit_ease(const InteractionMatrix& train, const EaseParams& p) {
  validate(p);
  const Index n_items = train.n_items();
  if (n_items > p.max_items) {
    throw FitError("EASE: " + std::to_string(n_items) + " items exceed the dense limit of " +
                   std::to_string(p.max_items));
  }
  // Gram matrix of the binarized interactions, accumulated on the lower triangle
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n_items, n_items);
  const auto* outer = train.values.outerIndexPtr();
  const auto* inner = train.values.innerIndexPtr();
  for (Index u = 0; u < train.n_users(); ++u) {
    for (auto a = outer[u]; a < outer[u + 1]; ++a) {
      for (auto b = a; b < outer[u + 1]; ++b) gram(inner[b], inner[a]) += 1.0;
    }
  }
  gram = gram.selfadjointView<Eigen::Lower>();

  DenseSimilarityModel model;
  try {
    model.weights = ease_weights(ease_precision(gram, p.l2));
  } catch (const std::runtime_error& e) {
    throw FitError(e.what());
  }
  if (!model.weights.allFinite()) throw FitError("EASE: non-finite weights");
  return model;
}

}  // namespace carousel
