#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "carousel/kernels.hpp"
#include "carousel/recommenders.hpp"

namespace carousel {
namespace {

constexpr double kNmfEpsilon = 1e-12;

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Eigen::MatrixXd uniform_matrix(Index rows, Index cols, double scale, std::mt19937_64& rng) {
  Eigen::MatrixXd m(rows, cols);
  // column-major fill order is part of the determinism contract
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = scale * unit_draw(rng);
  }
  return m;
}

struct Rating {
  Index user;
  Index item;
  double value;
};

// Uniform item the user has not rated, with target 0. Item -1 when the user
// has rated everything.
Rating sample_negative(const InteractionMatrix& train, Index user, std::mt19937_64& rng) {
  const Index n_items = train.n_items();
  const Index* begin = train.values.innerIndexPtr() + train.values.outerIndexPtr()[user];
  const Index* end = train.values.innerIndexPtr() + train.values.outerIndexPtr()[user + 1];
  if (end - begin >= n_items) return {user, -1, 0.0};
  for (;;) {
    const auto item = static_cast<Index>(rng() % static_cast<std::uint64_t>(n_items));
    if (!std::binary_search(begin, end, item)) return {user, item, 0.0};
  }
}

}  // namespace

FactorModel fit_funksvd(const InteractionMatrix& train, const FunkSvdParams& p,
                        const FactorObserver& observer) {
  validate(p);
  std::mt19937_64 rng(p.seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(p.factors));
  // factors are stored one column per user/item so each SGD step touches contiguous memory
  Eigen::MatrixXd users = uniform_matrix(p.factors, train.n_users(), scale, rng);
  Eigen::MatrixXd items = uniform_matrix(p.factors, train.n_items(), scale, rng);

  std::vector<Rating> ratings;
  ratings.reserve(static_cast<std::size_t>(train.nnz()));
  for (Index u = 0; u < train.n_users(); ++u) {
    for (SparseRowMatrix<double>::InnerIterator it(train.values, u); it; ++it) {
      ratings.push_back({u, static_cast<Index>(it.col()), it.value()});
    }
  }
  const std::size_t observed = ratings.size();
  const auto negatives = static_cast<std::size_t>(std::llround(p.negative_ratio * observed));
  std::vector<Rating> samples;
  samples.reserve(observed + negatives);
  Eigen::VectorXd scratch(p.factors);

  for (int epoch = 1; epoch <= p.epochs; ++epoch) {
    samples.assign(ratings.begin(), ratings.end());
    for (std::size_t n = 0; n < negatives && observed > 0; ++n) {
      samples.push_back(sample_negative(train, ratings[rng() % observed].user, rng));
    }
    std::shuffle(samples.begin(), samples.end(), rng);
    for (const Rating& r : samples) {
      if (r.item < 0) continue;
      auto u = users.col(r.user);
      auto v = items.col(r.item);
      funksvd_sgd_step(u, v, r.value, p.learn_rate, p.reg, scratch);
    }
    if (!users.allFinite() || !items.allFinite()) {
      throw FitError("FunkSVD diverged at epoch " + std::to_string(epoch));
    }
    if (observer) observer(epoch, users.transpose(), items.transpose());
  }
  return FactorModel{users.transpose(), items.transpose()};
}

FactorModel fit_nmf(const InteractionMatrix& train, const NmfParams& p,
                    const FactorObserver& observer) {
  validate(p);
  const SparseRowMatrix<double>& x = train.values;
  const double* values = x.valuePtr();
  if (std::any_of(values, values + x.nonZeros(), [](double v) { return !(v >= 0.0); })) {
    throw std::invalid_argument("NMF needs non-negative interactions");
  }
  const double cells = static_cast<double>(train.n_users()) * train.n_items();
  const double mean = cells > 0 ? std::accumulate(values, values + x.nonZeros(), 0.0) / cells : 0.0;
  const double scale = std::sqrt(std::max(mean, kNmfEpsilon) / p.factors);

  std::mt19937_64 rng(p.seed);
  FactorModel model;
  model.user_factors = uniform_matrix(train.n_users(), p.factors, scale, rng);
  model.item_factors = uniform_matrix(train.n_items(), p.factors, scale, rng);
  // iterate on the transposes (f x users, f x items) so the sparse products
  // read contiguous factor columns
  Eigen::MatrixXd wt = model.user_factors.transpose();
  Eigen::MatrixXd ht = model.item_factors.transpose();
  Eigen::MatrixXd numer, gram, denom;

  for (int iter = 1; iter <= p.iterations; ++iter) {
    numer.noalias() = ht * x.transpose();
    gram.noalias() = ht * ht.transpose();
    denom.noalias() = gram * wt;
    wt.array() *= numer.array() / (denom.array() + kNmfEpsilon);

    numer.noalias() = wt * x;
    gram.noalias() = wt * wt.transpose();
    denom.noalias() = gram * ht;
    ht.array() *= numer.array() / (denom.array() + kNmfEpsilon);

    if (!wt.allFinite() || !ht.allFinite()) {
      throw FitError("NMF produced non-finite factors at iteration " + std::to_string(iter));
    }
    if (observer) observer(iter, wt.transpose(), ht.transpose());
  }
  model.user_factors = wt.transpose();
  model.item_factors = ht.transpose();
  return model;
}

}  // namespace carousel
