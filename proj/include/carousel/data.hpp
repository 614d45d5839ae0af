#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/SparseCore>

namespace carousel {

using Index = std::int32_t;
using ExternalId = std::int64_t;

/// Compressed-row sparse matrix, the storage used for every user x item and
/// item x feature matrix in the library.
template <typename Scalar>
using SparseRowMatrix = Eigen::SparseMatrix<Scalar, Eigen::RowMajor, Index>;

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& message);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline constexpr double kMinRating = 0.5;
inline constexpr double kMaxRating = 5.0;

struct Interaction {
  ExternalId user = 0;
  ExternalId item = 0;
  double rating = 1.0;
  std::int64_t timestamp = 0;

  bool operator==(const Interaction&) const = default;
};

/// Deduplicated interaction records. Order is the first-seen order of each
/// (user, item) pair in the source; values come from the latest timestamp.
struct InteractionSet {
  std::vector<Interaction> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  bool operator==(const InteractionSet&) const = default;
};

enum class InteractionFormat {
  DoubleColon,   // UserID::MovieID::Rating::Timestamp
  TabSeparated,  // user<TAB>item<TAB>rating<TAB>timestamp
};

/// ".dat" selects the double-colon format, anything else tab-separated.
InteractionFormat format_from_path(const std::string& path);

InteractionSet parse_interactions(std::istream& source, InteractionFormat format);
void write_interactions(std::ostream& out, const InteractionSet& set,
                        InteractionFormat format);

/// Bijection between external ids and dense indices [0, size).
class IdMap {
 public:
  IdMap() = default;
  /// Indices follow ascending external id. Duplicates are removed.
  explicit IdMap(std::vector<ExternalId> external_ids);
  static IdMap identity(Index n);

  Index size() const { return static_cast<Index>(external_.size()); }
  std::optional<Index> find(ExternalId id) const;
  Index index_of(ExternalId id) const;
  ExternalId external(Index index) const { return external_.at(index); }

 private:
  std::vector<ExternalId> external_;
  std::unordered_map<ExternalId, Index> index_;
};

/// Sparse user x item matrix (URM). Values are the raw ratings.
struct InteractionMatrix {
  SparseRowMatrix<double> values;
  std::shared_ptr<const IdMap> users;
  std::shared_ptr<const IdMap> items;

  Index n_users() const { return static_cast<Index>(values.rows()); }
  Index n_items() const { return static_cast<Index>(values.cols()); }
  Index nnz() const { return static_cast<Index>(values.nonZeros()); }
  Index row_nnz(Index user) const {
    return values.outerIndexPtr()[user + 1] - values.outerIndexPtr()[user];
  }

  /// Builds a matrix with identity id maps; duplicate cells keep the last value.
  static InteractionMatrix from_triplets(Index n_users, Index n_items,
                                         const std::vector<Eigen::Triplet<double, Index>>& triplets);
};

/// Indexes all users and items present in `set`.
InteractionMatrix build_matrix(const InteractionSet& set);

/// Copy of `values` with every stored entry set to 1.
SparseRowMatrix<double> binarized(const SparseRowMatrix<double>& values);

/// Item x feature matrix (ICM) sharing item indexing with a URM.
struct ItemContentMatrix {
  SparseRowMatrix<double> values;
  std::vector<std::string> feature_names;
  std::shared_ptr<const IdMap> items;
  std::size_t skipped_rows = 0;

  Index n_items() const { return static_cast<Index>(values.rows()); }
  Index n_features() const { return static_cast<Index>(values.cols()); }
};

/// Reads "MovieID::Title (YYYY)::Genre1|Genre2" rows and, when `tags` is given,
/// "UserID::MovieID::Tag::Timestamp" rows. Features are named "genre:<g>",
/// "tag:<lower-cased tag>" and "year:<yyyy>"; entries are binary.
ItemContentMatrix parse_item_features(std::istream& movies, std::istream* tags,
                                      std::shared_ptr<const IdMap> items);

enum class Partition : std::uint8_t { Train = 0, Validation = 1, Test = 2 };

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;

  /// Throws std::invalid_argument unless all ratios are >= 0, train > 0 and
  /// the sum is 1 within 1e-9.
  void validate() const;
};

/// One seeded uniform draw per interaction, thresholded on the cumulative ratios.
std::vector<Partition> assign_partitions(std::size_t n, const SplitRatios& ratios,
                                         std::uint64_t seed);

struct DataSplit {
  InteractionMatrix train;
  InteractionMatrix validation;
  InteractionMatrix test;
  std::uint64_t seed = 0;
  SplitRatios ratios;
  std::vector<Partition> assignment;  // aligned with the source records
};

DataSplit holdout_split(const InteractionSet& interactions, const SplitRatios& ratios,
                        std::uint64_t seed);

/// Records of `set` whose assignment equals `part`.
InteractionSet select_partition(const InteractionSet& set,
                                const std::vector<Partition>& assignment, Partition part);

void write_split_manifest(std::ostream& out, const DataSplit& split);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

}  // namespace carousel
