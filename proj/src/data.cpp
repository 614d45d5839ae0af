#include "carousel/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <string_view>

namespace carousel {

ParseError::ParseError(std::size_t line, const std::string& message)
    : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}

namespace {

struct PairHash {
  std::size_t operator()(const std::pair<ExternalId, ExternalId>& p) const noexcept {
    const auto a = static_cast<std::uint64_t>(p.first);
    const auto b = static_cast<std::uint64_t>(p.second);
    return std::hash<std::uint64_t>{}(a * 0x9E3779B97F4A7C15ULL ^ (b + (a << 6) + (a >> 2)));
  }
};

std::vector<std::string_view> split_fields(std::string_view line, std::string_view delim) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + delim.size();
  }
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view text, T& value) {
  text = trim(text);
  if (text.empty()) return false;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc{} && ptr == end;
}

// uniform double in [0, 1) from the top 53 bits; stable across standard libraries
double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

InteractionMatrix build_subset(const InteractionSet& set, const std::vector<Partition>* assignment,
                               Partition part, std::shared_ptr<const IdMap> users,
                               std::shared_ptr<const IdMap> items) {
  std::vector<Eigen::Triplet<double, Index>> triplets;
  triplets.reserve(set.size());
  for (std::size_t r = 0; r < set.size(); ++r) {
    if (assignment && (*assignment)[r] != part) continue;
    const auto& rec = set.records[r];
    triplets.emplace_back(users->index_of(rec.user), items->index_of(rec.item), rec.rating);
  }
  InteractionMatrix m;
  m.values.resize(users->size(), items->size());
  m.values.setFromTriplets(triplets.begin(), triplets.end());
  m.values.makeCompressed();
  m.users = std::move(users);
  m.items = std::move(items);
  return m;
}

}  // namespace

InteractionFormat format_from_path(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".dat") == 0
             ? InteractionFormat::DoubleColon
             : InteractionFormat::TabSeparated;
}

InteractionSet parse_interactions(std::istream& source, InteractionFormat format) {
  const std::string_view delim = format == InteractionFormat::DoubleColon ? "::" : "\t";
  InteractionSet set;
  std::unordered_map<std::pair<ExternalId, ExternalId>, std::size_t, PairHash> seen;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(source, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line, delim);
    if (fields.size() != 4) {
      throw ParseError(line_no, "expected 4 fields, found " + std::to_string(fields.size()));
    }
    Interaction rec;
    if (!parse_number(fields[0], rec.user) || !parse_number(fields[1], rec.item) ||
        !parse_number(fields[2], rec.rating) || !parse_number(fields[3], rec.timestamp)) {
      throw ParseError(line_no, "malformed field in \"" + line + "\"");
    }
    if (!(rec.rating >= kMinRating && rec.rating <= kMaxRating)) {
      throw ParseError(line_no, "rating " + format_double(rec.rating) + " outside [0.5, 5]");
    }
    auto [it, inserted] = seen.try_emplace({rec.user, rec.item}, set.records.size());
    if (inserted) {
      set.records.push_back(rec);
    } else if (rec.timestamp >= set.records[it->second].timestamp) {
      set.records[it->second] = rec;
    }
  }
  if (set.empty()) throw std::runtime_error("no interactions");
  return set;
}

void write_interactions(std::ostream& out, const InteractionSet& set, InteractionFormat format) {
  const char* delim = format == InteractionFormat::DoubleColon ? "::" : "\t";
  for (const auto& r : set.records) {
    out << r.user << delim << r.item << delim << format_double(r.rating) << delim << r.timestamp
        << '\n';
  }
}

IdMap::IdMap(std::vector<ExternalId> external_ids) : external_(std::move(external_ids)) {
  std::sort(external_.begin(), external_.end());
  external_.erase(std::unique(external_.begin(), external_.end()), external_.end());
  index_.reserve(external_.size());
  for (std::size_t i = 0; i < external_.size(); ++i) {
    index_.emplace(external_[i], static_cast<Index>(i));
  }
}

IdMap IdMap::identity(Index n) {
  std::vector<ExternalId> ids(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) ids[i] = i;
  return IdMap(std::move(ids));
}

std::optional<Index> IdMap::find(ExternalId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Index IdMap::index_of(ExternalId id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) throw std::out_of_range("unknown id " + std::to_string(id));
  return it->second;
}

InteractionMatrix InteractionMatrix::from_triplets(
    Index n_users, Index n_items, const std::vector<Eigen::Triplet<double, Index>>& triplets) {
  InteractionMatrix m;
  m.values.resize(n_users, n_items);
  m.values.setFromTriplets(triplets.begin(), triplets.end(), [](double, double b) { return b; });
  m.values.makeCompressed();
  m.users = std::make_shared<const IdMap>(IdMap::identity(n_users));
  m.items = std::make_shared<const IdMap>(IdMap::identity(n_items));
  return m;
}

InteractionMatrix build_matrix(const InteractionSet& set) {
  std::vector<ExternalId> users, items;
  users.reserve(set.size());
  items.reserve(set.size());
  for (const auto& r : set.records) {
    users.push_back(r.user);
    items.push_back(r.item);
  }
  return build_subset(set, nullptr, Partition::Train,
                      std::make_shared<const IdMap>(IdMap(std::move(users))),
                      std::make_shared<const IdMap>(IdMap(std::move(items))));
}

SparseRowMatrix<double> binarized(const SparseRowMatrix<double>& values) {
  SparseRowMatrix<double> out = values;
  out.makeCompressed();
  std::fill(out.valuePtr(), out.valuePtr() + out.nonZeros(), 1.0);
  return out;
}

void SplitRatios::validate() const {
  if (!(train > 0.0) || !(validation >= 0.0) || !(test >= 0.0)) {
    throw std::invalid_argument("split ratios must be non-negative with a positive train share");
  }
  if (std::abs(train + validation + test - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1, got " +
                                format_double(train + validation + test));
  }
}

std::vector<Partition> assign_partitions(std::size_t n, const SplitRatios& ratios,
                                         std::uint64_t seed) {
  ratios.validate();
  std::mt19937_64 rng(seed);
  const double train_cut = ratios.train;
  const double val_cut = ratios.train + ratios.validation;
  std::vector<Partition> out(n);
  for (auto& p : out) {
    const double u = unit_draw(rng);
    p = u < train_cut ? Partition::Train : (u < val_cut ? Partition::Validation : Partition::Test);
  }
  // a zero-width partition must stay empty even when the cumulative sum rounds below 1
  if (ratios.test == 0.0) {
    for (auto& p : out) {
      if (p == Partition::Test) p = ratios.validation > 0.0 ? Partition::Validation : Partition::Train;
    }
  }
  return out;
}

DataSplit holdout_split(const InteractionSet& interactions, const SplitRatios& ratios,
                        std::uint64_t seed) {
  ratios.validate();
  if (interactions.size() < 10) {
    throw std::invalid_argument("holdout split needs at least 10 interactions");
  }
  const InteractionMatrix full = build_matrix(interactions);
  DataSplit split;
  split.seed = seed;
  split.ratios = ratios;
  split.assignment = assign_partitions(interactions.size(), ratios, seed);
  split.train = build_subset(interactions, &split.assignment, Partition::Train, full.users, full.items);
  split.validation =
      build_subset(interactions, &split.assignment, Partition::Validation, full.users, full.items);
  split.test = build_subset(interactions, &split.assignment, Partition::Test, full.users, full.items);
  return split;
}

InteractionSet select_partition(const InteractionSet& set, const std::vector<Partition>& assignment,
                                Partition part) {
  InteractionSet out;
  for (std::size_t r = 0; r < set.size(); ++r) {
    if (assignment.at(r) == part) out.records.push_back(set.records[r]);
  }
  return out;
}

void write_split_manifest(std::ostream& out, const DataSplit& split) {
  out << "seed=" << split.seed << '\n'
      << "ratio_train=" << format_double(split.ratios.train) << '\n'
      << "ratio_validation=" << format_double(split.ratios.validation) << '\n'
      << "ratio_test=" << format_double(split.ratios.test) << '\n'
      << "n_users=" << split.train.n_users() << '\n'
      << "n_items=" << split.train.n_items() << '\n'
      << "count_train=" << split.train.nnz() << '\n'
      << "count_validation=" << split.validation.nnz() << '\n'
      << "count_test=" << split.test.nnz() << '\n';
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

}  // namespace carousel
