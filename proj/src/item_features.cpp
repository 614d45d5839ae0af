#include <algorithm>
#include <cctype>
#include <charconv>
#include <istream>
#include <map>
#include <set>
#include <string_view>

#include "carousel/data.hpp"

namespace carousel {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_on(std::string_view line, std::string_view delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (auto pos = line.find(delim); pos != std::string_view::npos; pos = line.find(delim, start)) {
    out.push_back(line.substr(start, pos - start));
    start = pos + delim.size();
  }
  out.push_back(line.substr(start));
  return out;
}

bool parse_id(std::string_view text, ExternalId& id) {
  text = trim(text);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), id);
  return !text.empty() && ec == std::errc{} && ptr == text.data() + text.size();
}

// "Title (1995)" -> "1995"; empty when the suffix is absent or not four digits.
std::string_view release_year(std::string_view title) {
  title = trim(title);
  if (title.size() < 6 || title.back() != ')' || title[title.size() - 6] != '(') return {};
  const auto year = title.substr(title.size() - 5, 4);
  for (char c : year) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return {};
  }
  return year;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

ItemContentMatrix parse_item_features(std::istream& movies, std::istream* tags,
                                      std::shared_ptr<const IdMap> items) {
  std::set<std::pair<Index, std::string>> cells;
  std::size_t skipped = 0;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(movies, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_on(line, "::");
    ExternalId id = 0;
    if (fields.size() < 3 || !parse_id(fields[0], id)) {
      throw ParseError(line_no, "malformed movie row \"" + line + "\"");
    }
    const auto index = items->find(id);
    if (!index) {
      ++skipped;
      continue;
    }
    for (auto genre : split_on(trim(fields[2]), "|")) {
      genre = trim(genre);
      if (genre.empty() || genre == "(no genres listed)") continue;
      cells.emplace(*index, "genre:" + std::string(genre));
    }
    if (const auto year = release_year(fields[1]); !year.empty()) {
      cells.emplace(*index, "year:" + std::string(year));
    }
  }

  if (tags != nullptr) {
    line_no = 0;
    while (std::getline(*tags, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      const auto fields = split_on(line, "::");
      ExternalId user = 0, id = 0;
      if (fields.size() < 4 || !parse_id(fields[0], user) || !parse_id(fields[1], id)) {
        throw ParseError(line_no, "malformed tag row \"" + line + "\"");
      }
      const auto index = items->find(id);
      if (!index) {
        ++skipped;
        continue;
      }
      // the tag text may itself contain the delimiter
      const auto begin = fields[2].data() - line.data();
      const auto end = fields.back().data() - 2 - line.data();
      const auto tag = lower(trim(std::string_view(line).substr(begin, end - begin)));
      if (!tag.empty()) cells.emplace(*index, "tag:" + tag);
    }
  }

  std::map<std::string, Index> feature_index;
  for (const auto& [item, name] : cells) feature_index.emplace(name, 0);
  ItemContentMatrix icm;
  icm.feature_names.reserve(feature_index.size());
  for (auto& [name, idx] : feature_index) {
    idx = static_cast<Index>(icm.feature_names.size());
    icm.feature_names.push_back(name);
  }

  std::vector<Eigen::Triplet<double, Index>> triplets;
  triplets.reserve(cells.size());
  for (const auto& [item, name] : cells) triplets.emplace_back(item, feature_index.at(name), 1.0);
  icm.values.resize(items->size(), static_cast<Index>(icm.feature_names.size()));
  icm.values.setFromTriplets(triplets.begin(), triplets.end());
  icm.values.makeCompressed();
  icm.items = std::move(items);
  icm.skipped_rows = skipped;
  return icm;
}

}  // namespace carousel
