#pragma once

#include <iosfwd>
#include <string>

#include "carousel/recommenders.hpp"

namespace carousel {

/// Current version of the binary model container.
inline constexpr std::uint32_t kModelFormatVersion = 1;

/// Writes family tag, hyperparameters and arrays. Doubles are stored as raw
/// little-endian bytes so a load reproduces every value exactly.
void save_model(std::ostream& out, const Model& model);
Model load_model(std::istream& in);

void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace carousel
