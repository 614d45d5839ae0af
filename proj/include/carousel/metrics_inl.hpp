#pragma once

#include <ostream>
#include <type_traits>

#include "carousel/data.hpp"

namespace carousel {

template <typename Derived>
void write_grid_csv(std::ostream& out, const Eigen::DenseBase<Derived>& grid) {
  using Scalar = typename Derived::Scalar;
  out << "row,col,value\n";
  for (Eigen::Index r = 0; r < grid.rows(); ++r) {
    for (Eigen::Index c = 0; c < grid.cols(); ++c) {
      out << r + 1 << ',' << c + 1 << ',';
      if constexpr (std::is_floating_point_v<Scalar>) {
        out << format_double(static_cast<double>(grid(r, c)));
      } else {
        out << grid(r, c);
      }
      out << '\n';
    }
  }
}

}  // namespace carousel
