#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace autochar {

// Dense row-major 2-D raster.
template <typename T> struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, T fill = T{})
      : width(w), height(h),
        data(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
  T &at(int x, int y) { return data[index(x, y)]; }
  const T &at(int x, int y) const { return data[index(x, y)]; }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  std::size_t size() const { return data.size(); }

  bool operator==(const Grid &) const = default;
};

using IntensityGrid = Grid<double>; // values in [0, 255]
using Mask = Grid<std::uint8_t>;    // 0 = background, 1 = foreground
using DistanceGrid = Grid<double>;
using LabelMap = Grid<std::int32_t>; // 0 = background, 1..N = regions

} // namespace autochar
