#pragma once

#include <cstddef>
#include <vector>

namespace edgeav {

/// Layout of an ego-anchored occupancy grid. Columns run along the road
/// starting at the ego position, rows span the lateral extent centered on
/// the lane.
struct GridGeometry {
  int width = 30;   // longitudinal cells
  int height = 8;   // lateral cells
  double cell_size = 1.0;

  std::size_t cells() const noexcept {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
};

struct OccupancyGrid {
  int width = 0;
  int height = 0;
  double cell_size = 1.0;
  /// World coordinates of the grid's lower-left corner.
  double origin_x = 0.0;
  double origin_y = 0.0;
  /// Row-major: values[row * width + col], each in [0, 1].
  std::vector<double> values;

  static OccupancyGrid empty(const GridGeometry& geometry, double origin_x);

  double at(int col, int row) const { return values[static_cast<std::size_t>(row * width + col)]; }
  double& at(int col, int row) { return values[static_cast<std::size_t>(row * width + col)]; }
  double cell_center_x(int col) const { return origin_x + (col + 0.5) * cell_size; }
  double cell_center_y(int row) const { return origin_y + (row + 0.5) * cell_size; }
};

inline OccupancyGrid OccupancyGrid::empty(const GridGeometry& geometry, double origin_x) {
  OccupancyGrid grid;
  grid.width = geometry.width;
  grid.height = geometry.height;
  grid.cell_size = geometry.cell_size;
  grid.origin_x = origin_x;
  grid.origin_y = -0.5 * geometry.height * geometry.cell_size;
  grid.values.assign(geometry.cells(), 0.0);
  return grid;
}

}  // namespace edgeav
