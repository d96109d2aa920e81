#include "fpratelab/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fpl {

Grid Grid::build(std::span<const double> lower, std::span<const double> upper,
                 std::span<const int> cells) {
  const std::size_t dim = cells.size();
  if (dim != 1 && dim != 2) {
    throw std::invalid_argument("grid dimension must be 1 or 2, got " + std::to_string(dim));
  }
  if (lower.size() != dim || upper.size() != dim) {
    throw std::invalid_argument("lower, upper and cells must have the same length");
  }
  Grid g;
  g.dim_ = static_cast<int>(dim);
  for (std::size_t a = 0; a < dim; ++a) {
    if (!std::isfinite(lower[a]) || !std::isfinite(upper[a]) || !(upper[a] > lower[a])) {
      throw std::invalid_argument("degenerate box on axis " + std::to_string(a) +
                                  ": need finite upper > lower");
    }
    if (cells[a] < 2) {
      throw std::invalid_argument("cells[" + std::to_string(a) + "] must be >= 2, got " +
                                  std::to_string(cells[a]));
    }
    g.lower_[a] = lower[a];
    g.upper_[a] = upper[a];
    g.cells_[a] = cells[a];
    g.spacing_[a] = (upper[a] - lower[a]) / cells[a];
  }
  if (dim == 1) {
    // Unit transverse measure so faces have area 1.
    g.lower_[1] = 0.0;
    g.upper_[1] = 1.0;
    g.cells_[1] = 1;
    g.spacing_[1] = 1.0;
  }
  return g;
}

std::size_t Grid::cell_count() const {
  return static_cast<std::size_t>(cells_[0]) * static_cast<std::size_t>(cells_[1]);
}

double Grid::cell_volume() const {
  return dim_ == 1 ? spacing_[0] : spacing_[0] * spacing_[1];
}

double Grid::domain_volume() const {
  return dim_ == 1 ? extent(0) : extent(0) * extent(1);
}

std::size_t Grid::cell_index(int i, int j) const {
  return static_cast<std::size_t>(i) + static_cast<std::size_t>(cells_[0]) * j;
}

std::array<int, 2> Grid::cell_coords(std::size_t cell) const {
  const auto nx = static_cast<std::size_t>(cells_[0]);
  return {static_cast<int>(cell % nx), static_cast<int>(cell / nx)};
}

std::array<double, 2> Grid::cell_center(std::size_t cell) const {
  const auto [i, j] = cell_coords(cell);
  return {lower_[0] + (i + 0.5) * spacing_[0],
          dim_ == 1 ? 0.0 : lower_[1] + (j + 0.5) * spacing_[1]};
}

std::size_t Grid::face_count() const {
  const std::size_t nx = cells_[0];
  const std::size_t ny = cells_[1];
  if (dim_ == 1) return nx + 1;
  return (nx + 1) * ny + nx * (ny + 1);
}

std::size_t Grid::interior_face_count() const {
  const std::size_t nx = cells_[0];
  const std::size_t ny = cells_[1];
  if (dim_ == 1) return nx - 1;
  return (nx - 1) * ny + nx * (ny - 1);
}

std::size_t Grid::boundary_face_count() const {
  return face_count() - interior_face_count();
}

Face Grid::face(std::size_t index) const {
  const int nx = cells_[0];
  const int ny = cells_[1];
  const std::size_t x_faces = static_cast<std::size_t>(nx + 1) * ny;
  Face f;
  if (index < x_faces) {
    const int i = static_cast<int>(index % (nx + 1));
    const int j = static_cast<int>(index / (nx + 1));
    f.axis = 0;
    f.lower = i > 0 ? cell_index(i - 1, j) : kNoCell;
    f.upper = i < nx ? cell_index(i, j) : kNoCell;
    f.center = {lower_[0] + i * spacing_[0],
                dim_ == 1 ? 0.0 : lower_[1] + (j + 0.5) * spacing_[1]};
    f.area = dim_ == 1 ? 1.0 : spacing_[1];
    return f;
  }
  if (dim_ == 1 || index >= face_count()) {
    throw std::out_of_range("face index out of range");
  }
  const std::size_t k = index - x_faces;
  const int i = static_cast<int>(k % nx);
  const int j = static_cast<int>(k / nx);
  f.axis = 1;
  f.lower = j > 0 ? cell_index(i, j - 1) : kNoCell;
  f.upper = j < ny ? cell_index(i, j) : kNoCell;
  f.center = {lower_[0] + (i + 0.5) * spacing_[0], lower_[1] + j * spacing_[1]};
  f.area = spacing_[0];
  return f;
}

}  // namespace fpl
