#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <span>

namespace fpl {

inline constexpr std::size_t kNoCell = std::numeric_limits<std::size_t>::max();

/// A face of the cell-centered mesh.
///
/// Interior faces join `lower` and `upper` (the cells on the low and high
/// side along `axis`). A boundary face has exactly one of them set to
/// kNoCell; its outward normal is -e_axis when `lower` is missing and
/// +e_axis when `upper` is missing.
struct Face {
  int axis = 0;
  std::size_t lower = kNoCell;
  std::size_t upper = kNoCell;
  std::array<double, 2> center{};
  double area = 1.0;

  bool boundary() const { return lower == kNoCell || upper == kNoCell; }
  /// +1 or -1 for boundary faces, +1 for interior ones.
  int outward_sign() const { return lower == kNoCell ? -1 : 1; }
  std::size_t owner() const { return lower == kNoCell ? upper : lower; }
};

/// Uniform cell-centered tensor-product grid over a 1D interval or 2D box.
///
/// Cells are indexed lexicographically with x fastest. Faces are the
/// x-normal faces first (x fastest over (nx+1) x ny), then the y-normal ones
/// (x fastest over nx x (ny+1)). The grid is a small immutable value; fields
/// hold it by copy.
class Grid {
 public:
  /// Throws std::invalid_argument on inconsistent or degenerate input.
  static Grid build(std::span<const double> lower, std::span<const double> upper,
                    std::span<const int> cells);

  int dim() const { return dim_; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  int cells(int axis) const { return cells_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double extent(int axis) const { return upper_[axis] - lower_[axis]; }

  std::size_t cell_count() const;
  double cell_volume() const;
  double domain_volume() const;

  std::size_t cell_index(int i, int j = 0) const;
  std::array<int, 2> cell_coords(std::size_t cell) const;
  std::array<double, 2> cell_center(std::size_t cell) const;

  std::size_t face_count() const;
  std::size_t interior_face_count() const;
  std::size_t boundary_face_count() const;
  Face face(std::size_t index) const;

  template <typename Fn>
  void for_each_face(Fn&& fn) const {
    const std::size_t n = face_count();
    for (std::size_t k = 0; k < n; ++k) fn(k, face(k));
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int dim_ = 1;
  std::array<double, 2> lower_{0.0, 0.0};
  std::array<double, 2> upper_{1.0, 1.0};
  std::array<int, 2> cells_{2, 1};
  std::array<double, 2> spacing_{0.5, 1.0};
};

inline Grid build_grid(std::span<const double> lower, std::span<const double> upper,
                       std::span<const int> cells) {
  return Grid::build(lower, upper, cells);
}

}  // namespace fpl
