#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "fpratelab/grid.hpp"

namespace fpl {

/// Per-cell real values on a grid. Stores raw values; normalization is
/// always an explicit call.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(Grid grid, double fill = 0.0);
  /// Throws std::invalid_argument if values.size() != grid.cell_count().
  ScalarField(Grid grid, std::vector<double> values);

  /// Samples fn at cell centers.
  static ScalarField sample(const Grid& grid, const std::function<double(double, double)>& fn);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  double min() const;
  double max() const;

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Throws std::invalid_argument when the fields live on different grids.
void require_same_grid(const ScalarField& a, const ScalarField& b);
/// Throws std::invalid_argument unless every value is finite and > 0.
void require_positive(const ScalarField& f, std::string_view what);

/// Midpoint quadrature of the integral of f over the domain.
double mass(const ScalarField& f);

/// f scaled to unit mass. Throws if the mass is not positive.
ScalarField normalized(const ScalarField& f);

/// sum of w f^2 over cells, times the cell volume.
double weighted_norm_sq(const ScalarField& f, const ScalarField& w);

/// Quadrature of (u - u_inf)^2 / u_inf.
double relative_entropy(const ScalarField& u, const ScalarField& u_inf);

/// Weighted Dirichlet energy: two-point face differences of phi with
/// arithmetic-mean face weights of h, sum of w_f (phi_j - phi_i)^2 area/h.
double weighted_dirichlet_energy(const ScalarField& phi, const ScalarField& h);

/// Discrete integral of u_inf |grad(u/u_inf)|^2.
double dissipation(const ScalarField& u, const ScalarField& u_inf);

/// Entrywise u / u_inf.
ScalarField ratio(const ScalarField& u, const ScalarField& u_inf);

}  // namespace fpl
