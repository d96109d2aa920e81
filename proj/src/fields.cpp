#include "fpratelab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace fpl {

ScalarField::ScalarField(Grid grid, double fill)
    : grid_(grid), values_(grid.cell_count(), fill) {}

ScalarField::ScalarField(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.cell_count()) {
    throw std::invalid_argument("field has " + std::to_string(values_.size()) +
                                " values for " + std::to_string(grid_.cell_count()) + " cells");
  }
}

ScalarField ScalarField::sample(const Grid& grid,
                                const std::function<double(double, double)>& fn) {
  ScalarField f(grid);
  for (std::size_t c = 0; c < f.size(); ++c) {
    const auto x = grid.cell_center(c);
    f[c] = fn(x[0], x[1]);
  }
  return f;
}

double ScalarField::min() const { return *std::min_element(values_.begin(), values_.end()); }
double ScalarField::max() const { return *std::max_element(values_.begin(), values_.end()); }

void require_same_grid(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid()) || a.size() != b.size()) {
    throw std::invalid_argument("fields are defined on different grids");
  }
}

void require_positive(const ScalarField& f, std::string_view what) {
  for (double v : f.values()) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(std::string(what) + " must be strictly positive everywhere");
    }
  }
}

double mass(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values()) s += v;
  return s * f.grid().cell_volume();
}

ScalarField normalized(const ScalarField& f) {
  const double m = mass(f);
  if (!(m > 0.0)) throw std::invalid_argument("cannot normalize a field with nonpositive mass");
  ScalarField out = f;
  for (double& v : out.values()) v /= m;
  return out;
}

double weighted_norm_sq(const ScalarField& f, const ScalarField& w) {
  require_same_grid(f, w);
  double s = 0.0;
  for (std::size_t c = 0; c < f.size(); ++c) s += w[c] * f[c] * f[c];
  return s * f.grid().cell_volume();
}

double relative_entropy(const ScalarField& u, const ScalarField& u_inf) {
  require_same_grid(u, u_inf);
  require_positive(u_inf, "u_inf");
  double s = 0.0;
  for (std::size_t c = 0; c < u.size(); ++c) {
    const double d = u[c] - u_inf[c];
    s += d * d / u_inf[c];
  }
  return s * u.grid().cell_volume();
}

double weighted_dirichlet_energy(const ScalarField& phi, const ScalarField& h) {
  require_same_grid(phi, h);
  const Grid& g = phi.grid();
  double s = 0.0;
  g.for_each_face([&](std::size_t, const Face& f) {
    if (f.boundary()) return;
    const double w = 0.5 * (h[f.lower] + h[f.upper]);
    const double d = phi[f.upper] - phi[f.lower];
    s += w * d * d * f.area / g.spacing(f.axis);
  });
  return s;
}

ScalarField ratio(const ScalarField& u, const ScalarField& u_inf) {
  require_same_grid(u, u_inf);
  require_positive(u_inf, "u_inf");
  ScalarField out(u.grid());
  for (std::size_t c = 0; c < u.size(); ++c) out[c] = u[c] / u_inf[c];
  return out;
}

double dissipation(const ScalarField& u, const ScalarField& u_inf) {
  return weighted_dirichlet_energy(ratio(u, u_inf), u_inf);
}

}  // namespace fpl
