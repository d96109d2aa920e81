#include "fpratelab/drift.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fpl {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double logistic(double z, double slope) { return 1.0 / (1.0 + std::exp(-slope * z)); }

}  // namespace

std::string drift_name(const DriftSpec& spec) {
  return std::visit(overloaded{
                        [](const NeuralDrift&) { return std::string("neural"); },
                        [](const GradientQuadraticDrift&) { return std::string("gradient_quadratic"); },
                        [](const LinearRotationDrift&) { return std::string("linear_rotation"); },
                        [](const ZeroDrift&) { return std::string("zero"); },
                    },
                    spec);
}

void validate_drift(const DriftSpec& spec, int dim) {
  std::visit(overloaded{
                 [dim](const NeuralDrift& d) {
                   if (!(d.sigmoid_slope > 0.0)) {
                     throw std::invalid_argument("neural drift: sigmoid_slope must be > 0");
                   }
                   for (int i = 0; i < dim; ++i) {
                     for (int j = 0; j < dim; ++j) {
                       if (!(d.weights[i][j] >= 0.0)) {
                         throw std::invalid_argument("neural drift: weights must be >= 0");
                       }
                     }
                   }
                 },
                 [](const GradientQuadraticDrift& d) {
                   if (!(d.strength > 0.0)) {
                     throw std::invalid_argument("gradient_quadratic drift: strength must be > 0");
                   }
                 },
                 [dim](const LinearRotationDrift& d) {
                   if (!std::isfinite(d.omega)) {
                     throw std::invalid_argument("linear_rotation drift: omega must be finite");
                   }
                   if (dim == 1 && d.omega != 0.0) {
                     throw std::invalid_argument("linear_rotation drift: omega must be 0 in 1D");
                   }
                 },
                 [](const ZeroDrift&) {},
             },
             spec);
}

std::array<double, 2> evaluate_drift(const DriftSpec& spec, std::array<double, 2> p, int dim) {
  return std::visit(
      overloaded{
          [&](const NeuralDrift& d) -> std::array<double, 2> {
            std::array<double, 2> f{0.0, 0.0};
            for (int i = 0; i < dim; ++i) {
              double z = d.lambda[i];
              for (int j = 0; j < dim; ++j) z += d.weights[i][j] * p[j];
              // Near v_i = 1 use 1 - phi(z) = phi(-z) so a saturated sigmoid
              // still leaves F.n < 0 on the face v_i = 1.
              f[i] = p[i] < 0.5 ? logistic(z, d.sigmoid_slope) - p[i]
                                : (1.0 - p[i]) - logistic(-z, d.sigmoid_slope);
            }
            return f;
          },
          [&](const GradientQuadraticDrift& d) -> std::array<double, 2> {
            std::array<double, 2> f{0.0, 0.0};
            for (int i = 0; i < dim; ++i) f[i] = -2.0 * d.strength * (p[i] - d.center[i]);
            return f;
          },
          [&](const LinearRotationDrift& d) -> std::array<double, 2> {
            const double x = p[0] - d.center[0];
            if (dim == 1) return {-x, 0.0};
            const double y = p[1] - d.center[1];
            return {-x - d.omega * y, -y + d.omega * x};
          },
          [](const ZeroDrift&) -> std::array<double, 2> { return {0.0, 0.0}; },
      },
      spec);
}

FaceField::FaceField(Grid grid, double fill) : grid_(grid), values_(grid.face_count(), fill) {}

FaceField::FaceField(Grid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.face_count()) {
    throw std::invalid_argument("face field size does not match the grid's face count");
  }
}

FaceField sample_drift(const DriftSpec& spec, const Grid& grid) {
  validate_drift(spec, grid.dim());
  FaceField out(grid);
  grid.for_each_face([&](std::size_t k, const Face& f) {
    const auto v = evaluate_drift(spec, f.center, grid.dim());
    out[k] = v[f.axis] * (f.boundary() ? f.outward_sign() : 1);
  });
  return out;
}

InwardReport check_inward(const FaceField& drift) {
  InwardReport r;
  bool any = false;
  drift.grid().for_each_face([&](std::size_t k, const Face& f) {
    if (!f.boundary()) return;
    const double v = drift[k];
    if (!any || v < r.min_normal) r.min_normal = v;
    if (!any || v > r.max_normal) {
      r.max_normal = v;
      r.worst_face = k;
    }
    any = true;
  });
  r.pass = any && r.max_normal < 0.0;
  return r;
}

FaceField effective_drift(const FaceField& drift, const ScalarField& u_inf, double diffusion) {
  if (!(diffusion > 0.0)) throw std::invalid_argument("diffusion must be > 0");
  if (!(drift.grid() == u_inf.grid())) {
    throw std::invalid_argument("drift and u_inf are defined on different grids");
  }
  require_positive(u_inf, "u_inf");
  const Grid& g = drift.grid();
  FaceField out(g);
  g.for_each_face([&](std::size_t k, const Face& f) {
    if (f.boundary()) {
      out[k] = -drift[k];
      return;
    }
    const double dlog = std::log(u_inf[f.upper]) - std::log(u_inf[f.lower]);
    out[k] = drift[k] - 2.0 * diffusion * dlog / g.spacing(f.axis);
  });
  return out;
}

FaceField negated(const FaceField& drift) {
  std::vector<double> v(drift.values().begin(), drift.values().end());
  for (double& x : v) x = -x;
  return FaceField(drift.grid(), std::move(v));
}

std::vector<double> circulation(const FaceField& drift) {
  const Grid& g = drift.grid();
  std::vector<double> out;
  if (g.dim() != 2) return out;
  const int nx = g.cells(0);
  const int ny = g.cells(1);
  const double hx = g.spacing(0);
  const double hy = g.spacing(1);
  const std::size_t x_faces = static_cast<std::size_t>(nx + 1) * ny;
  auto xf = [&](int i, int j) { return static_cast<std::size_t>(i) + static_cast<std::size_t>(nx + 1) * j; };
  auto yf = [&](int i, int j) { return x_faces + static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * j; };
  out.reserve(static_cast<std::size_t>(nx - 1) * (ny - 1));
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      out.push_back(drift[xf(i + 1, j)] * hx + drift[yf(i + 1, j + 1)] * hy -
                    drift[xf(i + 1, j + 1)] * hx - drift[yf(i, j + 1)] * hy);
    }
  }
  return out;
}

}  // namespace fpl
