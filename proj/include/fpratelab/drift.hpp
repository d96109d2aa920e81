#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fpratelab/fields.hpp"
#include "fpratelab/grid.hpp"

namespace fpl {

/// F_i(v) = -v_i + phi(lambda_i + sum_j w_ij v_j), phi the logistic sigmoid
/// 1 / (1 + exp(-slope z)).
struct NeuralDrift {
  std::array<double, 2> lambda{0.0, 0.0};
  std::array<std::array<double, 2>, 2> weights{};
  double sigmoid_slope = 1.0;
};

/// F = -grad V with V(v) = strength |v - center|^2.
struct GradientQuadraticDrift {
  std::array<double, 2> center{0.0, 0.0};
  double strength = 1.0;
};

/// F = -(v - c) + omega R (v - c), R the 90 degree rotation. 2D only unless
/// omega is zero.
struct LinearRotationDrift {
  std::array<double, 2> center{0.0, 0.0};
  double omega = 0.0;
};

struct ZeroDrift {};

using DriftSpec = std::variant<NeuralDrift, GradientQuadraticDrift, LinearRotationDrift, ZeroDrift>;

std::string drift_name(const DriftSpec& spec);

/// Throws std::invalid_argument when the parameters violate the family's
/// invariants or do not fit the dimension.
void validate_drift(const DriftSpec& spec, int dim);

/// Drift vector at a point (second component unused in 1D).
std::array<double, 2> evaluate_drift(const DriftSpec& spec, std::array<double, 2> point, int dim);

/// Face-normal drift samples. Interior faces are oriented along +e_axis,
/// boundary faces along the outward normal.
class FaceField {
 public:
  FaceField() = default;
  explicit FaceField(Grid grid, double fill = 0.0);
  FaceField(Grid grid, std::vector<double> values);

  const Grid& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t k) const { return values_[k]; }
  double& operator[](std::size_t k) { return values_[k]; }
  std::span<const double> values() const { return values_; }

 private:
  Grid grid_;
  std::vector<double> values_;
};

FaceField sample_drift(const DriftSpec& spec, const Grid& grid);

struct InwardReport {
  bool pass = false;
  double min_normal = 0.0;  // smallest boundary F.n
  double max_normal = 0.0;  // largest boundary F.n (the worst face)
  std::size_t worst_face = kNoCell;
};

/// Passes iff F.n < 0 on every boundary face. Failure is reported, not thrown.
InwardReport check_inward(const FaceField& drift);

/// Modified drift F* = F - 2D grad ln u_inf from face log-differences of
/// u_inf on interior faces; boundary faces get -F.n.
FaceField effective_drift(const FaceField& drift, const ScalarField& u_inf, double diffusion);

/// Negated copy, the drift of the dual problem.
FaceField negated(const FaceField& drift);

/// Discrete circulation around every interior vertex of a 2D grid: crossing
/// the four faces between the surrounding cells counterclockwise, summing
/// +-F h. Empty in 1D.
std::vector<double> circulation(const FaceField& drift);

}  // namespace fpl
