#pragma once

#include "fpratelab/drift.hpp"
#include "fpratelab/fields.hpp"
#include "fpratelab/operators.hpp"

namespace fpl {

/// Positive, unit-mass kernel of the generator. Throws SolverError if the
/// residual ||A u|| / ||A|| exceeds opts.tol.
ScalarField steady_state(const SparseOperator& generator, const SolverOptions& opts = {});

enum class DualMethod {
  /// Kernel of the transposed phi-generator: the discrete adjoint of the
  /// phi evolution, so sum K phi is conserved exactly.
  adjoint,
  /// Steady state of the Fokker-Planck problem with drift -F*, an
  /// independent discretization of the dual equation.
  direct,
};

const char* dual_method_name(DualMethod method);

/// Dual state K, unit mass and strictly positive.
ScalarField dual_state(const Grid& grid, const SparseOperator& generator, const ScalarField& u_inf,
                       const FaceField& drift, double diffusion, DualMethod method,
                       const SolverOptions& opts = {});

struct PositivityBounds {
  double min = 0.0;
  double max = 0.0;
  double ratio = 0.0;  // max / min
};

/// Throws SolverError unless min > 0 and the ratio is finite.
PositivityBounds positivity_bounds(const ScalarField& f);

}  // namespace fpl
