#include "fpratelab/stationary.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "fpratelab/error.hpp"

namespace fpl {

ScalarField steady_state(const SparseOperator& generator, const SolverOptions& opts) {
  if (generator.role() != OperatorRole::generator && generator.role() != OperatorRole::adjoint) {
    throw std::invalid_argument(std::string("steady_state expects a generator, got ") +
                                role_name(generator.role()));
  }
  ScalarField u = null_vector(generator, opts);
  const double res = relative_residual(generator, u.values());
  if (!(res <= opts.tol)) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "steady state residual %.3e above tolerance %.3e", res, opts.tol);
    throw SolverError("steady_state", buf);
  }
  positivity_bounds(u);
  return u;
}

const char* dual_method_name(DualMethod method) {
  return method == DualMethod::adjoint ? "adjoint" : "direct";
}

ScalarField dual_state(const Grid& grid, const SparseOperator& generator, const ScalarField& u_inf,
                       const FaceField& drift, double diffusion, DualMethod method,
                       const SolverOptions& opts) {
  if (!(generator.grid() == grid) || !(u_inf.grid() == grid) || !(drift.grid() == grid)) {
    throw std::invalid_argument("dual_state inputs live on different grids");
  }
  ScalarField k;
  if (method == DualMethod::adjoint) {
    const SparseOperator adj = assemble_phi(generator, u_inf).transposed();
    k = null_vector(adj, opts);
  } else {
    const FaceField fstar = effective_drift(drift, u_inf, diffusion);
    k = steady_state(assemble_fp(grid, negated(fstar), diffusion), opts);
  }
  if (!(k.min() > 0.0)) {
    throw SolverError("dual_state", "dual state is not strictly positive");
  }
  return k;
}

PositivityBounds positivity_bounds(const ScalarField& f) {
  PositivityBounds b{f.min(), f.max(), 0.0};
  if (!(b.min > 0.0)) throw SolverError("positivity", "field is not strictly positive");
  b.ratio = b.max / b.min;
  if (!std::isfinite(b.ratio)) throw SolverError("positivity", "field bounds ratio is not finite");
  return b;
}

}  // namespace fpl
