#include "fpratelab/spectral.hpp"

#include <utility>

namespace fpl {

SpectralReport spectral_gap(const Grid& grid, const ScalarField& weight, std::string weight_id,
                            const SolverOptions& opts, std::optional<double> lambda_unweighted) {
  const auto pencil = assemble_stiffness(grid, weight);
  EigenResult eig = smallest_constrained_eigen(pencil.stiffness, pencil.mass, opts);

  if (!lambda_unweighted) {
    const auto flat = assemble_stiffness(grid, ScalarField(grid, 1.0));
    lambda_unweighted = smallest_constrained_eigen(flat.stiffness, flat.mass, opts).lambda;
  }

  SpectralReport r;
  r.weight_id = std::move(weight_id);
  r.lambda = eig.lambda;
  r.poincare_constant = 1.0 / eig.lambda;
  r.eigenfunction = std::move(eig.eigenfunction);
  r.residual = eig.residual;
  r.lambda_unweighted = *lambda_unweighted;
  r.ratio_bound = weight.min() / weight.max() * *lambda_unweighted;
  r.next_lambda = eig.next_lambda;
  r.near_degenerate = eig.near_degenerate;
  r.iterations = eig.iterations;
  return r;
}

RatioBoundReport ratio_bound_check(const ScalarField& weight, double lambda_weighted,
                                   double lambda_unweighted) {
  RatioBoundReport r;
  r.lambda = lambda_weighted;
  r.bound = weight.min() / weight.max() * lambda_unweighted;
  r.margin = lambda_weighted - r.bound;
  r.pass = r.margin >= -1e-10;
  return r;
}

}  // namespace fpl
