#pragma once

#include <optional>
#include <string>

#include "fpratelab/fields.hpp"
#include "fpratelab/operators.hpp"

namespace fpl {

/// Weighted Poincare data for one weight H.
///
/// lambda is the spectral gap: the largest constant with
///   sum H |grad phi|^2  >=  lambda * sum H phi^2
/// over zero-H-mean phi. The Poincare constant is its reciprocal; both are
/// reported because the two conventions are used interchangeably.
struct SpectralReport {
  std::string weight_id;
  double lambda = 0.0;
  double poincare_constant = 0.0;
  ScalarField eigenfunction;
  double residual = 0.0;
  /// (min H / max H) lambda(1) on the same grid.
  double ratio_bound = 0.0;
  double lambda_unweighted = 0.0;
  double next_lambda = 0.0;
  bool near_degenerate = false;
  int iterations = 0;
};

/// Computes lambda(H) and, unless lambda_unweighted is supplied, lambda(1)
/// on the same grid for the ratio bound.
SpectralReport spectral_gap(const Grid& grid, const ScalarField& weight, std::string weight_id,
                            const SolverOptions& opts = {},
                            std::optional<double> lambda_unweighted = std::nullopt);

struct RatioBoundReport {
  bool pass = false;
  double lambda = 0.0;
  double bound = 0.0;
  double margin = 0.0;  // lambda - bound
};

/// lambda(H) >= (min H / max H) lambda(1) - 1e-10.
RatioBoundReport ratio_bound_check(const ScalarField& weight, double lambda_weighted,
                                   double lambda_unweighted);

}  // namespace fpl
