#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "fpratelab/drift.hpp"
#include "fpratelab/fields.hpp"
#include "fpratelab/grid.hpp"

namespace fpl {

enum class OperatorRole { generator, phi_generator, adjoint, stiffness, mass, general };

const char* role_name(OperatorRole role);

/// Sparse square operator over the cells of a grid, tagged with its role.
/// Entries are kept in Eigen's compressed column-major order, which is
/// deterministic for a given assembly sequence.
class SparseOperator {
 public:
  using Matrix = Eigen::SparseMatrix<double>;

  struct Entry {
    std::size_t row;
    std::size_t col;
    double value;
  };

  SparseOperator(Grid grid, Matrix matrix, OperatorRole role);

  const Grid& grid() const { return grid_; }
  const Matrix& matrix() const { return matrix_; }
  OperatorRole role() const { return role_; }
  std::size_t size() const { return static_cast<std::size_t>(matrix_.rows()); }

  std::vector<double> apply(std::span<const double> x) const;
  /// Transpose; generators become adjoint operators.
  SparseOperator transposed() const;
  std::vector<Entry> entries() const;

  /// max_i sum_j |a_ij|
  double norm_inf() const;
  std::vector<double> column_sums() const;
  std::vector<double> row_sums() const;

 private:
  Grid grid_;
  Matrix matrix_;
  OperatorRole role_;
};

/// B(z) = z / (e^z - 1), with a Taylor branch for |z| < 1e-5.
double bernoulli(double z);

/// Scharfetter-Gummel generator A of du/dt = A u for the no-flux
/// Fokker-Planck problem with face drift F and diffusion D. Boundary faces
/// carry zero flux.
SparseOperator assemble_fp(const Grid& grid, const FaceField& drift, double diffusion);

/// diag(1/u_inf) A diag(u_inf): the generator of phi = u / u_inf.
SparseOperator assemble_phi(const SparseOperator& generator, const ScalarField& u_inf);

struct StiffnessPencil {
  SparseOperator stiffness;
  SparseOperator mass;
};

/// Weighted Neumann stiffness S_H (arithmetic-mean face weights, the same
/// quadratic form as weighted_dirichlet_energy) and the mass B_H = diag(H vol).
StiffnessPencil assemble_stiffness(const Grid& grid, const ScalarField& weight);

struct SolverOptions {
  double tol = 1e-10;
  int max_iter = 500;
  /// Inverse-iteration shift, relative to max |diagonal|.
  double shift = 1e-8;
};

/// LU factorization reused across many right-hand sides.
class LinearSolver {
 public:
  explicit LinearSolver(const SparseOperator::Matrix& matrix);
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  std::vector<double> solve(std::span<const double> rhs) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Solves Aop x = rhs with residual <= tol |rhs|. Singular operators with a
/// constant kernel (Neumann stiffness, generators) are solved on the
/// zero-mean subspace through a bordered system. Throws SolverError when the
/// residual target is missed.
std::vector<double> solve_linear(const SparseOperator& op, std::span<const double> rhs,
                                 double tol = 1e-10);

/// Positive kernel vector of a generator, phi-generator or adjoint, by
/// shifted inverse iteration; unit mass. Throws SolverError on
/// non-convergence or when the kernel vector is not strictly positive
/// (reducible operator).
ScalarField null_vector(const SparseOperator& op, const SolverOptions& opts = {});

/// ||op x||_inf / (||op||_inf ||x||_inf)
double relative_residual(const SparseOperator& op, std::span<const double> x);

struct EigenResult {
  double lambda = 0.0;
  ScalarField eigenfunction;
  double residual = 0.0;
  /// Next Ritz value above lambda (NaN when the constrained space is 1D).
  double next_lambda = 0.0;
  bool near_degenerate = false;
  int iterations = 0;
};

/// Smallest lambda > 0 of S phi = lambda B phi on the subspace
/// 1^T B phi = 0, by block inverse iteration with Rayleigh-Ritz. The
/// eigenfunction has unit B-norm and its first non-negligible entry positive.
EigenResult smallest_constrained_eigen(const SparseOperator& stiffness,
                                       const SparseOperator& mass,
                                       const SolverOptions& opts = {});

}  // namespace fpl
