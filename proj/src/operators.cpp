#include "fpratelab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

#include "fpratelab/error.hpp"

namespace fpl {
namespace {

using Matrix = SparseOperator::Matrix;
using Triplet = Eigen::Triplet<double>;

Eigen::Map<const Eigen::VectorXd> as_eigen(std::span<const double> x) {
  return {x.data(), static_cast<Eigen::Index>(x.size())};
}

constexpr int kRefineSteps = 3;

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

Matrix bordered(const Matrix& a, const Eigen::VectorXd& border) {
  const Eigen::Index n = a.rows();
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(a.nonZeros() + 2 * n));
  for (Eigen::Index k = 0; k < a.outerSize(); ++k) {
    for (Matrix::InnerIterator it(a, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    t.emplace_back(i, n, border[i]);
    t.emplace_back(n, i, border[i]);
  }
  Matrix m(n + 1, n + 1);
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

void require_square_on_grid(const SparseOperator& op) {
  if (op.matrix().rows() != op.matrix().cols() ||
      static_cast<std::size_t>(op.matrix().rows()) != op.grid().cell_count()) {
    throw std::invalid_argument("operator must be square with one row per grid cell");
  }
}

/// Every cell reaches every other along positive off-diagonal entries:
/// cell 0 reaches all cells and all cells reach cell 0.
bool strongly_connected(const Matrix& a) {
  const Eigen::Index n = a.rows();
  std::vector<std::vector<Eigen::Index>> out(static_cast<std::size_t>(n)), in(static_cast<std::size_t>(n));
  for (Eigen::Index k = 0; k < a.outerSize(); ++k) {
    for (Matrix::InnerIterator it(a, k); it; ++it) {
      if (it.row() != it.col() && it.value() > 0.0) {
        out[static_cast<std::size_t>(it.col())].push_back(it.row());
        in[static_cast<std::size_t>(it.row())].push_back(it.col());
      }
    }
  }
  auto reaches_all = [n](const std::vector<std::vector<Eigen::Index>>& adj) {
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<Eigen::Index> stack{0};
    seen[0] = 1;
    Eigen::Index count = 1;
    while (!stack.empty()) {
      const Eigen::Index v = stack.back();
      stack.pop_back();
      for (Eigen::Index w : adj[static_cast<std::size_t>(v)]) {
        if (!seen[static_cast<std::size_t>(w)]) {
          seen[static_cast<std::size_t>(w)] = 1;
          ++count;
          stack.push_back(w);
        }
      }
    }
    return count == n;
  };
  return reaches_all(out) && reaches_all(in);
}

}  // namespace

const char* role_name(OperatorRole role) {
  switch (role) {
    case OperatorRole::generator: return "generator";
    case OperatorRole::phi_generator: return "phi_generator";
    case OperatorRole::adjoint: return "adjoint";
    case OperatorRole::stiffness: return "stiffness";
    case OperatorRole::mass: return "mass";
    case OperatorRole::general: return "general";
  }
  return "general";
}

SparseOperator::SparseOperator(Grid grid, Matrix matrix, OperatorRole role)
    : grid_(grid), matrix_(std::move(matrix)), role_(role) {
  matrix_.makeCompressed();
}

std::vector<double> SparseOperator::apply(std::span<const double> x) const {
  if (x.size() != size()) throw std::invalid_argument("vector length does not match operator");
  return to_std(matrix_ * as_eigen(x));
}

SparseOperator SparseOperator::transposed() const {
  OperatorRole r = role_;
  if (r == OperatorRole::generator || r == OperatorRole::phi_generator) r = OperatorRole::adjoint;
  else if (r == OperatorRole::adjoint) r = OperatorRole::general;
  Matrix t = matrix_.transpose();
  return SparseOperator(grid_, std::move(t), r);
}

std::vector<SparseOperator::Entry> SparseOperator::entries() const {
  std::vector<Entry> out;
  out.reserve(static_cast<std::size_t>(matrix_.nonZeros()));
  for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
    for (Matrix::InnerIterator it(matrix_, k); it; ++it) {
      out.push_back({static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col()),
                     it.value()});
    }
  }
  return out;
}

double SparseOperator::norm_inf() const {
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(matrix_.rows());
  for (Eigen::Index k = 0; k < matrix_.outerSize(); ++k) {
    for (Matrix::InnerIterator it(matrix_, k); it; ++it) rows[it.row()] += std::abs(it.value());
  }
  return inf_norm(rows);
}

std::vector<double> SparseOperator::column_sums() const {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(matrix_.rows());
  return to_std(matrix_.transpose() * ones);
}

std::vector<double> SparseOperator::row_sums() const {
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(matrix_.cols());
  return to_std(matrix_ * ones);
}

double bernoulli(double z) {
  if (std::abs(z) < 1e-5) return 1.0 - z / 2.0 + z * z / 12.0;
  return z / std::expm1(z);
}

SparseOperator assemble_fp(const Grid& grid, const FaceField& drift, double diffusion) {
  if (!(diffusion > 0.0) || !std::isfinite(diffusion)) {
    throw std::invalid_argument("diffusion must be a finite positive number");
  }
  if (!(drift.grid() == grid)) throw std::invalid_argument("drift sampled on a different grid");
  const double vol = grid.cell_volume();
  std::vector<Triplet> t;
  t.reserve(4 * grid.interior_face_count());
  grid.for_each_face([&](std::size_t k, const Face& f) {
    if (f.boundary()) return;  // no-flux
    const double h = grid.spacing(f.axis);
    const double pe = drift[k] * h / diffusion;
    const double c = diffusion * f.area / (h * vol);
    const double out_of_lower = c * bernoulli(-pe);
    const double out_of_upper = c * bernoulli(pe);
    // flux lower -> upper: J = c vol [B(-Pe) u_lower - B(Pe) u_upper]
    t.emplace_back(f.lower, f.lower, -out_of_lower);
    t.emplace_back(f.upper, f.lower, out_of_lower);
    t.emplace_back(f.upper, f.upper, -out_of_upper);
    t.emplace_back(f.lower, f.upper, out_of_upper);
  });
  const auto n = static_cast<Eigen::Index>(grid.cell_count());
  Matrix a(n, n);
  a.setFromTriplets(t.begin(), t.end());
  return SparseOperator(grid, std::move(a), OperatorRole::generator);
}

SparseOperator assemble_phi(const SparseOperator& generator, const ScalarField& u_inf) {
  require_square_on_grid(generator);
  if (!(generator.grid() == u_inf.grid())) {
    throw std::invalid_argument("generator and u_inf are defined on different grids");
  }
  require_positive(u_inf, "u_inf");
  Matrix m = generator.matrix();
  for (Eigen::Index k = 0; k < m.outerSize(); ++k) {
    for (Matrix::InnerIterator it(m, k); it; ++it) {
      it.valueRef() *= u_inf[static_cast<std::size_t>(it.col())] /
                       u_inf[static_cast<std::size_t>(it.row())];
    }
  }
  return SparseOperator(generator.grid(), std::move(m), OperatorRole::phi_generator);
}

StiffnessPencil assemble_stiffness(const Grid& grid, const ScalarField& weight) {
  if (!(weight.grid() == grid)) throw std::invalid_argument("weight defined on a different grid");
  require_positive(weight, "weight H");
  std::vector<Triplet> t;
  t.reserve(4 * grid.interior_face_count());
  grid.for_each_face([&](std::size_t, const Face& f) {
    if (f.boundary()) return;
    const double w = 0.5 * (weight[f.lower] + weight[f.upper]) * f.area / grid.spacing(f.axis);
    t.emplace_back(f.lower, f.lower, w);
    t.emplace_back(f.upper, f.upper, w);
    t.emplace_back(f.lower, f.upper, -w);
    t.emplace_back(f.upper, f.lower, -w);
  });
  const auto n = static_cast<Eigen::Index>(grid.cell_count());
  Matrix s(n, n);
  s.setFromTriplets(t.begin(), t.end());
  Matrix b(n, n);
  std::vector<Triplet> d;
  d.reserve(grid.cell_count());
  for (std::size_t c = 0; c < grid.cell_count(); ++c) {
    d.emplace_back(c, c, weight[c] * grid.cell_volume());
  }
  b.setFromTriplets(d.begin(), d.end());
  return {SparseOperator(grid, std::move(s), OperatorRole::stiffness),
          SparseOperator(grid, std::move(b), OperatorRole::mass)};
}

struct LinearSolver::Impl {
  Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>> lu;
};

LinearSolver::LinearSolver(const Matrix& matrix) : impl_(std::make_unique<Impl>()) {
  impl_->lu.compute(matrix);
  if (impl_->lu.info() != Eigen::Success) {
    throw SolverError("factorization", "sparse LU factorization failed: " +
                                           impl_->lu.lastErrorMessage());
  }
}

LinearSolver::~LinearSolver() = default;
LinearSolver::LinearSolver(LinearSolver&&) noexcept = default;
LinearSolver& LinearSolver::operator=(LinearSolver&&) noexcept = default;

std::vector<double> LinearSolver::solve(std::span<const double> rhs) const {
  Eigen::VectorXd x = impl_->lu.solve(as_eigen(rhs));
  return to_std(x);
}

double relative_residual(const SparseOperator& op, std::span<const double> x) {
  const Eigen::VectorXd r = op.matrix() * as_eigen(x);
  const double scale = op.norm_inf() * inf_norm(as_eigen(x));
  return scale > 0.0 ? inf_norm(r) / scale : inf_norm(r);
}

std::vector<double> solve_linear(const SparseOperator& op, std::span<const double> rhs,
                                 double tol) {
  require_square_on_grid(op);
  if (rhs.size() != op.size()) throw std::invalid_argument("rhs length does not match operator");
  const Eigen::VectorXd b = as_eigen(rhs);
  const double bnorm = b.norm();
  if (bnorm == 0.0) return std::vector<double>(rhs.size(), 0.0);
  const Matrix& a = op.matrix();
  auto residual = [&](const Eigen::VectorXd& x) { return (a * x - b).norm(); };
  auto accept = [&](const Eigen::VectorXd& x) { return x.allFinite() && residual(x) <= tol * bnorm; };

  const Eigen::Index n = a.rows();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
  const bool constant_kernel =
      inf_norm(a * ones) <= 1e-12 * std::max(op.norm_inf(), 1e-300);
  double best = std::numeric_limits<double>::infinity();

  if (!constant_kernel) {
    Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>> lu(a);
    if (lu.info() == Eigen::Success) {
      Eigen::VectorXd x = lu.solve(b);
      // A few rounds of iterative refinement for ill-conditioned steps.
      for (int k = 0; k < kRefineSteps && x.allFinite() && !accept(x); ++k) {
        x += lu.solve(Eigen::VectorXd(b - a * x));
      }
      if (accept(x)) return to_std(x);
      if (x.allFinite()) best = residual(x);
    }
  }

  // Singular with a one-dimensional kernel: [A 1; 1^T 0] pins the mean to zero.
  const Matrix m = bordered(a, ones);
  Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>> lu(m);
  if (lu.info() == Eigen::Success) {
    Eigen::VectorXd rhs_b(n + 1);
    rhs_b.head(n) = b;
    rhs_b[n] = 0.0;
    Eigen::VectorXd y = lu.solve(rhs_b);
    for (int k = 0; k < kRefineSteps && y.allFinite() && !accept(y.head(n)); ++k) {
      y += lu.solve(Eigen::VectorXd(rhs_b - m * y));
    }
    const Eigen::VectorXd x = y.head(n);
    if (accept(x)) return to_std(x);
    if (x.allFinite()) best = std::min(best, residual(x));
  }
  throw SolverError("linear_solve", "linear solve missed residual target: |Ax - b| / |b| = " +
                                        sci(best / bnorm) + " > " + sci(tol));
}

ScalarField null_vector(const SparseOperator& op, const SolverOptions& opts) {
  require_square_on_grid(op);
  if (op.role() == OperatorRole::stiffness || op.role() == OperatorRole::mass) {
    throw std::invalid_argument("null_vector expects a generator, phi-generator or adjoint");
  }
  const Matrix& a = op.matrix();
  const Eigen::Index n = a.rows();
  const double scale = op.norm_inf();
  double max_diag = 0.0;
  for (Eigen::Index k = 0; k < a.outerSize(); ++k) {
    for (Matrix::InnerIterator it(a, k); it; ++it) {
      if (it.row() == it.col()) {
        max_diag = std::max(max_diag, std::abs(it.value()));
      } else if (it.value() < -1e-14 * scale) {
        throw std::invalid_argument("null_vector: negative off-diagonal entry");
      }
    }
  }
  if (!(max_diag > 0.0)) throw SolverError("null_vector", "operator has an empty diagonal");

  if (!strongly_connected(a)) {
    throw SolverError("not_irreducible", "operator graph is not strongly connected");
  }

  Matrix shifted = a;
  const double sigma = opts.shift * max_diag;
  for (Eigen::Index i = 0; i < n; ++i) shifted.coeffRef(i, i) -= sigma;
  const LinearSolver solver(shifted);

  // The scaled residual can meet tol while the vector still carries an
  // O(sigma / gap) share of the next mode, so keep going until the iterate
  // itself settles.
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  double res = std::numeric_limits<double>::infinity();
  double change = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iter; ++it) {
    const auto y = solver.solve({x.data(), static_cast<std::size_t>(n)});
    Eigen::VectorXd next = as_eigen(y);
    const double s = next.sum();
    if (!next.allFinite() || s == 0.0) break;
    next /= s;
    const double step = (next - x).cwiseAbs().maxCoeff() / next.cwiseAbs().maxCoeff();
    x = std::move(next);
    res = relative_residual(op, {x.data(), static_cast<std::size_t>(n)});
    if (res <= opts.tol && (step <= 1e-14 || step >= change)) break;
    change = step;
  }
  if (!(res <= opts.tol)) {
    throw SolverError("null_vector", "inverse iteration did not converge (residual " +
                                         sci(res) + ")");
  }
  if (!(x.minCoeff() > 0.0)) {
    throw SolverError("not_irreducible",
                      "kernel vector is not strictly positive; operator is not irreducible");
  }
  ScalarField f(op.grid(), to_std(x));
  return normalized(f);
}

EigenResult smallest_constrained_eigen(const SparseOperator& stiffness, const SparseOperator& mass,
                                       const SolverOptions& opts) {
  require_square_on_grid(stiffness);
  require_square_on_grid(mass);
  if (stiffness.size() != mass.size()) throw std::invalid_argument("pencil size mismatch");
  const Eigen::Index n = stiffness.matrix().rows();
  if (n < 2) throw std::invalid_argument("constrained eigenproblem needs at least 2 cells");

  const Eigen::VectorXd bdiag = mass.matrix().diagonal();
  if (!(bdiag.minCoeff() > 0.0)) throw std::invalid_argument("mass matrix must be positive");
  const Matrix& s = stiffness.matrix();
  const double btot = bdiag.sum();

  auto project = [&](Eigen::Ref<Eigen::VectorXd> v) { v.array() -= bdiag.dot(v) / btot; };
  auto bdot = [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a.array() * bdiag.array() * b.array()).sum();
  };

  const Eigen::Index p = std::min<Eigen::Index>(6, n - 1);
  const Matrix m = bordered(s, bdiag);
  Eigen::SparseLU<Matrix, Eigen::COLAMDOrdering<int>> lu(m);
  if (lu.info() != Eigen::Success) {
    throw SolverError("factorization", "bordered stiffness factorization failed");
  }

  // Fixed-seed start block for reproducible output.
  std::mt19937_64 gen(0x5eed);
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, j) = static_cast<double>(gen() >> 11) * 0x1.0p-53 - 0.5;
    }
  }

  // B-orthonormalize columns against the constants and each other; returns
  // the number of columns kept.
  auto orthonormalize = [&](Eigen::MatrixXd& y) {
    Eigen::Index kept = 0;
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      Eigen::VectorXd v = y.col(j);
      const double before = std::sqrt(bdot(v, v));
      for (int pass = 0; pass < 2; ++pass) {
        project(v);
        for (Eigen::Index k = 0; k < kept; ++k) v -= bdot(y.col(k), v) * y.col(k);
      }
      const double nrm = std::sqrt(bdot(v, v));
      if (nrm > 1e-12 * before && nrm > 0.0) y.col(kept++) = v / nrm;
    }
    y.conservativeResize(Eigen::NoChange, kept);
    return kept;
  };
  orthonormalize(x);

  EigenResult result;
  Eigen::VectorXd rhs(n + 1);
  double res = std::numeric_limits<double>::infinity();
  Eigen::VectorXd theta;
  int it = 0;
  for (; it < opts.max_iter; ++it) {
    Eigen::MatrixXd y(n, x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      rhs.head(n) = bdiag.cwiseProduct(x.col(j));
      rhs[n] = 0.0;
      y.col(j) = lu.solve(rhs).head(n);
    }
    if (orthonormalize(y) == 0) throw SolverError("eigen", "inverse iteration block collapsed");
    const Eigen::MatrixXd sy = s * y;
    Eigen::MatrixXd reduced = y.transpose() * sy;
    reduced = 0.5 * (reduced + reduced.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(reduced);
    theta = ritz.eigenvalues();
    x = y * ritz.eigenvectors();
    const Eigen::VectorXd x0 = x.col(0);
    const Eigen::VectorXd bx = bdiag.cwiseProduct(x0);
    res = (s * x0 - theta[0] * bx).norm() / bx.norm();
    if (res <= opts.tol) {
      ++it;
      break;
    }
  }
  if (!(res <= opts.tol)) {
    throw SolverError("eigen", "constrained inverse iteration did not converge (residual " +
                                   sci(res) + ")");
  }

  Eigen::VectorXd v = x.col(0);
  v /= std::sqrt(bdot(v, v));
  const double vmax = v.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(v[i]) > 1e-8 * vmax) {
      if (v[i] < 0.0) v = -v;
      break;
    }
  }
  result.lambda = theta[0];
  result.eigenfunction = ScalarField(stiffness.grid(), to_std(v));
  result.residual = res;
  result.next_lambda = theta.size() > 1 ? theta[1] : std::numeric_limits<double>::quiet_NaN();
  result.near_degenerate = theta.size() > 1 && (theta[1] - theta[0]) < 1e-8 * theta[0];
  result.iterations = it;
  return result;
}

}  // namespace fpl
