#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "fpratelab/error.hpp"
#include "fpratelab/operators.hpp"
#include "fpratelab/stationary.hpp"
#include "test_support.hpp"

using namespace fpl;
using namespace fpl::testing;

namespace {

SparseOperator generator(const Grid& g, const DriftSpec& spec, double d = 1.0) {
  return assemble_fp(g, sample_drift(spec, g), d);
}

DriftSpec random_drift(Rng& rng) {
  switch (static_cast<int>(rng.uniform(0.0, 3.0))) {
    case 0:
      return NeuralDrift{{rng.uniform(-2, 2), rng.uniform(-2, 2)},
                         {{{rng.uniform(0, 3), rng.uniform(0, 3)}, {rng.uniform(0, 3), rng.uniform(0, 3)}}},
                         rng.uniform(0.1, 5.0)};
    case 1:
      return GradientQuadraticDrift{{rng.uniform(0, 1), rng.uniform(0, 1)}, rng.uniform(0.1, 20.0)};
    default:
      return LinearRotationDrift{{rng.uniform(0, 1), rng.uniform(0, 1)}, rng.uniform(-5, 5)};
  }
}

}  // namespace

TEST_CASE("Bernoulli function values") {
  CHECK(bernoulli(0.0) == 1.0);
  CHECK(bernoulli(1.0) == doctest::Approx(1.0 / (std::exp(1.0) - 1.0)).epsilon(1e-15));
  CHECK(bernoulli(1.0) == doctest::Approx(0.581977).epsilon(1e-6));
  CHECK(bernoulli(-1.0) == doctest::Approx(std::exp(1.0) / (std::exp(1.0) - 1.0)).epsilon(1e-15));
  CHECK(bernoulli(800.0) == doctest::Approx(0.0));
  CHECK(bernoulli(-800.0) == doctest::Approx(800.0));
}

TEST_CASE("Bernoulli identity B(z) e^z = B(-z)") {
  for (int k = -50000; k <= 50000; ++k) {
    const double z = k * 1e-3;
    const double lhs = bernoulli(z) * std::exp(z);
    const double rhs = bernoulli(-z);
    CHECK(std::abs(lhs - rhs) <= 1e-14 * std::max(1.0, std::abs(rhs)));
  }
  // Across the series branch.
  for (double z : {-2e-5, -1.0000001e-5, -9.999e-6, -1e-9, 1e-9, 9.999e-6, 1.0000001e-5, 2e-5}) {
    CHECK(std::abs(bernoulli(z) * std::exp(z) - bernoulli(-z)) <= 1e-14);
    CHECK(std::abs(bernoulli(z) - (1.0 - z / 2.0 + z * z / 12.0)) <= 1e-15);
  }
}

TEST_CASE("zero drift gives the Neumann Laplacian") {
  const double d = 0.7;
  const Grid g = box(0.0, 2.0, 5, 4);
  const SparseOperator a = generator(g, ZeroDrift{}, d);
  CHECK(a.role() == OperatorRole::generator);
  const Eigen::MatrixXd m = dense(a);
  // Five-point stencil from the definition.
  const double hx = g.spacing(0);
  const double hy = g.spacing(1);
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(m.rows(), m.cols());
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 5; ++i) {
      const auto c = static_cast<Eigen::Index>(g.cell_index(i, j));
      auto link = [&](int ii, int jj, double w) {
        if (ii < 0 || ii >= 5 || jj < 0 || jj >= 4) return;
        const auto n = static_cast<Eigen::Index>(g.cell_index(ii, jj));
        expected(c, n) += d * w;
        expected(c, c) -= d * w;
      };
      link(i - 1, j, 1.0 / (hx * hx));
      link(i + 1, j, 1.0 / (hx * hx));
      link(i, j - 1, 1.0 / (hy * hy));
      link(i, j + 1, 1.0 / (hy * hy));
    }
  }
  CHECK((m - expected).cwiseAbs().maxCoeff() <= 1e-12 * expected.cwiseAbs().maxCoeff());
  CHECK((m - m.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(max_abs(a.row_sums()) <= 1e-12);
  CHECK(max_abs(a.column_sums()) <= 1e-12);
  CHECK_THROWS_AS(generator(g, ZeroDrift{}, 0.0), std::invalid_argument);
}

TEST_CASE("1D generator annihilates the zero-flux recursion vector") {
  const Grid g = interval(-1.0, 1.0, 64);
  const SparseOperator a = generator(g, LinearRotationDrift{{0.0, 0.0}, 0.0});
  const double h = g.spacing(0);
  std::vector<double> u(64);
  u[0] = 1.0;
  for (int i = 0; i + 1 < 64; ++i) {
    const double x_face = -1.0 + (i + 1) * h;
    u[static_cast<std::size_t>(i) + 1] = u[static_cast<std::size_t>(i)] * std::exp(-x_face * h);
  }
  CHECK(relative_residual(a, u) <= 1e-13);
}

TEST_CASE("generator sign pattern and conservation on random drifts") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const Grid g = trial % 3 == 0 ? interval(0.0, 1.0, 20) : box(0.0, 1.0, 7, 9);
    DriftSpec spec = random_drift(rng);
    if (g.dim() == 1) spec = GradientQuadraticDrift{{0.3, 0.0}, rng.uniform(0.1, 40.0)};
    const SparseOperator a = generator(g, spec, rng.uniform(0.05, 3.0));
    CHECK(max_abs(a.column_sums()) <= 1e-12 * a.norm_inf());
    for (const auto& e : a.entries()) {
      if (e.row == e.col) {
        CHECK(e.value <= 0.0);
      } else {
        CHECK(e.value >= 0.0);
      }
    }
  }
}

TEST_CASE("implicit Euler steps preserve nonnegativity") {
  Rng rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const Grid g = box(0.0, 1.0, 8, 6);
    const SparseOperator a = generator(g, random_drift(rng), rng.uniform(0.05, 2.0));
    const double dt = std::pow(10.0, rng.uniform(-4.0, 2.0));
    SparseOperator::Matrix id(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(a.size()));
    id.setIdentity();
    const SparseOperator step(g, SparseOperator::Matrix(id - dt * a.matrix()), OperatorRole::general);
    std::vector<double> u(a.size());
    for (double& v : u) v = rng.uniform() < 0.3 ? 0.0 : rng.uniform();
    const std::vector<double> next = solve_linear(step, u);
    double total = 0.0;
    double total_next = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
      CHECK(next[i] >= -1e-15);
      total += u[i];
      total_next += next[i];
    }
    CHECK(total_next == doctest::Approx(total).epsilon(1e-11));
  }
}

TEST_CASE("detailed balance for gradient drifts") {
  for (double strength : {0.5, 1.0, 4.0}) {
    const Grid g = unit_square(16);
    const SparseOperator a = generator(g, GradientQuadraticDrift{{0.4, 0.55}, strength});
    const ScalarField u_inf = steady_state(a);
    Eigen::VectorXd s(static_cast<Eigen::Index>(u_inf.size()));
    for (std::size_t i = 0; i < u_inf.size(); ++i) s[static_cast<Eigen::Index>(i)] = std::sqrt(u_inf[i]);
    const Eigen::MatrixXd m = s.cwiseInverse().asDiagonal() * dense(a) * s.asDiagonal();
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * m.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("phi generator") {
  const Grid g = unit_square(8);
  const SparseOperator a = generator(g, LinearRotationDrift{{0.5, 0.5}, 0.5});
  const SparseOperator same = assemble_phi(a, ScalarField(g, 3.0));
  CHECK(same.role() == OperatorRole::phi_generator);
  CHECK((dense(same) - dense(a)).cwiseAbs().maxCoeff() <= 1e-15 * a.norm_inf());

  const ScalarField u_inf = steady_state(a);
  const SparseOperator phi = assemble_phi(a, u_inf);
  const std::vector<double> ones(a.size(), 1.0);
  CHECK(max_abs(phi.apply(ones)) <= 1e-12 * phi.norm_inf());
  CHECK_THROWS_AS(assemble_phi(a, ScalarField(g, 0.0)), std::invalid_argument);

  const SparseOperator t = phi.transposed();
  CHECK(t.role() == OperatorRole::adjoint);
}

TEST_CASE("left kernel of the 1D phi generator is u_inf") {
  const Grid g = interval(-1.0, 1.0, 64);
  const SparseOperator a = generator(g, LinearRotationDrift{{0.0, 0.0}, 0.0});
  const ScalarField u_inf = steady_state(a);
  const ScalarField k = null_vector(assemble_phi(a, u_inf).transposed());
  for (std::size_t i = 0; i < k.size(); ++i) CHECK(std::abs(k[i] - u_inf[i]) <= 1e-10 * u_inf.max());
}

TEST_CASE("stiffness pencil") {
  const Grid g = interval(0.0, 1.0, 4);
  const StiffnessPencil p = assemble_stiffness(g, ScalarField(g, 1.0));
  CHECK(p.stiffness.role() == OperatorRole::stiffness);
  CHECK(p.mass.role() == OperatorRole::mass);
  Eigen::MatrixXd expected(4, 4);
  expected << 4, -4, 0, 0, -4, 8, -4, 0, 0, -4, 8, -4, 0, 0, -4, 4;
  CHECK((dense(p.stiffness) - expected).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((dense(p.mass) - 0.25 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(assemble_stiffness(g, ScalarField(g, 0.0)), std::invalid_argument);
}

TEST_CASE("stiffness kernel and energy") {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const Grid g = trial % 2 ? box(0.0, 3.0, 6, 11) : interval(-2.0, 1.0, 30);
    const ScalarField h = rng.field(g, 0.01, 10.0);
    const StiffnessPencil p = assemble_stiffness(g, h);
    const std::vector<double> ones(g.cell_count(), 1.0);
    CHECK(max_abs(p.stiffness.apply(ones)) <= 1e-14 * p.stiffness.norm_inf());
    CHECK((dense(p.stiffness) - brute_force_stiffness(g, h)).cwiseAbs().maxCoeff() <=
          1e-13 * p.stiffness.norm_inf());

    const ScalarField phi = rng.field(g, -1.0, 1.0);
    const std::vector<double> sp = p.stiffness.apply(phi.values());
    double q = 0.0;
    for (std::size_t i = 0; i < sp.size(); ++i) q += phi[i] * sp[i];
    CHECK(q == doctest::Approx(weighted_dirichlet_energy(phi, h)).epsilon(1e-12));
  }

  const Grid g = interval(0.0, 1.0, 128);
  const auto phi = ScalarField::sample(g, [](double x, double) { return std::cos(kPi * x); });
  const std::vector<double> sp = assemble_stiffness(g, ScalarField(g, 1.0)).stiffness.apply(phi.values());
  double q = 0.0;
  for (std::size_t i = 0; i < sp.size(); ++i) q += phi[i] * sp[i];
  CHECK(std::abs(q - kPi * kPi / 2.0) <= 1e-2);
}

TEST_CASE("solve_linear") {
  const Grid g = unit_square(5);
  const auto n = static_cast<Eigen::Index>(g.cell_count());
  SparseOperator::Matrix id(n, n);
  id.setIdentity();
  const SparseOperator ident(g, id, OperatorRole::general);
  Rng rng(43);
  const ScalarField r = rng.field(g, -1.0, 1.0);
  CHECK(max_abs_diff(solve_linear(ident, r.values()), r.values()) == 0.0);

  // Neumann stiffness with a zero-mean right-hand side.
  const StiffnessPencil p = assemble_stiffness(g, ScalarField(g, 1.0));
  ScalarField b = rng.field(g, -1.0, 1.0);
  const double mean = mass(b) / g.domain_volume();
  for (double& v : b.values()) v -= mean;
  const std::vector<double> x = solve_linear(p.stiffness, b.values());
  double sx = 0.0;
  for (double v : x) sx += v;
  CHECK(std::abs(sx) <= 1e-12 * static_cast<double>(x.size()) * max_abs(x));
  CHECK(max_abs_diff(p.stiffness.apply(x), b.values()) <= 1e-10 * max_abs(b.values()) * 10);

  // No solution: the residual target cannot be met.
  CHECK_THROWS_AS(solve_linear(p.stiffness, std::vector<double>(g.cell_count(), 1.0)), SolverError);
}

TEST_CASE("solve_linear on random SPD systems against dense elimination") {
  Rng rng(47);
  const Grid g = box(0.0, 1.0, 5, 2);  // 10 cells
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::MatrixXd m(10, 10);
    for (Eigen::Index i = 0; i < 10; ++i) {
      for (Eigen::Index j = 0; j < 10; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    }
    const Eigen::MatrixXd spd = m * m.transpose() + 0.5 * Eigen::MatrixXd::Identity(10, 10);
    std::vector<std::vector<double>> rows(10, std::vector<double>(10));
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) rows[i][j] = spd(i, j);
    }
    std::vector<double> rhs(10);
    for (double& v : rhs) v = rng.uniform(-1.0, 1.0);
    const SparseOperator op(g, spd.sparseView(), OperatorRole::general);
    const std::vector<double> x = solve_linear(op, rhs, 1e-13);
    const std::vector<double> oracle = dense_solve(rows, rhs);
    CHECK(max_abs_diff(x, oracle) <= 1e-10 * std::max(1.0, max_abs(oracle)));
  }
}

TEST_CASE("LinearSolver reuses one factorization") {
  const Grid g = unit_square(6);
  const SparseOperator a = generator(g, LinearRotationDrift{{0.5, 0.5}, 1.0});
  const auto n = static_cast<Eigen::Index>(a.size());
  SparseOperator::Matrix id(n, n);
  id.setIdentity();
  const SparseOperator::Matrix m = id - 0.1 * a.matrix();
  const LinearSolver solver(m);
  Rng rng(53);
  for (int k = 0; k < 3; ++k) {
    const ScalarField b = rng.field(g, 0.0, 1.0);
    const std::vector<double> x = solver.solve(b.values());
    const SparseOperator op(g, m, OperatorRole::general);
    CHECK(max_abs_diff(op.apply(x), b.values()) <= 1e-13);
  }
}

TEST_CASE("null vector") {
  const Grid g = box(0.0, 2.0, 7, 5);
  const ScalarField u = null_vector(generator(g, ZeroDrift{}));
  for (double v : u.values()) CHECK(v == doctest::Approx(1.0 / g.domain_volume()).epsilon(1e-12));

  const Grid line = interval(-1.0, 1.0, 128);
  const ScalarField gauss = null_vector(generator(line, LinearRotationDrift{{0.0, 0.0}, 0.0}));
  // Normalizer of exp(-x^2/2) on [-1, 1].
  const double c = 1.0 / (std::sqrt(2.0 * kPi) * std::erf(1.0 / std::sqrt(2.0)));
  CHECK(c == doctest::Approx(1.0 / 1.7112).epsilon(1e-4));
  double worst = 0.0;
  for (std::size_t i = 0; i < gauss.size(); ++i) {
    const double x = line.cell_center(i)[0];
    worst = std::max(worst, std::abs(gauss[i] - c * std::exp(-0.5 * x * x)) / (c * std::exp(-0.5 * x * x)));
  }
  CHECK(worst <= 0.01);
  CHECK(gauss[63] == doctest::Approx(0.5844).epsilon(0.01));
  CHECK(gauss[64] == doctest::Approx(0.5844).epsilon(0.01));
}

TEST_CASE("null vector of a reducible operator is rejected") {
  const Grid g = interval(0.0, 1.0, 3);
  // Cell 0 drains into cell 1, which drains into cell 2: the kernel is
  // supported on cell 2 only.
  Eigen::MatrixXd m(3, 3);
  m << -1, 0, 0, 1, -1, 0, 0, 1, 0;
  const SparseOperator a(g, m.sparseView(), OperatorRole::generator);
  try {
    (void)null_vector(a);
    FAIL("expected a SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.kind()) == "not_irreducible");
  }
}

TEST_CASE("constrained eigenpair on the unit interval") {
  const Grid g = interval(0.0, 1.0, 8);
  const StiffnessPencil p = assemble_stiffness(g, ScalarField(g, 1.0));
  const EigenResult r = smallest_constrained_eigen(p.stiffness, p.mass);
  const double h = 0.125;
  CHECK(std::abs(r.lambda - 2.0 * (1.0 - std::cos(kPi * h)) / (h * h)) <= 1e-10 * r.lambda);
  CHECK(r.lambda == doctest::Approx(9.7434).epsilon(1e-4));
  CHECK(r.residual <= 1e-10);
  CHECK_FALSE(r.near_degenerate);
  CHECK(r.eigenfunction[0] > 0.0);
  // Unit B-norm and zero mean.
  double bn = 0.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    bn += r.eigenfunction[i] * r.eigenfunction[i] * h;
    mean += r.eigenfunction[i] * h;
  }
  CHECK(bn == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(mean) <= 1e-12);
}

TEST_CASE("constrained eigenvalue converges to pi^2 at second order") {
  std::vector<double> err;
  for (int n : {16, 32, 64}) {
    const Grid g = interval(0.0, 1.0, n);
    const StiffnessPencil p = assemble_stiffness(g, ScalarField(g, 1.0));
    err.push_back(std::abs(smallest_constrained_eigen(p.stiffness, p.mass).lambda - kPi * kPi));
  }
  for (std::size_t k = 0; k + 1 < err.size(); ++k) {
    const double order = std::log2(err[k] / err[k + 1]);
    CHECK(order == doctest::Approx(2.0).epsilon(0.02));
  }
}

TEST_CASE("constrained eigenvalue against a dense oracle") {
  Rng rng(59);
  for (int trial = 0; trial < 12; ++trial) {
    const Grid g = trial % 3 == 0 ? interval(0.0, 1.0, 3 + trial) : box(0.0, 1.0, 2 + trial % 9, 3 + trial % 7);
    const ScalarField h = rng.field(g, 0.1, 5.0);
    const StiffnessPencil p = assemble_stiffness(g, h);
    const EigenResult r = smallest_constrained_eigen(p.stiffness, p.mass);
    CHECK(std::abs(r.lambda - dense_gap(g, h)) <= 1e-8 * r.lambda);
  }
}

TEST_CASE("degenerate gap on the square is flagged, not rejected") {
  const Grid g = unit_square(10);
  const StiffnessPencil p = assemble_stiffness(g, ScalarField(g, 1.0));
  const EigenResult r = smallest_constrained_eigen(p.stiffness, p.mass);
  CHECK(r.near_degenerate);
  CHECK(std::abs(r.lambda - discrete_neumann_gap(g)) <= 1e-10 * r.lambda);
  CHECK(std::abs(r.next_lambda - r.lambda) <= 1e-8 * r.lambda);
}

TEST_CASE("eigensolver on two cells") {
  const Grid g = box(0.0, 1.0, 2, 2);
  const StiffnessPencil p = assemble_stiffness(g, ScalarField(g, 1.0));
  const EigenResult r = smallest_constrained_eigen(p.stiffness, p.mass);
  CHECK(std::abs(r.lambda - dense_gap(g, ScalarField(g, 1.0))) <= 1e-10 * r.lambda);

  const Grid line = interval(0.0, 1.0, 2);
  const StiffnessPencil q = assemble_stiffness(line, ScalarField(line, 1.0));
  const EigenResult s = smallest_constrained_eigen(q.stiffness, q.mass);
  CHECK(s.lambda == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(std::isnan(s.next_lambda));
}
