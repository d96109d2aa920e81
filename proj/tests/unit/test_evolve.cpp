#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "fpratelab/evolve.hpp"
#include "fpratelab/spectral.hpp"
#include "fpratelab/stationary.hpp"
#include "test_support.hpp"

using namespace fpl;
using namespace fpl::testing;

namespace {

struct Problem {
  Grid grid;
  FaceField drift;
  SparseOperator a;
  ScalarField u_inf;
  ScalarField k;
  SparseOperator a_hat;
};

Problem make(const Grid& g, const DriftSpec& spec) {
  FaceField f = sample_drift(spec, g);
  SparseOperator a = assemble_fp(g, f, 1.0);
  ScalarField u = steady_state(a);
  ScalarField k = dual_state(g, a, u, f, 1.0, DualMethod::adjoint);
  SparseOperator a_hat = assemble_phi(a, u);
  return {g, std::move(f), std::move(a), std::move(u), std::move(k), std::move(a_hat)};
}

StepOptions steps(double dt, double t, double theta = 1.0, int stride = 0) {
  StepOptions o;
  o.dt = dt;
  o.final_time = t;
  o.theta = theta;
  o.snapshot_stride = stride;
  return o;
}

}  // namespace

TEST_CASE("the steady state does not move") {
  const Problem p = make(unit_square(16), LinearRotationDrift{{0.5, 0.5}, 0.5});
  const Trajectory t = evolve(p.a, p.u_inf, p.u_inf, steps(1e-2, 1.0));
  CHECK(t.times.size() == 101);
  for (const auto& d : t.diagnostics) CHECK(d.l2_dist <= 1e-10);
}

TEST_CASE("trajectory bookkeeping") {
  const Problem p = make(unit_square(8), GradientQuadraticDrift{{0.5, 0.5}, 1.0});
  const ScalarField u0 = perturbed_initial(p.u_inf, 3);
  const Trajectory t = evolve(p.a, u0, p.u_inf, steps(0.01, 0.25, 1.0, 10));
  CHECK(t.times.size() == t.diagnostics.size());
  CHECK(t.times.size() == 26);
  CHECK(t.times.back() == doctest::Approx(0.25).epsilon(1e-14));
  for (std::size_t k = 1; k < t.times.size(); ++k) CHECK(t.times[k] > t.times[k - 1]);
  CHECK(t.snapshots.size() == 3);
  CHECK(t.snapshots[1].step == 10);
  CHECK(t.snapshots[1].time == doctest::Approx(0.1));
  CHECK(t.final_state.grid() == p.grid);

  CHECK_THROWS_AS(evolve(p.a, u0, p.u_inf, steps(0.0, 1.0)), std::invalid_argument);
  CHECK_THROWS_AS(evolve(p.a, u0, p.u_inf, steps(0.1, 1.0, 0.3)), std::invalid_argument);
  ScalarField twice = u0;
  for (double& v : twice.values()) v *= 2.0;
  CHECK_THROWS_AS(evolve(p.a, twice, p.u_inf, steps(0.1, 1.0)), std::invalid_argument);
}

TEST_CASE("mass is conserved for both schemes") {
  const Problem p = make(unit_square(32), LinearRotationDrift{{0.5, 0.5}, 0.5});
  const ScalarField u0 = perturbed_initial(p.u_inf, 5);
  for (double theta : {1.0, 0.5}) {
    const Trajectory t = evolve(p.a, u0, p.u_inf, steps(1e-3, 0.2, theta));
    for (const auto& d : t.diagnostics) CHECK(std::abs(d.mass - 1.0) <= 1e-10);
  }
}

TEST_CASE("implicit Euler keeps densities nonnegative") {
  const Problem p = make(unit_square(16), NeuralDrift{{0.0, 0.0}, {{{0.1, 0.05}, {0.05, 0.1}}}, 1.0});
  // Mass concentrated in a single corner cell.
  ScalarField u0(p.grid, 0.0);
  u0[0] = 1.0 / p.grid.cell_volume();
  const Trajectory t = evolve(p.a, u0, p.u_inf, steps(1e-3, 0.05, 1.0, 1));
  for (const Snapshot& s : t.snapshots) CHECK(s.state.min() >= 0.0);
  CHECK(max_entropy_increase(t) <= 1e-9);
}

TEST_CASE("pure diffusion of a cosine mode") {
  const Grid g = interval(0.0, 1.0, 128);
  const Problem p = make(g, ZeroDrift{});
  const auto u0 = ScalarField::sample(g, [](double x, double) { return 1.0 + 0.1 * std::cos(kPi * x); });
  const Trajectory t = evolve(p.a, u0, p.u_inf, steps(1e-3, 1.0));
  for (std::size_t k = 0; k < t.times.size() && t.times[k] <= 0.3 + 1e-12; ++k) {
    const double exact = 0.005 * std::exp(-2.0 * kPi * kPi * t.times[k]);
    CHECK(std::abs(t.diagnostics[k].entropy - exact) <= 0.03 * exact);
  }
  CHECK(max_entropy_increase(t) <= 1e-9);
  const DecayReport e = fit_decay(t, DecayQuantity::entropy, kPi * kPi);
  CHECK(e.valid);
  CHECK(std::abs(e.alpha_fit - kPi * kPi) <= 0.05 * kPi * kPi);
  const DecayReport l = fit_decay(t, DecayQuantity::l2_dist, kPi * kPi);
  CHECK(std::abs(l.alpha_fit - kPi * kPi) <= 0.05 * kPi * kPi);
  CHECK(l.t_start >= 0.2 - 1e-12);
}

TEST_CASE("constants are equilibria of the phi flow") {
  const Problem p = make(unit_square(16), LinearRotationDrift{{0.5, 0.5}, 0.5});
  const Trajectory t = evolve_phi(p.a_hat, ScalarField(p.grid, 1.0), p.k, steps(1e-2, 1.0));
  for (double v : t.final_state.values()) CHECK(std::abs(v - 1.0) <= 1e-12);
  CHECK(std::isnan(t.diagnostics.front().mass));
}

TEST_CASE("weighted mean of phi is conserved with the adjoint dual") {
  const Problem p = make(unit_square(32), LinearRotationDrift{{0.5, 0.5}, 0.5});
  Rng rng(71);
  const ScalarField phi0 = rng.field(p.grid, -1.0, 1.0);
  const Trajectory t = evolve_phi(p.a_hat, phi0, p.k, steps(1e-3, 0.5));
  CHECK(max_phi_k_drift(t) <= 1e-9);
}

TEST_CASE("zero-mean phi decays monotonically in the K norm") {
  const Problem p = make(unit_square(24), NeuralDrift{{0.0, 0.0}, {{{0.1, 0.05}, {0.05, 0.1}}}, 1.0});
  Rng rng(73);
  const ScalarField phi0 = remove_weighted_mean(rng.field(p.grid, -1.0, 1.0), p.k);
  const Trajectory t = evolve_phi(p.a_hat, phi0, p.k, steps(1e-3, 0.5));
  CHECK(std::abs(t.diagnostics.front().phi_k) <= 1e-15);
  for (std::size_t k = 1; k < t.diagnostics.size(); ++k) {
    CHECK(t.diagnostics[k].phi_sq_k <= t.diagnostics[k - 1].phi_sq_k);
  }
}

TEST_CASE("K-norm decay rate matches the K-weighted energy") {
  const Problem p = make(unit_square(32), LinearRotationDrift{{0.5, 0.5}, 0.5});
  const ScalarField phi0 = remove_weighted_mean(
      ScalarField::sample(p.grid, [](double x, double y) { return std::cos(kPi * x) + 0.5 * std::cos(kPi * y); }),
      p.k);
  const double dt = 1e-4;
  const Trajectory t = evolve_phi(p.a_hat, phi0, p.k, steps(dt, 0.02, 1.0, 1));
  const StiffnessPencil sk = assemble_stiffness(p.grid, p.k);
  double worst = 0.0;
  for (std::size_t n = 1; n < t.snapshots.size(); ++n) {
    const ScalarField& phi = t.snapshots[n].state;
    const std::vector<double> sp = sk.stiffness.apply(phi.values());
    double energy = 0.0;
    for (std::size_t i = 0; i < sp.size(); ++i) energy += phi[i] * sp[i];
    const double rate = (weighted_norm_sq(t.snapshots[n - 1].state, p.k) - weighted_norm_sq(phi, p.k)) / (2.0 * dt);
    worst = std::max(worst, std::abs(rate - energy) / energy);
  }
  // O(dt) from the time step plus O(h^2) from the arithmetic-mean face weights.
  CHECK(worst <= 0.02);
}

TEST_CASE("u flow and phi flow agree") {
  const Problem p = make(unit_square(16), LinearRotationDrift{{0.5, 0.5}, 0.5});
  const ScalarField u0 = perturbed_initial(p.u_inf, 9);
  for (double theta : {1.0, 0.5}) {
    const StepOptions o = steps(1e-3, 0.3, theta, 50);
    const Trajectory tu = evolve(p.a, u0, p.u_inf, o, p.k);
    const Trajectory tp = evolve_phi(p.a_hat, ratio(u0, p.u_inf), p.k, o, p.u_inf);
    REQUIRE(tu.snapshots.size() == tp.snapshots.size());
    for (std::size_t s = 0; s < tu.snapshots.size(); ++s) {
      const ScalarField phi = ratio(tu.snapshots[s].state, p.u_inf);
      CHECK(max_abs_diff(phi.values(), tp.snapshots[s].state.values()) <= 1e-12 * max_abs(phi.values()));
    }
    for (std::size_t k = 0; k < tu.diagnostics.size(); ++k) {
      CHECK(tp.diagnostics[k].l2_dist == doctest::Approx(tu.diagnostics[k].l2_dist).epsilon(1e-9));
      CHECK(tp.diagnostics[k].phi_k == doctest::Approx(tu.diagnostics[k].phi_k).epsilon(1e-12));
    }
  }
}

TEST_CASE("perturbed initial data") {
  const Problem p = make(unit_square(12), GradientQuadraticDrift{{0.5, 0.5}, 1.0});
  const ScalarField a = perturbed_initial(p.u_inf, 1);
  const ScalarField b = perturbed_initial(p.u_inf, 1);
  const ScalarField c = perturbed_initial(p.u_inf, 2);
  CHECK(max_abs_diff(a.values(), b.values()) == 0.0);
  CHECK(max_abs_diff(a.values(), c.values()) > 0.0);
  CHECK(mass(a) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(a.min() > 0.0);
  const ScalarField r = ratio(a, p.u_inf);
  CHECK(r.min() >= 0.8 / 1.2 - 1e-12);
  CHECK(r.max() <= 1.2 / 0.8 + 1e-12);
  CHECK_THROWS_AS(perturbed_initial(p.u_inf, 1, 1.5), std::invalid_argument);
}

TEST_CASE("fit_decay on synthetic exponentials") {
  Trajectory t;
  t.reference_norm = 1.0;
  t.reference_min = 1.0;
  t.operator_norm = 10.0;
  t.cells = 100;
  for (int k = 0; k <= 500; ++k) {
    const double time = 0.01 * k;
    Diagnostics d;
    d.l2_dist = 3.0 * std::exp(-2.0 * time);
    d.entropy = 9.0 * std::exp(-4.0 * time);
    t.times.push_back(time);
    t.diagnostics.push_back(d);
  }
  const DecayReport l = fit_decay(t, DecayQuantity::l2_dist, 2.0);
  CHECK(l.alpha_fit == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(l.c_fit == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(l.r_squared >= 0.999999);
  CHECK(l.valid);
  CHECK(l.t_start == doctest::Approx(1.0));
  CHECK(l.t_end == doctest::Approx(5.0));
  CHECK(l.samples == 401);
  const DecayReport e = fit_decay(t, DecayQuantity::entropy, 2.0);
  CHECK(e.alpha_fit == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(e.c_fit == doctest::Approx(9.0).epsilon(1e-10));

  // A plateau at the floor ends the window.
  Trajectory plateau = t;
  for (std::size_t k = 300; k < plateau.diagnostics.size(); ++k) plateau.diagnostics[k].l2_dist = 1e-16;
  const DecayReport q = fit_decay(plateau, DecayQuantity::l2_dist, 2.0);
  CHECK(q.t_end < 3.0);
  CHECK(q.alpha_fit == doctest::Approx(2.0).epsilon(1e-10));

  Trajectory short_run = t;
  short_run.times.resize(40);
  short_run.diagnostics.resize(40);
  CHECK_THROWS_AS(fit_decay(short_run, DecayQuantity::l2_dist, 2.0), std::invalid_argument);

  Trajectory dead = t;
  for (auto& d : dead.diagnostics) d.l2_dist = 0.0;
  CHECK_THROWS_AS(fit_decay(dead, DecayQuantity::l2_dist, 2.0), std::invalid_argument);
}

TEST_CASE("envelope with zero initial data") {
  const Problem p = make(unit_square(8), LinearRotationDrift{{0.5, 0.5}, 0.5});
  const Trajectory t = evolve_phi(p.a_hat, ScalarField(p.grid, 0.0), p.k, steps(1e-2, 0.5));
  const EnvelopeReport r = envelope_check(t, p.k, 10.0);
  CHECK(r.pass);
  CHECK(r.c_tilde == 0.0);
  CHECK(r.checked == t.times.size());
}

TEST_CASE("heat-mode envelope is tight") {
  const Grid g = interval(0.0, 1.0, 64);
  const Problem p = make(g, ZeroDrift{});
  const auto phi0 = ScalarField::sample(g, [](double x, double) { return std::cos(kPi * x); });
  const double lambda = spectral_gap(g, p.k, "K").lambda;

  // Crank-Nicolson damps each step slightly more than exp(-lambda dt).
  const Trajectory cn = evolve_phi(p.a_hat, phi0, p.k, steps(1e-3, 1.0, 0.5));
  const EnvelopeReport r = envelope_check(cn, p.k, lambda);
  CHECK(r.pass);
  CHECK(r.worst_margin >= -1e-8);
  CHECK(r.worst_margin <= 1e-3);

  // Implicit Euler damps less, so the exact mode sits above the envelope.
  const Trajectory ie = evolve_phi(p.a_hat, phi0, p.k, steps(1e-3, 1.0, 1.0));
  CHECK_FALSE(envelope_check(ie, p.k, lambda).pass);
}

TEST_CASE("envelope for a rotational drift") {
  const Problem p = make(unit_square(32), LinearRotationDrift{{0.5, 0.5}, 0.5});
  const double lambda = spectral_gap(p.grid, p.k, "K").lambda;
  const ScalarField u0 = perturbed_initial(p.u_inf, 17);
  ScalarField phi0 = ratio(u0, p.u_inf);
  for (double& v : phi0.values()) v -= 1.0;
  phi0 = remove_weighted_mean(phi0, p.k);
  const Trajectory t = evolve_phi(p.a_hat, phi0, p.k, steps(5e-4, 1.0));
  const EnvelopeReport r = envelope_check(t, p.k, lambda);
  CHECK(r.pass);
  CHECK(r.worst_margin > 0.0);

  // Doubling K leaves the bound unchanged.
  ScalarField k2 = p.k;
  for (double& v : k2.values()) v *= 2.0;
  const Trajectory t2 = evolve_phi(p.a_hat, phi0, k2, steps(5e-4, 1.0));
  const EnvelopeReport r2 = envelope_check(t2, k2, lambda);
  CHECK(r2.c_tilde == doctest::Approx(r.c_tilde).epsilon(1e-12));
  CHECK(r2.worst_margin == doctest::Approx(r.worst_margin).epsilon(1e-9));

  CHECK_THROWS_AS(envelope_check(evolve_phi(p.a_hat, ratio(u0, p.u_inf), p.k, steps(0.1, 0.5)), p.k, lambda),
                  std::invalid_argument);
}
