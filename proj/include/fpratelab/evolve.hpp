#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "fpratelab/fields.hpp"
#include "fpratelab/operators.hpp"

namespace fpl {

struct StepOptions {
  double dt = 1e-3;
  double final_time = 1.0;
  /// 1 is implicit Euler, 0.5 Crank-Nicolson.
  double theta = 1.0;
  /// Store the state every this many steps; 0 disables snapshots.
  int snapshot_stride = 100;
};

/// Per-step diagnostics. The u-diagnostics (mass through l2_dist) are NaN
/// for a phi-trajectory integrated without u_inf.
struct Diagnostics {
  double mass = 0.0;
  double entropy = 0.0;      // sum (u - u_inf)^2 / u_inf vol
  double dissipation = 0.0;  // sum u_inf |grad(u/u_inf)|^2
  double l2_dist = 0.0;      // ||u - u_inf||_L2
  double phi_k = 0.0;        // sum K phi vol
  double phi_sq = 0.0;       // sum phi^2 vol
  double phi_sq_k = 0.0;     // sum K phi^2 vol
};

struct Snapshot {
  std::size_t step = 0;
  double time = 0.0;
  ScalarField state;
};

/// Append-only record of one integration. For the u-flow phi is u / u_inf;
/// for the phi-flow it is the integrated state.
struct Trajectory {
  std::vector<double> times;
  std::vector<Diagnostics> diagnostics;
  std::vector<Snapshot> snapshots;
  ScalarField final_state;
  /// Scales for the roundoff floor of l2_dist and entropy (see fit_decay);
  /// zero for a phi-trajectory integrated without u_inf.
  double reference_norm = 0.0;  // ||u_inf||_L2
  double reference_min = 0.0;   // min u_inf
  double operator_norm = 0.0;   // ||A||_inf
  std::size_t cells = 0;
};

/// Theta-scheme integration of du/dt = A u from u0 (nonnegative, unit mass).
/// phi_k uses K when given, else u_inf (which makes it the mass).
Trajectory evolve(const SparseOperator& generator, const ScalarField& u0,
                  const ScalarField& u_inf, const StepOptions& opts,
                  const std::optional<ScalarField>& dual = std::nullopt);

/// Theta-scheme integration of dphi/dt = A_hat phi. With u_inf the
/// u-diagnostics are those of u = u_inf phi.
Trajectory evolve_phi(const SparseOperator& phi_generator, const ScalarField& phi0,
                      const ScalarField& dual, const StepOptions& opts,
                      const std::optional<ScalarField>& u_inf = std::nullopt);

/// Seeded admissible initial data u_inf (1 + amplitude xi), xi uniform in
/// [-1, 1], renormalized to unit mass.
ScalarField perturbed_initial(const ScalarField& u_inf, std::uint64_t seed,
                              double amplitude = 0.2);

/// phi - (sum K phi / sum K), so that sum K phi vol = 0.
ScalarField remove_weighted_mean(const ScalarField& phi, const ScalarField& dual);

/// Largest step-to-step increase of the entropy (<= 0 when monotone).
double max_entropy_increase(const Trajectory& traj);

/// Largest |mass(t) - mass(0)|.
double max_mass_drift(const Trajectory& traj);

/// Largest |phi_k(t) - phi_k(0)|.
double max_phi_k_drift(const Trajectory& traj);

enum class DecayQuantity { entropy, l2_dist };

struct DecayReport {
  double alpha_fit = 0.0;
  double c_fit = 0.0;
  double r_squared = 0.0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t samples = 0;
  double lambda_predicted = 0.0;
  bool valid = false;  // r_squared >= 0.999
  bool envelope_ok = false;
};

inline constexpr double kMinRSquared = 0.999;
inline constexpr std::size_t kMinFitSamples = 50;

/// Least-squares fit of ln(quantity) against t. The window starts after the
/// first 20% of the run and grows while r^2 stays >= 0.999 and the quantity
/// stays above 100x its noise floor. The l2 floor is
/// eps ||u_inf|| max(sqrt(cells), ||A|| / lambda_predicted): generator
/// roundoff amplified by the inverse gap bounds how well the integrated
/// state can approach u_inf. The entropy floor is its square over min u_inf.
/// alpha_fit is -slope for l2_dist and -slope/2 for the (quadratic) entropy. envelope_ok is left false for the
/// caller to fill from envelope_check.
///
/// Throws std::invalid_argument when fewer than 50 usable samples remain.
DecayReport fit_decay(const Trajectory& traj, DecayQuantity quantity, double lambda_predicted);

struct EnvelopeReport {
  bool pass = false;
  double c_tilde = 0.0;      // (1 / min K) sum |phi0|^2 K vol
  double worst_margin = 0.0;  // min over t of 1 - lhs/rhs (0 when both vanish)
  double worst_time = 0.0;
  std::size_t checked = 0;
};

/// sum |phi(t)|^2 vol <= c_tilde exp(-2 lambda t) (1 + 1e-8) at every
/// recorded time of a phi-trajectory integrated with this K. Throws
/// std::invalid_argument unless phi0 satisfies sum K phi0 vol = 0.
EnvelopeReport envelope_check(const Trajectory& traj, const ScalarField& dual, double lambda);

}  // namespace fpl
