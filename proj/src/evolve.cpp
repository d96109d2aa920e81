#include "fpratelab/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include "fpratelab/error.hpp"

namespace fpl {
namespace {

using Matrix = SparseOperator::Matrix;

void check_step_options(const StepOptions& o) {
  if (!(o.dt > 0.0) || !std::isfinite(o.dt)) throw std::invalid_argument("dt must be > 0");
  if (!(o.final_time > 0.0) || !std::isfinite(o.final_time)) {
    throw std::invalid_argument("final time T must be > 0");
  }
  if (!(o.theta >= 0.5 && o.theta <= 1.0)) {
    throw std::invalid_argument("theta must lie in [0.5, 1]");
  }
  if (o.snapshot_stride < 0) throw std::invalid_argument("snapshot_stride must be >= 0");
}

std::size_t step_count(const StepOptions& o) {
  return static_cast<std::size_t>(std::ceil(o.final_time / o.dt - 1e-9));
}

/// Shared theta-scheme driver; `record` fills the diagnostics of a state.
template <typename Record>
Trajectory integrate(const SparseOperator& op, ScalarField state, const StepOptions& opts,
                     Record&& record) {
  check_step_options(opts);
  const Matrix& a = op.matrix();
  Matrix eye(a.rows(), a.cols());
  eye.setIdentity();
  const Matrix implicit_part = eye - opts.theta * opts.dt * a;
  const Matrix explicit_part = eye + (1.0 - opts.theta) * opts.dt * a;
  const LinearSolver solver(implicit_part);
  const bool pure_implicit = opts.theta == 1.0;

  const std::size_t steps = step_count(opts);
  Trajectory traj;
  traj.times.reserve(steps + 1);
  traj.diagnostics.reserve(steps + 1);
  auto push = [&](std::size_t n, const ScalarField& s) {
    traj.times.push_back(static_cast<double>(n) * opts.dt);
    traj.diagnostics.push_back(record(s));
    if (opts.snapshot_stride > 0 && n % static_cast<std::size_t>(opts.snapshot_stride) == 0) {
      traj.snapshots.push_back({n, traj.times.back(), s});
    }
  };
  push(0, state);

  std::vector<double> rhs(state.size());
  for (std::size_t n = 1; n <= steps; ++n) {
    if (pure_implicit) {
      std::copy(state.values().begin(), state.values().end(), rhs.begin());
    } else {
      Eigen::Map<const Eigen::VectorXd> s(state.values().data(),
                                         static_cast<Eigen::Index>(state.size()));
      Eigen::Map<Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size())) =
          explicit_part * s;
    }
    auto next = solver.solve(rhs);
    state = ScalarField(state.grid(), std::move(next));
    push(n, state);
  }
  traj.final_state = std::move(state);
  return traj;
}

void fill_u_diagnostics(Diagnostics& d, const ScalarField& u, const ScalarField& u_inf) {
  const double vol = u.grid().cell_volume();
  double m = 0.0;
  double ent = 0.0;
  double l2 = 0.0;
  for (std::size_t c = 0; c < u.size(); ++c) {
    const double diff = u[c] - u_inf[c];
    m += u[c];
    ent += diff * diff / u_inf[c];
    l2 += diff * diff;
  }
  d.mass = m * vol;
  d.entropy = ent * vol;
  d.l2_dist = std::sqrt(l2 * vol);
  d.dissipation = dissipation(u, u_inf);
}

void fill_phi_diagnostics(Diagnostics& d, const ScalarField& phi, const ScalarField& k) {
  const double vol = phi.grid().cell_volume();
  double pk = 0.0;
  double sq = 0.0;
  double sqk = 0.0;
  for (std::size_t c = 0; c < phi.size(); ++c) {
    pk += k[c] * phi[c];
    sq += phi[c] * phi[c];
    sqk += k[c] * phi[c] * phi[c];
  }
  d.phi_k = pk * vol;
  d.phi_sq = sq * vol;
  d.phi_sq_k = sqk * vol;
}

void set_reference_scales(Trajectory& traj, const SparseOperator& op, const ScalarField& u_inf) {
  traj.reference_norm = std::sqrt(weighted_norm_sq(u_inf, ScalarField(u_inf.grid(), 1.0)));
  traj.reference_min = u_inf.min();
  traj.operator_norm = op.norm_inf();
  traj.cells = u_inf.size();
}

}  // namespace

Trajectory evolve(const SparseOperator& generator, const ScalarField& u0,
                  const ScalarField& u_inf, const StepOptions& opts,
                  const std::optional<ScalarField>& dual) {
  require_same_grid(u0, u_inf);
  require_positive(u_inf, "u_inf");
  if (!(generator.grid() == u0.grid())) throw std::invalid_argument("u0 and generator grids differ");
  if (u0.min() < 0.0) throw std::invalid_argument("initial data must be nonnegative");
  if (std::abs(mass(u0) - 1.0) > 1e-8) throw std::invalid_argument("initial data must have unit mass");
  const ScalarField& k = dual ? *dual : u_inf;
  require_same_grid(k, u0);

  Trajectory traj = integrate(generator, u0, opts, [&](const ScalarField& u) {
    Diagnostics d;
    fill_u_diagnostics(d, u, u_inf);
    if (!(d.mass > 0.0)) throw SolverError("negative_mass", "mass became nonpositive");
    fill_phi_diagnostics(d, ratio(u, u_inf), k);
    return d;
  });
  set_reference_scales(traj, generator, u_inf);
  return traj;
}

Trajectory evolve_phi(const SparseOperator& phi_generator, const ScalarField& phi0,
                      const ScalarField& dual, const StepOptions& opts,
                      const std::optional<ScalarField>& u_inf) {
  require_same_grid(phi0, dual);
  require_positive(dual, "K");
  if (!(phi_generator.grid() == phi0.grid())) {
    throw std::invalid_argument("phi0 and operator grids differ");
  }
  if (u_inf) {
    require_same_grid(*u_inf, phi0);
    require_positive(*u_inf, "u_inf");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  Trajectory traj = integrate(phi_generator, phi0, opts, [&](const ScalarField& phi) {
    Diagnostics d;
    d.mass = d.entropy = d.dissipation = d.l2_dist = nan;
    if (u_inf) {
      ScalarField u(phi.grid());
      for (std::size_t c = 0; c < u.size(); ++c) u[c] = (*u_inf)[c] * phi[c];
      fill_u_diagnostics(d, u, *u_inf);
    }
    fill_phi_diagnostics(d, phi, dual);
    return d;
  });
  if (u_inf) set_reference_scales(traj, phi_generator, *u_inf);
  return traj;
}

ScalarField perturbed_initial(const ScalarField& u_inf, std::uint64_t seed, double amplitude) {
  require_positive(u_inf, "u_inf");
  if (!(amplitude >= 0.0 && amplitude < 1.0)) {
    throw std::invalid_argument("perturbation amplitude must lie in [0, 1)");
  }
  std::mt19937_64 gen(seed);
  ScalarField u(u_inf.grid());
  for (std::size_t c = 0; c < u.size(); ++c) {
    const double xi = 2.0 * (static_cast<double>(gen() >> 11) * 0x1.0p-53) - 1.0;
    u[c] = u_inf[c] * (1.0 + amplitude * xi);
  }
  return normalized(u);
}

ScalarField remove_weighted_mean(const ScalarField& phi, const ScalarField& dual) {
  require_same_grid(phi, dual);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t c = 0; c < phi.size(); ++c) {
    num += dual[c] * phi[c];
    den += dual[c];
  }
  ScalarField out = phi;
  const double shift = num / den;
  for (double& v : out.values()) v -= shift;
  return out;
}

double max_entropy_increase(const Trajectory& traj) {
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t n = 1; n < traj.diagnostics.size(); ++n) {
    worst = std::max(worst, traj.diagnostics[n].entropy - traj.diagnostics[n - 1].entropy);
  }
  return worst;
}

double max_mass_drift(const Trajectory& traj) {
  double worst = 0.0;
  for (const auto& d : traj.diagnostics) {
    worst = std::max(worst, std::abs(d.mass - traj.diagnostics.front().mass));
  }
  return worst;
}

double max_phi_k_drift(const Trajectory& traj) {
  double worst = 0.0;
  for (const auto& d : traj.diagnostics) {
    worst = std::max(worst, std::abs(d.phi_k - traj.diagnostics.front().phi_k));
  }
  return worst;
}

DecayReport fit_decay(const Trajectory& traj, DecayQuantity quantity, double lambda_predicted) {
  const std::size_t n = traj.times.size();
  if (n < kMinFitSamples) throw std::invalid_argument("trajectory too short for a decay fit");
  auto value = [&](std::size_t k) {
    return quantity == DecayQuantity::entropy ? traj.diagnostics[k].entropy
                                              : traj.diagnostics[k].l2_dist;
  };
  const double eps = std::numeric_limits<double>::epsilon();
  double amplification = std::sqrt(static_cast<double>(traj.cells));
  if (lambda_predicted > 0.0) amplification = std::max(amplification, traj.operator_norm / lambda_predicted);
  const double floor_l2 = eps * traj.reference_norm * amplification;
  const double floor =
      100.0 * (quantity == DecayQuantity::entropy
                   ? (traj.reference_min > 0.0 ? floor_l2 * floor_l2 / traj.reference_min : 0.0)
                   : floor_l2);
  auto usable = [&](std::size_t k) {
    const double q = value(k);
    return std::isfinite(q) && q > floor && q > 0.0;
  };

  const double t0 = traj.times.front();
  const double cut = t0 + 0.2 * (traj.times.back() - t0);
  std::size_t start = 0;
  while (start < n && traj.times[start] < cut) ++start;
  if (start >= n || !usable(start)) {
    throw std::invalid_argument("decay quantity underflowed before the fit window");
  }
  if (start + kMinFitSamples > n) throw std::invalid_argument("fit window too short");
  for (std::size_t k = start; k < start + kMinFitSamples; ++k) {
    if (!usable(k)) throw std::invalid_argument("fewer than 50 usable samples in the fit window");
  }

  // Running sums of (t - t_start, ln q).
  const double ts = traj.times[start];
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0, syy = 0.0;
  double m = 0.0;
  auto add = [&](std::size_t k) {
    const double x = traj.times[k] - ts;
    const double y = std::log(value(k));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    syy += y * y;
    m += 1.0;
  };
  struct Fit {
    double slope, intercept, r2;
  };
  auto fit = [](double m, double sx, double sy, double sxx, double sxy, double syy) {
    const double vx = m * sxx - sx * sx;
    const double vy = m * syy - sy * sy;
    const double cxy = m * sxy - sx * sy;
    Fit f{};
    f.slope = cxy / vx;
    f.intercept = (sy - f.slope * sx) / m;
    f.r2 = vy > 0.0 ? std::clamp(cxy * cxy / (vx * vy), 0.0, 1.0) : 0.0;
    return f;
  };

  std::size_t end = start;
  for (; end < start + kMinFitSamples; ++end) add(end);
  Fit best = fit(m, sx, sy, sxx, sxy, syy);
  if (best.r2 >= kMinRSquared) {
    while (end < n && usable(end)) {
      const double x = traj.times[end] - ts;
      const double y = std::log(value(end));
      const Fit trial = fit(m + 1.0, sx + x, sy + y, sxx + x * x, sxy + x * y, syy + y * y);
      if (trial.r2 < kMinRSquared) break;
      add(end);
      best = trial;
      ++end;
    }
  }

  DecayReport r;
  const double factor = quantity == DecayQuantity::entropy ? 0.5 : 1.0;
  r.alpha_fit = -best.slope * factor;
  r.c_fit = std::exp(best.intercept - best.slope * ts);
  r.r_squared = best.r2;
  r.t_start = ts;
  r.t_end = traj.times[end - 1];
  r.samples = end - start;
  r.lambda_predicted = lambda_predicted;
  r.valid = r.r_squared >= kMinRSquared;
  return r;
}

EnvelopeReport envelope_check(const Trajectory& traj, const ScalarField& dual, double lambda) {
  require_positive(dual, "K");
  if (traj.diagnostics.empty()) throw std::invalid_argument("empty trajectory");
  const Diagnostics& first = traj.diagnostics.front();
  const double scale = std::sqrt(first.phi_sq_k * mass(dual));
  if (std::abs(first.phi_k) > 1e-10 * std::max(scale, 1e-300) && first.phi_sq_k > 0.0) {
    throw std::invalid_argument("envelope_check needs initial data with sum K phi0 vol = 0");
  }
  EnvelopeReport r;
  r.c_tilde = first.phi_sq_k / dual.min();
  r.worst_margin = std::numeric_limits<double>::infinity();
  r.pass = true;
  for (std::size_t k = 0; k < traj.diagnostics.size(); ++k) {
    const double t = traj.times[k];
    const double rhs = r.c_tilde * std::exp(-2.0 * lambda * t);
    const double lhs = traj.diagnostics[k].phi_sq;
    const double margin = rhs > 0.0 ? 1.0 - lhs / rhs : (lhs > 0.0 ? -1.0 : 0.0);
    if (margin < r.worst_margin) {
      r.worst_margin = margin;
      r.worst_time = t;
    }
    if (lhs > rhs * (1.0 + 1e-8)) r.pass = false;
    ++r.checked;
  }
  return r;
}

}  // namespace fpl
