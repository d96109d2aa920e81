#include "fpratelab/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <string>

#include "fpratelab/error.hpp"
#include "fpratelab/evolve.hpp"
#include "fpratelab/report_io.hpp"
#include "fpratelab/spectral.hpp"
#include "fpratelab/stationary.hpp"

namespace fpl::cli {
namespace {

using nlohmann::json;

/// Lazily computed pieces of one experiment.
class Experiment {
 public:
  explicit Experiment(const ExperimentConfig& cfg) : cfg_(cfg), grid_(cfg.grid()) {}

  const ExperimentConfig& config() const { return cfg_; }
  const Grid& grid() const { return grid_; }

  const FaceField& drift() {
    if (!drift_) drift_ = sample_drift(cfg_.drift, grid_);
    return *drift_;
  }
  const SparseOperator& generator() {
    if (!generator_) generator_ = assemble_fp(grid_, drift(), cfg_.diffusion);
    return *generator_;
  }
  const ScalarField& steady() {
    if (!steady_) steady_ = steady_state(generator(), cfg_.solver);
    return *steady_;
  }
  const ScalarField& dual(DualMethod method) {
    auto& slot = method == DualMethod::adjoint ? dual_adjoint_ : dual_direct_;
    if (!slot) {
      slot = dual_state(grid_, generator(), steady(), drift(), cfg_.diffusion, method, cfg_.solver);
    }
    return *slot;
  }
  double lambda_unweighted() {
    if (!lambda_one_) {
      lambda_one_ = spectral_gap(grid_, ScalarField(grid_, 1.0), "1", cfg_.solver, 0.0).lambda;
    }
    return *lambda_one_;
  }

 private:
  const ExperimentConfig& cfg_;
  Grid grid_;
  std::optional<FaceField> drift_;
  std::optional<SparseOperator> generator_;
  std::optional<ScalarField> steady_;
  std::optional<ScalarField> dual_adjoint_;
  std::optional<ScalarField> dual_direct_;
  std::optional<double> lambda_one_;
};

class Outputs {
 public:
  Outputs(const ExperimentConfig& cfg, const RunOptions& opts)
      : dir_(opts.out_dir ? *opts.out_dir : std::filesystem::path(cfg.outputs.directory)),
        csv_(cfg.outputs.wants("csv")),
        json_(cfg.outputs.wants("json")) {}

  bool csv() const { return csv_; }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) const {
    std::filesystem::create_directories(dir_);
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (dir_ / name).string());
    body(f);
  }
  void field(const std::string& name, const ScalarField& f) const {
    if (csv_) write(name, [&](std::ostream& o) { write_field_csv(o, f); });
  }
  void report(const std::string& name, const json& j) const {
    if (json_) write(name, [&](std::ostream& o) { write_json(o, j); });
  }

 private:
  std::filesystem::path dir_;
  bool csv_;
  bool json_;
};

json header(Command command, const ExperimentConfig& cfg, const RunOptions& opts) {
  return {
      {"command", command_name(command)},
      {"config_hash", config_hash(cfg)},
      {"paper_mode", opts.paper_mode},
      {"drift", drift_name(cfg.drift)},
      {"cells", cfg.cells},
      {"diffusion", cfg.diffusion},
      {"tolerances",
       {{"solver_tol", cfg.solver.tol},
        {"solver_max_iter", cfg.solver.max_iter},
        {"shift", cfg.solver.shift},
        {"rate_tolerance", kRateTolerance},
        {"min_r_squared", kMinRSquared},
        {"envelope_slack", 1e-8},
        {"ratio_bound_slack", 1e-10}}},
  };
}

json bounds_json(const ScalarField& f) {
  const PositivityBounds b = positivity_bounds(f);
  return {{"min", b.min}, {"max", b.max}, {"max_over_min", b.ratio}, {"mass", mass(f)}};
}

double max_relative_difference(const ScalarField& a, const ScalarField& b) {
  double worst = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) worst = std::max(worst, std::abs(a[c] - b[c]));
  return worst / std::max(a.max(), b.max());
}

double l2_difference(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) s += (a[c] - b[c]) * (a[c] - b[c]);
  return std::sqrt(s * a.grid().cell_volume());
}

int run_validate(Experiment& ex, const RunOptions& opts, json& doc) {
  const InwardReport inward = check_inward(ex.drift());
  const SparseOperator& a = ex.generator();
  const double scale = a.norm_inf();
  double colsum = 0.0;
  for (double s : a.column_sums()) colsum = std::max(colsum, std::abs(s));
  double min_off = std::numeric_limits<double>::infinity();
  double max_diag = -std::numeric_limits<double>::infinity();
  for (const auto& e : a.entries()) {
    if (e.row == e.col) max_diag = std::max(max_diag, e.value);
    else min_off = std::min(min_off, e.value);
  }
  const bool generator_ok = colsum <= 1e-12 * scale && min_off >= 0.0 && max_diag <= 0.0;
  double circ = 0.0;
  for (double c : circulation(ex.drift())) circ = std::max(circ, std::abs(c));

  doc["inward"] = to_json(inward, ex.grid());
  doc["generator"] = {{"max_abs_column_sum", colsum},
                      {"norm_inf", scale},
                      {"min_off_diagonal", min_off},
                      {"max_diagonal", max_diag},
                      {"pass", generator_ok}};
  doc["max_abs_circulation"] = circ;
  const bool pass = generator_ok && (inward.pass || !opts.paper_mode);
  doc["pass"] = pass;
  return pass ? kExitOk : kExitRejected;
}

int run_steady(Experiment& ex, const Outputs& out, json& doc) {
  const ScalarField& u = ex.steady();
  doc["residual"] = relative_residual(ex.generator(), u.values());
  doc["steady_state"] = bounds_json(u);
  out.field("steady.csv", u);
  return kExitOk;
}

int run_dual(Experiment& ex, const Outputs& out, json& doc) {
  const ScalarField& u = ex.steady();
  const ScalarField& ka = ex.dual(DualMethod::adjoint);
  const ScalarField& kd = ex.dual(DualMethod::direct);
  const SparseOperator adj = assemble_phi(ex.generator(), u).transposed();
  json adjoint = bounds_json(ka);
  adjoint["residual"] = relative_residual(adj, ka.values());
  adjoint["max_relative_difference_to_u_inf"] = max_relative_difference(ka, u);
  json direct = bounds_json(kd);
  direct["l2_difference_to_u_inf"] = l2_difference(kd, u);
  direct["max_relative_difference_to_u_inf"] = max_relative_difference(kd, u);
  doc["steady_residual"] = relative_residual(ex.generator(), u.values());
  doc["adjoint"] = adjoint;
  doc["direct"] = direct;
  out.field("steady.csv", u);
  out.field("dual_adjoint.csv", ka);
  out.field("dual_direct.csv", kd);
  return kExitOk;
}

int run_gap(Experiment& ex, const Outputs& out, json& doc) {
  const double lambda_one = ex.lambda_unweighted();
  const ScalarField one(ex.grid(), 1.0);
  const std::pair<std::string, const ScalarField*> weights[] = {
      {"1", &one}, {"u_inf", &ex.steady()}, {"K", &ex.dual(DualMethod::adjoint)}};
  json reports = json::array();
  bool pass = true;
  for (const auto& [id, h] : weights) {
    const SpectralReport r = spectral_gap(ex.grid(), *h, id, ex.config().solver, lambda_one);
    const RatioBoundReport rb = ratio_bound_check(*h, r.lambda, lambda_one);
    json j = to_json(r);
    j["ratio_check"] = {{"pass", rb.pass}, {"bound", rb.bound}, {"margin", rb.margin}};
    pass = pass && rb.pass;
    reports.push_back(j);
    out.field("gap_eigenfunction_" + id + ".csv", r.eigenfunction);
  }
  doc["reports"] = reports;
  doc["pass"] = pass;
  return pass ? kExitOk : kExitRejected;
}

int run_evolve(Experiment& ex, const Outputs& out, json& doc) {
  const ExperimentConfig& cfg = ex.config();
  const ScalarField& u_inf = ex.steady();
  const ScalarField u0 = perturbed_initial(u_inf, cfg.evolve.seed);
  const Trajectory traj =
      evolve(ex.generator(), u0, u_inf, cfg.step_options(), ex.dual(DualMethod::adjoint));
  const Diagnostics& last = traj.diagnostics.back();
  doc["steps"] = traj.times.size() - 1;
  doc["final_time"] = traj.times.back();
  doc["seed"] = cfg.evolve.seed;
  doc["max_mass_drift"] = max_mass_drift(traj);
  doc["max_entropy_increase"] = max_entropy_increase(traj);
  doc["max_phiK_drift"] = max_phi_k_drift(traj);
  doc["final"] = {{"entropy", last.entropy},
                  {"dissipation", last.dissipation},
                  {"l2_dist", last.l2_dist},
                  {"mass", last.mass}};
  if (out.csv()) {
    out.write("trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(o, traj); });
    for (const Snapshot& s : traj.snapshots) {
      out.field("snapshot_" + std::to_string(s.step) + ".csv", s.state);
    }
  }
  return kExitOk;
}

int run_report(Experiment& ex, const Outputs& out, json& doc) {
  const ExperimentConfig& cfg = ex.config();
  const ScalarField& u_inf = ex.steady();
  const ScalarField& k = ex.dual(DualMethod::adjoint);
  const double lambda_one = ex.lambda_unweighted();
  const SpectralReport gap_u = spectral_gap(ex.grid(), u_inf, "u_inf", cfg.solver, lambda_one);
  const SpectralReport gap_k = spectral_gap(ex.grid(), k, "K", cfg.solver, lambda_one);

  const ScalarField u0 = perturbed_initial(u_inf, cfg.evolve.seed);
  StepOptions steps = cfg.step_options();
  steps.snapshot_stride = 0;
  const Trajectory traj = evolve(ex.generator(), u0, u_inf, steps, k);
  DecayReport decay = fit_decay(traj, DecayQuantity::l2_dist, gap_u.lambda);

  ScalarField phi0 = ratio(u0, u_inf);
  for (double& v : phi0.values()) v -= 1.0;
  phi0 = remove_weighted_mean(phi0, k);
  const Trajectory phi_traj = evolve_phi(assemble_phi(ex.generator(), u_inf), phi0, k, steps);
  const EnvelopeReport env = envelope_check(phi_traj, k, gap_k.lambda);
  decay.envelope_ok = env.pass;

  const bool rate_ok = decay.alpha_fit >= gap_u.lambda * (1.0 - kRateTolerance);
  const bool pass = rate_ok && decay.envelope_ok;
  doc["seed"] = cfg.evolve.seed;
  doc["gap"] = {to_json(gap_u), to_json(gap_k)};
  doc["decay"] = to_json(decay);
  doc["envelope"] = to_json(env);
  doc["max_mass_drift"] = max_mass_drift(traj);
  doc["max_entropy_increase"] = max_entropy_increase(traj);
  doc["max_phiK_drift"] = max_phi_k_drift(phi_traj);
  doc["rate_ok"] = rate_ok;
  doc["pass"] = pass;
  if (out.csv()) {
    out.write("trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(o, traj); });
  }
  return pass ? kExitOk : kExitRejected;
}

void emit_error(std::ostream& err, const std::string& kind, const std::string& message) {
  write_json(err, json{{"error", kind}, {"message", message}});
}

}  // namespace

std::optional<Command> parse_command(std::string_view name) {
  for (Command c : {Command::validate, Command::steady, Command::dual, Command::gap,
                    Command::evolve, Command::report}) {
    if (name == command_name(c)) return c;
  }
  return std::nullopt;
}

const char* command_name(Command command) {
  switch (command) {
    case Command::validate: return "validate";
    case Command::steady: return "steady";
    case Command::dual: return "dual";
    case Command::gap: return "gap";
    case Command::evolve: return "evolve";
    case Command::report: return "report";
  }
  return "unknown";
}

int run(Command command, const ExperimentConfig& config, const RunOptions& options,
        std::ostream& out, std::ostream& err) {
  try {
    Experiment ex(config);
    const Outputs outputs(config, options);
    json doc = header(command, config, options);

    if (options.paper_mode && command != Command::validate) {
      const InwardReport inward = check_inward(ex.drift());
      if (!inward.pass) {
        emit_error(err, "inward_condition",
                   "drift violates F.n < 0 on the boundary (max F.n = " +
                       format_number(inward.max_normal) + ")");
        return kExitRejected;
      }
    }

    int code = kExitOk;
    switch (command) {
      case Command::validate: code = run_validate(ex, options, doc); break;
      case Command::steady: code = run_steady(ex, outputs, doc); break;
      case Command::dual: code = run_dual(ex, outputs, doc); break;
      case Command::gap: code = run_gap(ex, outputs, doc); break;
      case Command::evolve: code = run_evolve(ex, outputs, doc); break;
      case Command::report: code = run_report(ex, outputs, doc); break;
    }
    outputs.report(std::string(command_name(command)) + ".json", doc);
    write_json(out, doc);
    return code;
  } catch (const SolverError& e) {
    emit_error(err, e.kind(), e.what());
  } catch (const std::invalid_argument& e) {
    emit_error(err, "invalid_argument", e.what());
  } catch (const std::exception& e) {
    emit_error(err, "internal", e.what());
  }
  return kExitInternal;
}

}  // namespace fpl::cli
