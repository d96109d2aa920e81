#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fpratelab/commands.hpp"
#include "fpratelab/config.hpp"
#include "fpratelab/drift.hpp"
#include "fpratelab/error.hpp"
#include "fpratelab/evolve.hpp"
#include "fpratelab/fields.hpp"
#include "fpratelab/grid.hpp"
#include "fpratelab/operators.hpp"
#include "fpratelab/spectral.hpp"
#include "fpratelab/stationary.hpp"

namespace py = pybind11;
using namespace fpl;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

py::array_t<double> to_numpy(std::span<const double> v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

ScalarField field(const Grid& g, const Array& a) {
  if (a.ndim() != 1) throw std::invalid_argument("fields are 1-D arrays in cell order");
  return ScalarField(g, std::vector<double>(a.data(), a.data() + a.size()));
}

std::optional<ScalarField> optional_field(const Grid& g, const std::optional<Array>& a) {
  if (!a) return std::nullopt;
  return field(g, *a);
}

SolverOptions solver(double tol, int max_iter, double shift) {
  SolverOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  o.shift = shift;
  return o;
}

StepOptions steps(double dt, double t, double theta, int stride) {
  StepOptions o;
  o.dt = dt;
  o.final_time = t;
  o.theta = theta;
  o.snapshot_stride = stride;
  return o;
}

DualMethod dual_method(const std::string& name) {
  if (name == "adjoint") return DualMethod::adjoint;
  if (name == "direct") return DualMethod::direct;
  throw std::invalid_argument("dual method must be 'adjoint' or 'direct'");
}

DecayQuantity decay_quantity(const std::string& name) {
  if (name == "l2_dist") return DecayQuantity::l2_dist;
  if (name == "entropy") return DecayQuantity::entropy;
  throw std::invalid_argument("quantity must be 'l2_dist' or 'entropy'");
}

py::dict diagnostics(const Trajectory& t) {
  const std::size_t n = t.diagnostics.size();
  std::vector<double> cols[7];
  for (auto& c : cols) c.reserve(n);
  for (const Diagnostics& d : t.diagnostics) {
    cols[0].push_back(d.mass);
    cols[1].push_back(d.entropy);
    cols[2].push_back(d.dissipation);
    cols[3].push_back(d.l2_dist);
    cols[4].push_back(d.phi_k);
    cols[5].push_back(d.phi_sq);
    cols[6].push_back(d.phi_sq_k);
  }
  py::dict out;
  const char* names[] = {"mass", "entropy", "dissipation", "l2_dist", "phiK", "phi_sq", "phi_sq_k"};
  for (int k = 0; k < 7; ++k) out[names[k]] = to_numpy(cols[k]);
  return out;
}

constexpr double kTol = 1e-10;
constexpr int kMaxIter = 500;
constexpr double kShift = 1e-8;

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Finite-volume Fokker-Planck operators, steady states, spectral gaps and decay diagnostics.";

  // Leaked on purpose: translators may run during interpreter shutdown.
  static PyObject* solver_error =
      PyErr_NewException("fpratelab._core.SolverError", PyExc_RuntimeError, nullptr);
  m.attr("SolverError") = py::handle(solver_error);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const SolverError& e) {
      py::object instance = py::reinterpret_borrow<py::object>(solver_error)(std::string(e.what()));
      instance.attr("kind") = e.kind();
      PyErr_SetObject(solver_error, instance.ptr());
    } catch (const ConfigError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  py::class_<Grid>(m, "Grid")
      .def(py::init([](const std::vector<double>& lower, const std::vector<double>& upper,
                       const std::vector<int>& cells) { return Grid::build(lower, upper, cells); }),
           py::arg("lower"), py::arg("upper"), py::arg("cells"))
      .def_property_readonly("dim", &Grid::dim)
      .def_property_readonly("cells",
                             [](const Grid& g) {
                               std::vector<int> c;
                               for (int a = 0; a < g.dim(); ++a) c.push_back(g.cells(a));
                               return c;
                             })
      .def_property_readonly("spacing",
                             [](const Grid& g) {
                               std::vector<double> h;
                               for (int a = 0; a < g.dim(); ++a) h.push_back(g.spacing(a));
                               return h;
                             })
      .def_property_readonly("cell_count", &Grid::cell_count)
      .def_property_readonly("cell_volume", &Grid::cell_volume)
      .def_property_readonly("domain_volume", &Grid::domain_volume)
      .def_property_readonly("face_count", &Grid::face_count)
      .def_property_readonly("interior_face_count", &Grid::interior_face_count)
      .def_property_readonly("boundary_face_count", &Grid::boundary_face_count)
      .def("cell_centers",
           [](const Grid& g) {
             py::array_t<double> out({static_cast<py::ssize_t>(g.cell_count()), static_cast<py::ssize_t>(g.dim())});
             auto v = out.mutable_unchecked<2>();
             for (std::size_t c = 0; c < g.cell_count(); ++c) {
               const auto x = g.cell_center(c);
               for (int a = 0; a < g.dim(); ++a) v(static_cast<py::ssize_t>(c), a) = x[a];
             }
             return out;
           })
      .def("__eq__", [](const Grid& a, const Grid& b) { return a == b; });

  py::class_<NeuralDrift>(m, "NeuralDrift")
      .def(py::init([](std::array<double, 2> lambda, std::array<std::array<double, 2>, 2> weights, double slope) {
             return NeuralDrift{lambda, weights, slope};
           }),
           py::arg("lambda_"), py::arg("weights"), py::arg("sigmoid_slope"))
      .def_readwrite("lambda_", &NeuralDrift::lambda)
      .def_readwrite("weights", &NeuralDrift::weights)
      .def_readwrite("sigmoid_slope", &NeuralDrift::sigmoid_slope);
  py::class_<GradientQuadraticDrift>(m, "GradientQuadraticDrift")
      .def(py::init([](std::array<double, 2> center, double strength) {
             return GradientQuadraticDrift{center, strength};
           }),
           py::arg("center"), py::arg("strength"))
      .def_readwrite("center", &GradientQuadraticDrift::center)
      .def_readwrite("strength", &GradientQuadraticDrift::strength);
  py::class_<LinearRotationDrift>(m, "LinearRotationDrift")
      .def(py::init([](std::array<double, 2> center, double omega) { return LinearRotationDrift{center, omega}; }),
           py::arg("center"), py::arg("omega"))
      .def_readwrite("center", &LinearRotationDrift::center)
      .def_readwrite("omega", &LinearRotationDrift::omega);
  py::class_<ZeroDrift>(m, "ZeroDrift").def(py::init<>());

  py::class_<FaceField>(m, "FaceField")
      .def_property_readonly("grid", &FaceField::grid)
      .def_property_readonly("values", [](const FaceField& f) { return to_numpy(f.values()); })
      .def("__len__", &FaceField::size);

  m.def(
      "sample_drift",
      [](const DriftSpec& spec, const Grid& g) {
        validate_drift(spec, g.dim());
        return sample_drift(spec, g);
      },
      py::arg("drift"), py::arg("grid"), "Face-normal drift samples (interior +e_axis, boundary outward).");
  m.def(
      "check_inward",
      [](const FaceField& f) {
        const InwardReport r = check_inward(f);
        py::dict d;
        d["pass"] = r.pass;
        d["min_normal"] = r.min_normal;
        d["max_normal"] = r.max_normal;
        d["worst_face"] = r.worst_face == kNoCell ? py::object(py::none()) : py::int_(r.worst_face);
        return d;
      },
      py::arg("drift"));

  py::class_<SparseOperator>(m, "Operator")
      .def_property_readonly("grid", &SparseOperator::grid)
      .def_property_readonly("size", &SparseOperator::size)
      .def_property_readonly("role", [](const SparseOperator& op) { return role_name(op.role()); })
      .def("norm_inf", &SparseOperator::norm_inf)
      .def("apply", [](const SparseOperator& op, const Array& x) { return to_numpy(op.apply(field(op.grid(), x).values())); })
      .def("column_sums", [](const SparseOperator& op) { return to_numpy(op.column_sums()); })
      .def("row_sums", [](const SparseOperator& op) { return to_numpy(op.row_sums()); })
      .def("transposed", &SparseOperator::transposed)
      .def("to_dense", [](const SparseOperator& op) {
        const auto n = static_cast<py::ssize_t>(op.size());
        py::array_t<double> out({n, n});
        std::fill(out.mutable_data(), out.mutable_data() + n * n, 0.0);
        auto v = out.mutable_unchecked<2>();
        for (const auto& e : op.entries()) v(static_cast<py::ssize_t>(e.row), static_cast<py::ssize_t>(e.col)) += e.value;
        return out;
      });

  m.def("assemble_fp", &assemble_fp, py::arg("grid"), py::arg("drift"), py::arg("diffusion") = 1.0,
        "Scharfetter-Gummel generator A of du/dt = A u with no-flux boundaries.");
  m.def(
      "assemble_phi",
      [](const SparseOperator& a, const Array& u_inf) { return assemble_phi(a, field(a.grid(), u_inf)); },
      py::arg("generator"), py::arg("u_inf"));
  m.def(
      "assemble_stiffness",
      [](const Grid& g, const Array& h) {
        StiffnessPencil p = assemble_stiffness(g, field(g, h));
        return py::make_tuple(p.stiffness, p.mass);
      },
      py::arg("grid"), py::arg("weight"), "Weighted Neumann stiffness S_H and mass B_H.");
  m.def(
      "solve_linear",
      [](const SparseOperator& op, const Array& rhs, double tol) {
        return to_numpy(solve_linear(op, field(op.grid(), rhs).values(), tol));
      },
      py::arg("op"), py::arg("rhs"), py::arg("tol") = kTol);
  m.def(
      "null_vector",
      [](const SparseOperator& op, double tol, int max_iter, double shift) {
        return to_numpy(null_vector(op, solver(tol, max_iter, shift)).values());
      },
      py::arg("op"), py::arg("tol") = kTol, py::arg("max_iter") = kMaxIter, py::arg("shift") = kShift);
  m.def(
      "steady_state",
      [](const SparseOperator& a, double tol, int max_iter, double shift) {
        return to_numpy(steady_state(a, solver(tol, max_iter, shift)).values());
      },
      py::arg("generator"), py::arg("tol") = kTol, py::arg("max_iter") = kMaxIter, py::arg("shift") = kShift);
  m.def(
      "dual_state",
      [](const SparseOperator& a, const Array& u_inf, const FaceField& drift, double diffusion,
         const std::string& method) {
        return to_numpy(
            dual_state(a.grid(), a, field(a.grid(), u_inf), drift, diffusion, dual_method(method)).values());
      },
      py::arg("generator"), py::arg("u_inf"), py::arg("drift"), py::arg("diffusion") = 1.0,
      py::arg("method") = "adjoint");

  m.def(
      "smallest_constrained_eigen",
      [](const SparseOperator& s, const SparseOperator& b) {
        const EigenResult r = smallest_constrained_eigen(s, b);
        py::dict d;
        d["lambda"] = r.lambda;
        d["eigenfunction"] = to_numpy(r.eigenfunction.values());
        d["residual"] = r.residual;
        d["next_lambda"] = r.next_lambda;
        d["near_degenerate"] = r.near_degenerate;
        d["iterations"] = r.iterations;
        return d;
      },
      py::arg("stiffness"), py::arg("mass"));

  py::class_<SpectralReport>(m, "SpectralReport")
      .def_readonly("weight_id", &SpectralReport::weight_id)
      .def_readonly("lambda_", &SpectralReport::lambda)
      .def_readonly("poincare_constant", &SpectralReport::poincare_constant)
      .def_property_readonly("eigenfunction", [](const SpectralReport& r) { return to_numpy(r.eigenfunction.values()); })
      .def_readonly("residual", &SpectralReport::residual)
      .def_readonly("ratio_bound", &SpectralReport::ratio_bound)
      .def_readonly("lambda_unweighted", &SpectralReport::lambda_unweighted)
      .def_readonly("next_lambda", &SpectralReport::next_lambda)
      .def_readonly("near_degenerate", &SpectralReport::near_degenerate)
      .def_readonly("iterations", &SpectralReport::iterations);
  m.def(
      "spectral_gap",
      [](const Grid& g, const Array& h, const std::string& id) { return spectral_gap(g, field(g, h), id); },
      py::arg("grid"), py::arg("weight"), py::arg("weight_id") = "H");
  m.def(
      "ratio_bound_check",
      [](const Grid& g, const Array& h, double lambda_h, double lambda_1) {
        const RatioBoundReport r = ratio_bound_check(field(g, h), lambda_h, lambda_1);
        py::dict d;
        d["pass"] = r.pass;
        d["lambda"] = r.lambda;
        d["bound"] = r.bound;
        d["margin"] = r.margin;
        return d;
      },
      py::arg("grid"), py::arg("weight"), py::arg("lambda_weighted"), py::arg("lambda_unweighted"));

  m.def("mass", [](const Grid& g, const Array& f) { return mass(field(g, f)); }, py::arg("grid"), py::arg("f"));
  m.def(
      "weighted_norm_sq", [](const Grid& g, const Array& f, const Array& w) { return weighted_norm_sq(field(g, f), field(g, w)); },
      py::arg("grid"), py::arg("f"), py::arg("w"));
  m.def(
      "relative_entropy",
      [](const Grid& g, const Array& u, const Array& u_inf) { return relative_entropy(field(g, u), field(g, u_inf)); },
      py::arg("grid"), py::arg("u"), py::arg("u_inf"));
  m.def(
      "dissipation", [](const Grid& g, const Array& u, const Array& u_inf) { return dissipation(field(g, u), field(g, u_inf)); },
      py::arg("grid"), py::arg("u"), py::arg("u_inf"));
  m.def(
      "perturbed_initial",
      [](const Grid& g, const Array& u_inf, std::uint64_t seed, double amplitude) {
        return to_numpy(perturbed_initial(field(g, u_inf), seed, amplitude).values());
      },
      py::arg("grid"), py::arg("u_inf"), py::arg("seed"), py::arg("amplitude") = 0.2);
  m.def(
      "remove_weighted_mean",
      [](const Grid& g, const Array& phi, const Array& k) {
        return to_numpy(remove_weighted_mean(field(g, phi), field(g, k)).values());
      },
      py::arg("grid"), py::arg("phi"), py::arg("dual"));

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly("times", [](const Trajectory& t) { return to_numpy(t.times); })
      .def_property_readonly("diagnostics", &diagnostics)
      .def_property_readonly("final_state", [](const Trajectory& t) { return to_numpy(t.final_state.values()); })
      .def_property_readonly("snapshots",
                             [](const Trajectory& t) {
                               py::list out;
                               for (const Snapshot& s : t.snapshots) {
                                 out.append(py::make_tuple(s.step, s.time, to_numpy(s.state.values())));
                               }
                               return out;
                             })
      .def("max_entropy_increase", &max_entropy_increase)
      .def("max_mass_drift", &max_mass_drift)
      .def("max_phi_k_drift", &max_phi_k_drift)
      .def("__len__", [](const Trajectory& t) { return t.times.size(); });
  m.def(
      "evolve",
      [](const SparseOperator& a, const Array& u0, const Array& u_inf, double dt, double t, double theta, int stride,
         const std::optional<Array>& dual) {
        const Grid& g = a.grid();
        py::gil_scoped_release release;
        return evolve(a, field(g, u0), field(g, u_inf), steps(dt, t, theta, stride), optional_field(g, dual));
      },
      py::arg("generator"), py::arg("u0"), py::arg("u_inf"), py::arg("dt"), py::arg("T"), py::arg("theta") = 1.0,
      py::arg("snapshot_stride") = 0, py::arg("dual") = py::none());
  m.def(
      "evolve_phi",
      [](const SparseOperator& a_hat, const Array& phi0, const Array& dual, double dt, double t, double theta,
         int stride, const std::optional<Array>& u_inf) {
        const Grid& g = a_hat.grid();
        py::gil_scoped_release release;
        return evolve_phi(a_hat, field(g, phi0), field(g, dual), steps(dt, t, theta, stride), optional_field(g, u_inf));
      },
      py::arg("phi_generator"), py::arg("phi0"), py::arg("dual"), py::arg("dt"), py::arg("T"), py::arg("theta") = 1.0,
      py::arg("snapshot_stride") = 0, py::arg("u_inf") = py::none());

  py::class_<DecayReport>(m, "DecayReport")
      .def_readonly("alpha_fit", &DecayReport::alpha_fit)
      .def_readonly("c_fit", &DecayReport::c_fit)
      .def_readonly("r_squared", &DecayReport::r_squared)
      .def_property_readonly("fit_window", [](const DecayReport& r) { return py::make_tuple(r.t_start, r.t_end); })
      .def_readonly("samples", &DecayReport::samples)
      .def_readonly("lambda_predicted", &DecayReport::lambda_predicted)
      .def_readonly("valid", &DecayReport::valid)
      .def_readonly("envelope_ok", &DecayReport::envelope_ok);
  m.def(
      "fit_decay",
      [](const Trajectory& t, const std::string& quantity, double lambda) {
        return fit_decay(t, decay_quantity(quantity), lambda);
      },
      py::arg("trajectory"), py::arg("quantity") = "l2_dist", py::arg("lambda_predicted") = 0.0);

  py::class_<EnvelopeReport>(m, "EnvelopeReport")
      .def_readonly("passed", &EnvelopeReport::pass)
      .def_readonly("c_tilde", &EnvelopeReport::c_tilde)
      .def_readonly("worst_margin", &EnvelopeReport::worst_margin)
      .def_readonly("worst_time", &EnvelopeReport::worst_time)
      .def_readonly("checked", &EnvelopeReport::checked);
  m.def(
      "envelope_check",
      [](const Trajectory& t, const Grid& g, const Array& dual, double lambda) {
        return envelope_check(t, field(g, dual), lambda);
      },
      py::arg("trajectory"), py::arg("grid"), py::arg("dual"), py::arg("lambda_"));

  m.def(
      "run",
      [](const std::string& command, const std::string& config_json, bool paper_mode,
         const std::optional<std::string>& out_dir) {
        const auto cmd = cli::parse_command(command);
        if (!cmd) throw std::invalid_argument("unknown command: " + command);
        const ExperimentConfig cfg = parse_config(config_json);
        cli::RunOptions opts;
        opts.paper_mode = paper_mode;
        if (out_dir) opts.out_dir = *out_dir;
        std::ostringstream out, err;
        const int code = cli::run(*cmd, cfg, opts, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("command"), py::arg("config_json"), py::arg("paper_mode") = false, py::arg("out_dir") = py::none(),
      "Runs one CLI subcommand in-process; returns (exit_code, stdout, stderr).");
}
