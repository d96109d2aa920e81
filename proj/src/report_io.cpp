#include "fpratelab/report_io.hpp"

#include <cmath>
#include <cstdio>

namespace fpl {
namespace {

using nlohmann::json;

void indent(std::ostream& out, int level) {
  for (int i = 0; i < level; ++i) out << "  ";
}

void write_value(std::ostream& out, const json& v, int level) {
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        out << "{}";
        return;
      }
      out << "{\n";
      std::size_t k = 0;
      for (auto it = v.begin(); it != v.end(); ++it, ++k) {
        indent(out, level + 1);
        out << json(it.key()).dump() << ": ";
        write_value(out, it.value(), level + 1);
        out << (k + 1 < v.size() ? ",\n" : "\n");
      }
      indent(out, level);
      out << "}";
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        out << "[]";
        return;
      }
      out << "[\n";
      for (std::size_t k = 0; k < v.size(); ++k) {
        indent(out, level + 1);
        write_value(out, v[k], level + 1);
        out << (k + 1 < v.size() ? ",\n" : "\n");
      }
      indent(out, level);
      out << "]";
      return;
    }
    case json::value_t::number_float: {
      const double d = v.get<double>();
      out << (std::isfinite(d) ? format_number(d) : "null");
      return;
    }
    default:
      out << v.dump();
  }
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_json(std::ostream& out, const json& value) {
  write_value(out, value, 0);
  out << "\n";
}

void write_field_csv(std::ostream& out, const ScalarField& field) {
  const Grid& g = field.grid();
  out << (g.dim() == 1 ? "i,x,value\n" : "i,j,x,y,value\n");
  for (std::size_t c = 0; c < field.size(); ++c) {
    const auto [i, j] = g.cell_coords(c);
    const auto x = g.cell_center(c);
    if (g.dim() == 1) {
      out << i << ',' << format_number(x[0]) << ',' << format_number(field[c]) << '\n';
    } else {
      out << i << ',' << j << ',' << format_number(x[0]) << ',' << format_number(x[1]) << ','
          << format_number(field[c]) << '\n';
    }
  }
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "t,mass,entropy,dissipation,l2_dist,phiK\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    const Diagnostics& d = traj.diagnostics[k];
    out << format_number(traj.times[k]) << ',' << format_number(d.mass) << ','
        << format_number(d.entropy) << ',' << format_number(d.dissipation) << ','
        << format_number(d.l2_dist) << ',' << format_number(d.phi_k) << '\n';
  }
}

json to_json(const SpectralReport& r) {
  return {
      {"weight_id", r.weight_id},
      {"lambda", r.lambda},
      {"poincare_constant", r.poincare_constant},
      {"residual", r.residual},
      {"ratio_bound", r.ratio_bound},
      {"lambda_unweighted", r.lambda_unweighted},
      {"next_lambda", finite_or_null(r.next_lambda)},
      {"near_degenerate", r.near_degenerate},
      {"iterations", r.iterations},
  };
}

json to_json(const DecayReport& r) {
  return {
      {"alpha_fit", r.alpha_fit},
      {"c_fit", r.c_fit},
      {"r_squared", r.r_squared},
      {"fit_window", {r.t_start, r.t_end}},
      {"samples", r.samples},
      {"lambda_predicted", r.lambda_predicted},
      {"valid", r.valid},
      {"envelope_ok", r.envelope_ok},
  };
}

json to_json(const EnvelopeReport& r) {
  return {
      {"pass", r.pass},
      {"c_tilde", r.c_tilde},
      {"worst_margin", finite_or_null(r.worst_margin)},
      {"worst_time", r.worst_time},
      {"checked", r.checked},
  };
}

json to_json(const InwardReport& r, const Grid& grid) {
  json j = {
      {"pass", r.pass},
      {"min_boundary_normal", r.min_normal},
      {"max_boundary_normal", r.max_normal},
  };
  if (r.worst_face != kNoCell) {
    const Face f = grid.face(r.worst_face);
    j["worst_face"] = {{"index", r.worst_face},
                       {"axis", f.axis},
                       {"center", {f.center[0], f.center[1]}}};
  }
  return j;
}

}  // namespace fpl
