#pragma once

#include <ostream>
#include <string>

#include "json.hpp"

#include "fpratelab/drift.hpp"
#include "fpratelab/evolve.hpp"
#include "fpratelab/fields.hpp"
#include "fpratelab/spectral.hpp"

namespace fpl {

/// %.17g; non-finite values become "nan", "inf" or "-inf".
std::string format_number(double v);

/// Pretty-prints JSON with every floating-point number at 17 significant
/// digits (non-finite numbers as null). Output ends with a newline.
void write_json(std::ostream& out, const nlohmann::json& value);

/// Header `i,x,value` in 1D and `i,j,x,y,value` in 2D; one row per cell.
void write_field_csv(std::ostream& out, const ScalarField& field);

/// Header `t,mass,entropy,dissipation,l2_dist,phiK`; one row per step.
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

nlohmann::json to_json(const SpectralReport& report);
nlohmann::json to_json(const DecayReport& report);
nlohmann::json to_json(const EnvelopeReport& report);
nlohmann::json to_json(const InwardReport& report, const Grid& grid);

}  // namespace fpl
