#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "sisparrow/array_model.hpp"
#include "sisparrow/freq_recovery.hpp"
#include "sisparrow/solvers.hpp"
#include "sisparrow/types.hpp"

namespace sisparrow {

using Json = nlohmann::json;

/// {"rows": r, "cols": c, "re": [...], "im": [...]}, row-major.
Json to_json(const CMatrix& m);
CMatrix matrix_from_json(const Json& j);

Json to_json(const ArrayGeometry& g);
ArrayGeometry geometry_from_json(const Json& j);

Json to_json(const SolverReport& r, bool include_Q = true);
Json to_json(const FrequencyEstimate& e);

Json read_json(const std::string& path);
void write_json(const std::string& path, const Json& j);

} // namespace sisparrow
