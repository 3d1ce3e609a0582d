#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "cbi/measures.hpp"
#include "cbi/montecarlo.hpp"
#include "cbi/params.hpp"
#include "cbi/scenario.hpp"

namespace cbi {

using Json = nlohmann::json;

/// Parses a file; SchemaError on I/O or syntax problems.
Json read_json_file(const std::filesystem::path& path);

Json to_json(const Vector& v);
Json to_json(const Matrix& m);
Vector vector_from_json(const Json& j, const char* what);
Matrix matrix_from_json(const Json& j, const char* what);

/// null, a single tagged object, or an array of tagged objects (a mixture).
JumpMeasure measure_from_json(const Json& j, std::size_t dim, const char* what);
Json to_json(const JumpMeasure& m);

/// Reads the schema; dimension agreement is left to check_dimensions/validate.
AdmissibleParams params_from_json(const Json& j);
Json to_json(const AdmissibleParams& p);

Json to_json(const DerivedParams& der);
DerivedParams derived_from_json(const Json& j);

Json to_json(const ValidationReport& r);
Json to_json(const McEstimate& e);
Json to_json(const VerifyReport& r, bool with_timing);

Scenario scenario_from_json(const Json& j);

}  // namespace cbi
