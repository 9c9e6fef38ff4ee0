#pragma once

#include <json.hpp>

#include "gqmp/hermitian.hpp"

namespace gqmp {

// Matrix literal format used in configs and presets: row-major [re, im]
// pairs plus shape. Square Hermitian matrices use {"dim": n, "entries": ...};
// general matrices use {"rows": r, "cols": c, "entries": ...}. Serialization
// uses shortest round-trip decimal text, so save/load is value-exact.

nlohmann::json matrix_to_json(const Mat& m);
nlohmann::json hermitian_to_json(const HermitianMatrix& a);

Mat matrix_from_json(const nlohmann::json& j);
HermitianMatrix hermitian_from_json(const nlohmann::json& j);

}  // namespace gqmp
