#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "exirt/irt_fit.hpp"

namespace exirt {

// Parameter files: CSV `item_id,a,b,se_a,se_b,degenerate` or JSON
// {"schema_version", "items": [...]}. Values use the shortest decimal that
// round-trips, so re-reading reproduces the fitted doubles exactly.

void write_parameters_csv(std::ostream& out, std::span<const ItemParameters> items);
nlohmann::ordered_json parameters_json(std::span<const ItemParameters> items);
/// Throws SchemaMismatch on a wrong header or structure.
std::vector<ItemParameters> read_parameters(std::istream& in, bool json);

void write_abilities_csv(std::ostream& out, std::span<const AbilityEstimate> abilities);
nlohmann::ordered_json to_json(const FitDiagnostics& diagnostics);

}  // namespace exirt
