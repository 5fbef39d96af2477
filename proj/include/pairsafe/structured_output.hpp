#pragma once

#include <string_view>

#include <json.hpp>

namespace pairsafe {

// Finds the first JSON object in free-form model output. Accepts surrounding prose,
// markdown code fences and trailing commas before a closing bracket.
// Throws NotParseable when no object can be recovered.
nlohmann::json extract_json_object(std::string_view text);

}  // namespace pairsafe
