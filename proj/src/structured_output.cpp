#include "pairsafe/structured_output.hpp"

#include <optional>
#include <string>

#include "pairsafe/errors.hpp"

namespace pairsafe {

using nlohmann::json;

namespace {

constexpr int kMaxCandidates = 64;

// Drops commas that directly precede '}' or ']' outside string literals.
std::string strip_trailing_commas(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      out += c;
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == ',') {
      auto j = s.find_first_not_of(" \t\r\n", i + 1);
      if (j != std::string_view::npos && (s[j] == '}' || s[j] == ']')) continue;
    }
    out += c;
  }
  return out;
}

// End (inclusive) of the brace-balanced object starting at `open`, if any.
std::optional<std::size_t> matching_brace(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i;
    }
  }
  return std::nullopt;
}

std::optional<json> try_parse_object(std::string_view candidate) {
  auto parsed = json::parse(strip_trailing_commas(candidate), nullptr, /*allow_exceptions=*/false);
  if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
  return parsed;
}

std::optional<json> scan(std::string_view text) {
  int tried = 0;
  for (auto open = text.find('{'); open != std::string_view::npos && tried < kMaxCandidates;
       open = text.find('{', open + 1)) {
    ++tried;
    auto close = matching_brace(text, open);
    if (!close) continue;
    if (auto obj = try_parse_object(text.substr(open, *close - open + 1))) return obj;
  }
  return std::nullopt;
}

}  // namespace

json extract_json_object(std::string_view text) {
  // Prefer the body of the first fenced block when there is one.
  if (auto fence = text.find("```"); fence != std::string_view::npos) {
    auto body_start = text.find('\n', fence);
    if (body_start != std::string_view::npos) {
      auto fence_end = text.find("```", body_start);
      if (fence_end != std::string_view::npos) {
        if (auto obj = scan(text.substr(body_start + 1, fence_end - body_start - 1))) return *obj;
      }
    }
  }
  if (auto obj = scan(text)) return *obj;
  throw NotParseable("no JSON object found in model output");
}

}  // namespace pairsafe
