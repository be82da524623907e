#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "laasim/grid_case.hpp"

namespace laasim {

/// Parses JSON text. Syntax errors throw CaseError carrying
/// "<source>:<line>:<column>"; schema errors name the JSON path.
nlohmann::json parse_json_text(std::string_view text, const std::string& source);
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Case document -> GridCase. Does not run validate(); callers decide.
GridCase case_from_json(const nlohmann::json& doc, const std::string& source = "<case>");
GridCase load_case(const std::filesystem::path& path);

/// Round-trippable document in model-independent units.
nlohmann::json case_to_json(const GridCase& c);

/// Resolves a case reference: an existing path, or a bare name looked up in
/// the shipped data/cases directory.
std::filesystem::path resolve_case_path(const std::string& ref);

}  // namespace laasim
