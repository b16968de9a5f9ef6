#pragma once

#include <string>

#include <json.hpp>

#include "ftlab/grid.hpp"

namespace ftlab {

inline constexpr const char* kArtifactVersion = "0.1.0";

/// FNV-1a over a canonical string; used to stamp outputs with the config
/// that produced them.
uint64_t fnv1a(const std::string& s);
std::string hash_hex(uint64_t h);

/// ScalarField <-> JSON {d, n, values: flat row-major array}.
nlohmann::json field_to_json(const ScalarField& f);
ScalarField field_from_json(const nlohmann::json& j);

/// CSV, one row per grid line (outer indices flattened for d = 3). A leading
/// comment line carries version and, when provided, the config hash.
std::string field_to_csv(const ScalarField& f, const std::string& config_hash = "");

void write_text_file(const std::string& path, const std::string& content);
void write_json_file(const std::string& path, const nlohmann::json& j);
std::string read_text_file(const std::string& path);

/// Doubles are printed with up to 17 significant digits so that equal values
/// serialize identically across runs.
std::string format_double(double v);

}  // namespace ftlab
