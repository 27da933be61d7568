#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "json.hpp"
#include "maf/errors.hpp"

namespace maf::detail {

using nlohmann::json;

inline json parse_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Err::ArtifactMissing, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    raise(Err::ParseError, path.string() + ": " + e.what());
  }
}

// Serialized form shared by every writer: 2-space indent, sorted keys
// (nlohmann default), trailing newline. Keeping this uniform is what makes
// write-read-write byte-identical.
inline void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(Err::ArtifactMissing, "cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) raise(Err::ArtifactMissing, "write failed on " + path.string());
}

inline const json& require(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) raise(Err::ParseError, ctx + ": missing key '" + key + "'");
  return *it;
}

inline int require_int(const json& j, const char* key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_number_integer()) raise(Err::ParseError, ctx + ": '" + std::string(key) + "' must be an integer");
  return v.get<int>();
}

inline double require_double(const json& j, const char* key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_number()) raise(Err::ParseError, ctx + ": '" + std::string(key) + "' must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) raise(Err::ParseError, ctx + ": '" + std::string(key) + "' must be finite");
  return d;
}

inline std::string require_string(const json& j, const char* key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_string()) raise(Err::ParseError, ctx + ": '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

inline const json& require_array(const json& j, const char* key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_array()) raise(Err::ParseError, ctx + ": '" + std::string(key) + "' must be an array");
  return v;
}

}  // namespace maf::detail
