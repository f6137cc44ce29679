#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace xcohort {

using Json = nlohmann::json;

/// Always 17 significant digits (%.17g); negative zero prints as 0.
std::string format_double(double value);

/// Sorted keys, two-space indentation, doubles via format_double, trailing newline.
std::string canonical_dump(const Json& doc);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

Json to_json(const Eigen::VectorXd& v);
Json to_json(const Eigen::MatrixXd& m);
Eigen::VectorXd vector_from_json(const Json& j);
Eigen::MatrixXd matrix_from_json(const Json& j);

/// Checked accessor that throws SchemaError naming the missing key.
const Json& require(const Json& obj, const std::string& key);

// All file access in the library goes through these so that tests can audit
// which paths a command touched.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);
Json read_json_file(const std::filesystem::path& path);

namespace file_audit {
std::vector<std::string> reads();
void clear();
}  // namespace file_audit

}  // namespace xcohort
