#include "xcohort/json_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include "xcohort/error.hpp"

namespace xcohort {

namespace {

std::mutex g_audit_mutex;
std::vector<std::string> g_audit_reads;

void escape_string(std::string& out, const std::string& s) {
    // Reuse nlohmann's escaping for strings.
    out += Json(s).dump();
}

void dump_value(std::string& out, const Json& j, int depth) {
    const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
    const std::string close_pad(static_cast<std::size_t>(2 * depth), ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = j.begin(); it != j.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += pad;
                escape_string(out, it.key());
                out += ": ";
                dump_value(out, it.value(), depth + 1);
            }
            out += "\n" + close_pad + "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                out += "[]";
                return;
            }
            // Arrays of scalars stay on one line; nested structures are expanded.
            bool scalar = true;
            for (const auto& e : j) {
                if (e.is_structured()) {
                    scalar = false;
                    break;
                }
            }
            if (scalar) {
                out += "[";
                bool first = true;
                for (const auto& e : j) {
                    if (!first) out += ", ";
                    first = false;
                    dump_value(out, e, depth + 1);
                }
                out += "]";
                return;
            }
            out += "[\n";
            bool first = true;
            for (const auto& e : j) {
                if (!first) out += ",\n";
                first = false;
                out += pad;
                dump_value(out, e, depth + 1);
            }
            out += "\n" + close_pad + "]";
            return;
        }
        case Json::value_t::number_float:
            out += format_double(j.get<double>());
            return;
        case Json::value_t::string:
            escape_string(out, j.get<std::string>());
            return;
        default:
            out += j.dump();
            return;
    }
}

}  // namespace

std::string format_double(double value) {
    if (!std::isfinite(value)) fail(ErrorCode::InvalidValue, "non-finite value cannot be serialized");
    if (value == 0.0) return "0";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string canonical_dump(const Json& doc) {
    std::string out;
    dump_value(out, doc, 0);
    out += "\n";
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

Json to_json(const Eigen::VectorXd& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Json to_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::VectorXd vector_from_json(const Json& j) {
    if (!j.is_array()) fail(ErrorCode::SchemaError, "expected numeric array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
    if (!j.is_array()) fail(ErrorCode::SchemaError, "expected array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            fail(ErrorCode::SchemaError, "ragged matrix in JSON");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

const Json& require(const Json& obj, const std::string& key) {
    if (!obj.is_object() || !obj.contains(key)) fail(ErrorCode::SchemaError, "missing key '" + key + "'");
    return obj.at(key);
}

std::string read_text_file(const std::filesystem::path& path) {
    {
        std::lock_guard lock(g_audit_mutex);
        g_audit_reads.push_back(std::filesystem::absolute(path).lexically_normal().string());
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

Json read_json_file(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        fail(ErrorCode::SchemaError, "invalid JSON in '" + path.string() + "': " + e.what());
    }
}

namespace file_audit {

std::vector<std::string> reads() {
    std::lock_guard lock(g_audit_mutex);
    return g_audit_reads;
}

void clear() {
    std::lock_guard lock(g_audit_mutex);
    g_audit_reads.clear();
}

}  // namespace file_audit

}  // namespace xcohort
