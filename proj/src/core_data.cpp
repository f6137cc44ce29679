#include "xcohort/core_data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "xcohort/error.hpp"
#include "xcohort/json_io.hpp"

namespace xcohort::data {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::vector<std::string> split_tokens(std::string_view name) {
    std::vector<std::string> tokens;
    std::size_t start = 0;
    while (start <= name.size()) {
        const std::size_t pos = name.find('_', start);
        const std::size_t end = pos == std::string_view::npos ? name.size() : pos;
        tokens.push_back(lower(name.substr(start, end - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return tokens;
}

Sequence parse_sequence(const std::string& t) {
    if (t == "t1") return Sequence::T1;
    if (t == "t1ce" || t == "t1c" || t == "t1gd") return Sequence::T1CE;
    if (t == "t2") return Sequence::T2;
    if (t == "flair") return Sequence::FLAIR;
    return Sequence::OTHER;
}

FeatureClass parse_class(const std::string& t) {
    if (t == "shape" || t == "shape2d" || t == "shape3d") return FeatureClass::SHAPE;
    if (t == "firstorder") return FeatureClass::FIRSTORDER;
    if (t == "glcm") return FeatureClass::GLCM;
    if (t == "glszm") return FeatureClass::GLSZM;
    if (t == "gldm") return FeatureClass::GLDM;
    if (t == "ngtdm") return FeatureClass::NGTDM;
    if (t == "glrlm") return FeatureClass::GLRLM;
    return FeatureClass::OTHER;
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::optional<bool> parse_bool(std::string_view cell) {
    const std::string t = lower(trim(cell));
    if (t == "1" || t == "true" || t == "yes") return true;
    if (t == "0" || t == "false" || t == "no") return false;
    return std::nullopt;
}

std::size_t column_of(const std::vector<std::string>& header, const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorCode::MissingColumn, "column '" + name + "' not found in header");
    return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

std::string_view to_string(Sequence s) {
    switch (s) {
        case Sequence::T1: return "T1";
        case Sequence::T1CE: return "T1CE";
        case Sequence::T2: return "T2";
        case Sequence::FLAIR: return "FLAIR";
        case Sequence::OTHER: return "OTHER";
    }
    return "OTHER";
}

std::string_view to_string(Region r) {
    switch (r) {
        case Region::NECROTIC_CORE: return "NECROTIC_CORE";
        case Region::ENHANCING: return "ENHANCING";
        case Region::EDEMA: return "EDEMA";
        case Region::OTHER: return "OTHER";
    }
    return "OTHER";
}

std::string_view to_string(FeatureClass c) {
    switch (c) {
        case FeatureClass::SHAPE: return "SHAPE";
        case FeatureClass::FIRSTORDER: return "FIRSTORDER";
        case FeatureClass::GLCM: return "GLCM";
        case FeatureClass::GLSZM: return "GLSZM";
        case FeatureClass::GLDM: return "GLDM";
        case FeatureClass::NGTDM: return "NGTDM";
        case FeatureClass::GLRLM: return "GLRLM";
        case FeatureClass::OTHER: return "OTHER";
    }
    return "OTHER";
}

std::string_view to_string(SignatureMatrix m) { return m == SignatureMatrix::PAN_CANCER ? "PAN_CANCER" : "GBM"; }

SignatureMatrix signature_matrix_from_string(std::string_view s) {
    const std::string t = lower(s);
    if (t == "pan_cancer" || t == "pan-cancer" || t == "pan") return SignatureMatrix::PAN_CANCER;
    if (t == "gbm" || t == "glioblastoma") return SignatureMatrix::GBM;
    fail(ErrorCode::ConfigInvalid, "unknown signature matrix '" + std::string(s) + "'");
}

FeatureDescriptor FeatureDescriptor::parse(std::string_view name) {
    FeatureDescriptor d;
    d.name = std::string(name);
    const auto tokens = split_tokens(name);
    std::size_t pos = 0;
    if (pos < tokens.size()) d.sequence = parse_sequence(tokens[pos++]);
    if (pos < tokens.size()) {
        const std::string& t = tokens[pos++];
        if (t == "necrotic" && pos < tokens.size() && tokens[pos] == "core") {
            d.region = Region::NECROTIC_CORE;
            ++pos;
        } else if (t == "necrotic" || t == "necroticcore" || t == "ncr" || t == "core") {
            d.region = Region::NECROTIC_CORE;
        } else if (t == "enhancing" || t == "et") {
            d.region = Region::ENHANCING;
        } else if (t == "edema" || t == "ed") {
            d.region = Region::EDEMA;
        }
    }
    if (pos < tokens.size()) d.feature_class = parse_class(tokens[pos]);
    return d;
}

FeatureMatrix::FeatureMatrix(std::vector<SampleMeta> samples, std::vector<FeatureDescriptor> descriptors,
                             Eigen::MatrixXd values)
    : samples_(std::move(samples)), descriptors_(std::move(descriptors)), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.rows()) != samples_.size() ||
        static_cast<std::size_t>(values_.cols()) != descriptors_.size()) {
        fail(ErrorCode::DimensionMismatch, "value matrix shape does not match samples/descriptors");
    }
    std::unordered_set<std::string> names;
    for (const auto& d : descriptors_) {
        if (d.name.empty()) fail(ErrorCode::InvalidValue, "empty feature name");
        if (!names.insert(d.name).second) fail(ErrorCode::FeatureMismatch, "duplicate feature name '" + d.name + "'");
    }
    std::unordered_set<std::string> ids;
    for (const auto& s : samples_) {
        if (!ids.insert(s.sample_id).second) fail(ErrorCode::DuplicateSampleId, "duplicate sample id '" + s.sample_id + "'");
        if (s.event_observed.has_value() != s.survival_years.has_value()) {
            fail(ErrorCode::InvalidValue, "sample '" + s.sample_id + "': event_observed requires survival_years and vice versa");
        }
    }
    if (!values_.allFinite()) fail(ErrorCode::InvalidValue, "feature matrix contains non-finite values");
}

std::vector<std::string> FeatureMatrix::feature_names() const {
    std::vector<std::string> out;
    out.reserve(descriptors_.size());
    for (const auto& d : descriptors_) out.push_back(d.name);
    return out;
}

std::vector<std::string> FeatureMatrix::sample_ids() const {
    std::vector<std::string> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) out.push_back(s.sample_id);
    return out;
}

std::vector<std::string> FeatureMatrix::batch_ids() const {
    std::vector<std::string> out;
    out.reserve(samples_.size());
    for (const auto& s : samples_) out.push_back(s.batch_id);
    return out;
}

std::set<std::string> FeatureMatrix::distinct_batches() const {
    std::set<std::string> out;
    for (const auto& s : samples_) out.insert(s.batch_id);
    return out;
}

std::optional<std::size_t> FeatureMatrix::feature_index(std::string_view name) const {
    for (std::size_t j = 0; j < descriptors_.size(); ++j) {
        if (descriptors_[j].name == name) return j;
    }
    return std::nullopt;
}

std::vector<std::size_t> FeatureMatrix::zero_variance_columns() const {
    std::vector<std::size_t> out;
    for (Eigen::Index j = 0; j < values_.cols(); ++j) {
        if (values_.rows() == 0 || values_.col(j).maxCoeff() == values_.col(j).minCoeff()) {
            out.push_back(static_cast<std::size_t>(j));
        }
    }
    return out;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
    std::vector<SampleMeta> s;
    Eigen::MatrixXd v(static_cast<Eigen::Index>(rows.size()), values_.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= samples_.size()) fail(ErrorCode::IndexOutOfRange, "row index out of range");
        s.push_back(samples_[rows[i]]);
        v.row(static_cast<Eigen::Index>(i)) = values_.row(static_cast<Eigen::Index>(rows[i]));
    }
    return FeatureMatrix(std::move(s), descriptors_, std::move(v));
}

FeatureMatrix FeatureMatrix::select_columns(std::span<const std::size_t> cols) const {
    std::vector<FeatureDescriptor> d;
    Eigen::MatrixXd v(values_.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (cols[j] >= descriptors_.size()) fail(ErrorCode::IndexOutOfRange, "column index out of range");
        d.push_back(descriptors_[cols[j]]);
        v.col(static_cast<Eigen::Index>(j)) = values_.col(static_cast<Eigen::Index>(cols[j]));
    }
    return FeatureMatrix(samples_, std::move(d), std::move(v));
}

FeatureMatrix FeatureMatrix::select_features(const std::vector<std::string>& names) const {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < descriptors_.size(); ++j) index.emplace(descriptors_[j].name, j);
    std::vector<std::size_t> cols;
    cols.reserve(names.size());
    for (const auto& n : names) {
        const auto it = index.find(n);
        if (it == index.end()) fail(ErrorCode::FeatureMismatch, "missing feature column '" + n + "'");
        cols.push_back(it->second);
    }
    return select_columns(cols);
}

FeatureMatrix FeatureMatrix::with_values(Eigen::MatrixXd values) const {
    return FeatureMatrix(samples_, descriptors_, std::move(values));
}

FeatureMatrix FeatureMatrix::with_descriptors_and_values(std::vector<FeatureDescriptor> descriptors,
                                                         Eigen::MatrixXd values) const {
    return FeatureMatrix(samples_, std::move(descriptors), std::move(values));
}

FeatureMatrix FeatureMatrix::canonical() const {
    std::vector<std::size_t> order(descriptors_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return descriptors_[a].name < descriptors_[b].name; });
    return select_columns(order);
}

FeatureMatrix concat_rows(const std::vector<const FeatureMatrix*>& parts) {
    if (parts.empty()) return {};
    const auto& first = *parts.front();
    Eigen::Index rows = 0;
    for (const auto* p : parts) {
        if (p->descriptors() != first.descriptors()) fail(ErrorCode::FeatureMismatch, "feature lists differ across parts");
        rows += static_cast<Eigen::Index>(p->n_samples());
    }
    std::vector<SampleMeta> samples;
    Eigen::MatrixXd v(rows, static_cast<Eigen::Index>(first.n_features()));
    Eigen::Index r = 0;
    for (const auto* p : parts) {
        samples.insert(samples.end(), p->samples().begin(), p->samples().end());
        v.middleRows(r, p->values().rows()) = p->values();
        r += p->values().rows();
    }
    return FeatureMatrix(std::move(samples), first.descriptors(), std::move(v));
}

void ScorePanel::validate() const {
    if (static_cast<std::size_t>(scores.rows()) != sample_ids.size() ||
        static_cast<std::size_t>(scores.cols()) != categories.size()) {
        fail(ErrorCode::DimensionMismatch, "score panel shape does not match ids/categories");
    }
    if (!scores.allFinite()) fail(ErrorCode::InvalidValue, "score panel contains non-finite values");
    if ((scores.array() < 0.0).any()) fail(ErrorCode::InvalidValue, "score panel contains negative scores");
    std::unordered_set<std::string> ids(sample_ids.begin(), sample_ids.end());
    if (ids.size() != sample_ids.size()) fail(ErrorCode::DuplicateSampleId, "duplicate sample id in score panel");
}

std::optional<std::size_t> ScorePanel::category_index(std::string_view name) const {
    for (std::size_t j = 0; j < categories.size(); ++j) {
        if (categories[j] == name) return j;
    }
    return std::nullopt;
}

const std::vector<std::string>& pan_cancer_categories() {
    static const std::vector<std::string> cats = {
        "immune_score",   "t_cells",        "tams",          "dc",         "nk_cells",   "cd4_t_cells",
        "cd8_t_cells",    "treg_cells",     "m0_macrophages", "m1_macrophages", "m2_macrophages"};
    return cats;
}

const std::vector<std::string>& gbm_categories() {
    static const std::vector<std::string> cats = {"immune_score", "t_cells", "tams", "dc", "nk_cells", "microglia"};
    return cats;
}

const std::vector<std::string>& categories_for(SignatureMatrix m) {
    return m == SignatureMatrix::PAN_CANCER ? pan_cancer_categories() : gbm_categories();
}

void GroupSplit::validate() const {
    if (train_cohorts.empty()) fail(ErrorCode::InvalidSplit, "group '" + group_id + "' has no training cohorts");
    if (holdout_cohort.empty()) fail(ErrorCode::InvalidSplit, "group '" + group_id + "' has no holdout cohort");
    if (train_cohorts.count(holdout_cohort) != 0) {
        fail(ErrorCode::InvalidSplit, "holdout cohort '" + holdout_cohort + "' is also listed for training");
    }
}

std::vector<GroupSplit> standard_group_splits() {
    return {
        {"G1", {"TCGA", "CPTAC", "CGGA", "REMBRANDT"}, "IvyGAP"},
        {"G2", {"CPTAC", "IvyGAP", "CGGA", "REMBRANDT"}, "TCGA"},
        {"G3", {"TCGA", "IvyGAP", "CGGA", "REMBRANDT"}, "CPTAC"},
    };
}

std::vector<std::vector<std::string>> parse_csv_rows(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool in_quotes = false;
    bool row_has_content = false;
    std::size_t i = 0;
    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") i = 3;
    for (; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cell += c;
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
            row_has_content = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
            row_has_content = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (row_has_content || !cell.empty()) {
                row.push_back(std::move(cell));
                rows.push_back(std::move(row));
            }
            row.clear();
            cell.clear();
            row_has_content = false;
        } else {
            cell += c;
            row_has_content = true;
        }
    }
    if (row_has_content || !cell.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::optional<double> parse_number(std::string_view cell) {
    const std::string t = trim(cell);
    if (t.empty()) return std::nullopt;
    const char* begin = t.data();
    if (*begin == '+') ++begin;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

FeatureMatrix parse_feature_csv(std::string_view text, const CsvSchema& schema) {
    const auto rows = parse_csv_rows(text);
    if (rows.empty()) fail(ErrorCode::MissingColumn, "feature CSV has no header row");
    const auto& header = rows.front();
    const std::size_t id_col = column_of(header, schema.sample_id_column);
    const std::size_t batch_col = column_of(header, schema.batch_id_column);
    std::vector<std::size_t> feature_cols;
    std::vector<FeatureDescriptor> descriptors;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == id_col || c == batch_col) continue;
        if (std::find(schema.ignore_columns.begin(), schema.ignore_columns.end(), header[c]) !=
            schema.ignore_columns.end()) {
            continue;
        }
        feature_cols.push_back(c);
        descriptors.push_back(FeatureDescriptor::parse(trim(header[c])));
    }
    const std::size_t n = rows.size() - 1;
    std::vector<SampleMeta> samples;
    samples.reserve(n);
    Eigen::MatrixXd values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(feature_cols.size()));
    std::unordered_set<std::string> seen;
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = rows[r + 1];
        if (row.size() != header.size()) {
            fail(ErrorCode::DimensionMismatch,
                 "row " + std::to_string(r + 1) + " has " + std::to_string(row.size()) + " cells, header has " +
                     std::to_string(header.size()));
        }
        SampleMeta s;
        s.sample_id = trim(row[id_col]);
        s.batch_id = trim(row[batch_col]);
        if (s.sample_id.empty()) fail(ErrorCode::InvalidValue, "empty sample_id at row " + std::to_string(r + 1));
        if (!seen.insert(s.sample_id).second) fail(ErrorCode::DuplicateSampleId, "duplicate sample id '" + s.sample_id + "'");
        for (std::size_t j = 0; j < feature_cols.size(); ++j) {
            const auto v = parse_number(row[feature_cols[j]]);
            if (!v) {
                fail(ErrorCode::NonNumericCell, "row " + std::to_string(r + 1) + ", column " +
                                                    std::to_string(feature_cols[j] + 1) + " ('" + header[feature_cols[j]] +
                                                    "'): '" + row[feature_cols[j]] + "'");
            }
            values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = *v;
        }
        samples.push_back(std::move(s));
    }
    return FeatureMatrix(std::move(samples), std::move(descriptors), std::move(values));
}

FeatureMatrix load_feature_matrix(const std::filesystem::path& path, const CsvSchema& schema) {
    return parse_feature_csv(read_text_file(path), schema);
}

std::string feature_matrix_to_csv(const FeatureMatrix& m) {
    std::string out = "sample_id,batch_id";
    for (const auto& d : m.descriptors()) out += "," + d.name;
    out += "\n";
    for (std::size_t i = 0; i < m.n_samples(); ++i) {
        out += m.samples()[i].sample_id + "," + m.samples()[i].batch_id;
        for (std::size_t j = 0; j < m.n_features(); ++j) {
            out += "," + format_double(m.values()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        out += "\n";
    }
    return out;
}

std::map<std::string, SampleMeta> parse_metadata_csv(std::string_view text) {
    const auto rows = parse_csv_rows(text);
    if (rows.empty()) fail(ErrorCode::MissingColumn, "metadata CSV has no header row");
    const auto& header = rows.front();
    const std::size_t id_col = column_of(header, "sample_id");
    auto optional_col = [&](const char* name) -> std::optional<std::size_t> {
        const auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    };
    const auto age_col = optional_col("age_years");
    const auto sex_col = optional_col("sex");
    const auto surv_col = optional_col("survival_years");
    const auto event_col = optional_col("event_observed");
    const auto vol_col = optional_col("tumor_volume_cm3");
    const auto batch_col = optional_col("batch_id");

    std::map<std::string, SampleMeta> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size()) fail(ErrorCode::DimensionMismatch, "metadata row " + std::to_string(r) + " is ragged");
        SampleMeta s;
        s.sample_id = trim(row[id_col]);
        if (batch_col) s.batch_id = trim(row[*batch_col]);
        auto number_at = [&](std::optional<std::size_t> col, const char* what) -> std::optional<double> {
            if (!col || trim(row[*col]).empty()) return std::nullopt;
            const auto v = parse_number(row[*col]);
            if (!v) fail(ErrorCode::NonNumericCell, std::string("metadata row ") + std::to_string(r) + ", " + what + ": '" + row[*col] + "'");
            return v;
        };
        s.age_years = number_at(age_col, "age_years");
        s.survival_years = number_at(surv_col, "survival_years");
        s.tumor_volume_cm3 = number_at(vol_col, "tumor_volume_cm3");
        if (s.survival_years && *s.survival_years < 0.0) fail(ErrorCode::NegativeTime, "negative survival for '" + s.sample_id + "'");
        if (s.tumor_volume_cm3 && *s.tumor_volume_cm3 < 0.0) fail(ErrorCode::InvalidValue, "negative tumor volume for '" + s.sample_id + "'");
        if (sex_col && !trim(row[*sex_col]).empty()) {
            const std::string t = lower(trim(row[*sex_col]));
            if (t == "m" || t == "male") {
                s.sex = Sex::M;
            } else if (t == "f" || t == "female") {
                s.sex = Sex::F;
            } else {
                fail(ErrorCode::InvalidValue, "metadata row " + std::to_string(r) + ": unknown sex '" + row[*sex_col] + "'");
            }
        }
        if (event_col && !trim(row[*event_col]).empty()) {
            s.event_observed = parse_bool(row[*event_col]);
            if (!s.event_observed) fail(ErrorCode::InvalidValue, "metadata row " + std::to_string(r) + ": bad event_observed");
        }
        if (s.event_observed.has_value() != s.survival_years.has_value()) {
            fail(ErrorCode::InvalidValue, "sample '" + s.sample_id + "': event_observed present iff survival_years present");
        }
        if (!out.emplace(s.sample_id, s).second) fail(ErrorCode::DuplicateSampleId, "duplicate sample id '" + s.sample_id + "' in metadata");
    }
    return out;
}

std::map<std::string, SampleMeta> load_metadata(const std::filesystem::path& path) {
    return parse_metadata_csv(read_text_file(path));
}

FeatureMatrix attach_metadata(const FeatureMatrix& m, const std::map<std::string, SampleMeta>& meta) {
    std::vector<SampleMeta> samples = m.samples();
    for (auto& s : samples) {
        const auto it = meta.find(s.sample_id);
        if (it == meta.end()) continue;
        s.age_years = it->second.age_years;
        s.sex = it->second.sex;
        s.survival_years = it->second.survival_years;
        s.event_observed = it->second.event_observed;
        s.tumor_volume_cm3 = it->second.tumor_volume_cm3;
    }
    return FeatureMatrix(std::move(samples), m.descriptors(), m.values());
}

std::string metadata_to_csv(const std::vector<SampleMeta>& samples) {
    std::string out = "sample_id,batch_id,age_years,sex,survival_years,event_observed,tumor_volume_cm3\n";
    auto num = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const auto& s : samples) {
        out += s.sample_id + "," + s.batch_id + "," + num(s.age_years) + ",";
        if (s.sex) out += *s.sex == Sex::M ? "M" : "F";
        out += "," + num(s.survival_years) + ",";
        if (s.event_observed) out += *s.event_observed ? "1" : "0";
        out += "," + num(s.tumor_volume_cm3) + "\n";
    }
    return out;
}

ScorePanel parse_score_csv(std::string_view text, SignatureMatrix matrix) {
    const auto rows = parse_csv_rows(text);
    if (rows.empty()) fail(ErrorCode::MissingColumn, "score CSV has no header row");
    const auto& header = rows.front();
    const std::size_t id_col = column_of(header, "sample_id");
    ScorePanel panel;
    panel.signature_matrix = matrix;
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (c == id_col) continue;
        cols.push_back(c);
        panel.categories.push_back(trim(header[c]));
    }
    panel.scores.resize(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != header.size()) fail(ErrorCode::DimensionMismatch, "score row " + std::to_string(r) + " is ragged");
        panel.sample_ids.push_back(trim(row[id_col]));
        for (std::size_t j = 0; j < cols.size(); ++j) {
            const auto v = parse_number(row[cols[j]]);
            if (!v) {
                fail(ErrorCode::NonNumericCell, "score row " + std::to_string(r) + ", column " + std::to_string(cols[j] + 1) +
                                                    " ('" + header[cols[j]] + "'): '" + row[cols[j]] + "'");
            }
            panel.scores(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j)) = *v;
        }
    }
    panel.validate();
    return panel;
}

ScorePanel load_score_panel(const std::filesystem::path& path, SignatureMatrix matrix) {
    return parse_score_csv(read_text_file(path), matrix);
}

std::string score_panel_to_csv(const ScorePanel& panel) {
    std::string out = "sample_id";
    for (const auto& c : panel.categories) out += "," + c;
    out += "\n";
    for (std::size_t i = 0; i < panel.sample_ids.size(); ++i) {
        out += panel.sample_ids[i];
        for (std::size_t j = 0; j < panel.categories.size(); ++j) {
            out += "," + format_double(panel.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        }
        out += "\n";
    }
    return out;
}

std::pair<FeatureMatrix, FeatureMatrix> assemble_group(const std::map<std::string, FeatureMatrix>& cohorts,
                                                       const GroupSplit& split) {
    split.validate();
    auto fetch = [&](const std::string& id) -> FeatureMatrix {
        const auto it = cohorts.find(id);
        if (it == cohorts.end()) fail(ErrorCode::UnknownCohort, "cohort '" + id + "' not provided");
        return it->second.canonical();
    };
    const FeatureMatrix holdout = fetch(split.holdout_cohort);
    std::vector<FeatureMatrix> train_parts;
    for (const auto& id : split.train_cohorts) train_parts.push_back(fetch(id));

    const auto reference = holdout.feature_names();
    for (std::size_t k = 0; k < train_parts.size(); ++k) {
        if (train_parts[k].feature_names() != reference) {
            fail(ErrorCode::FeatureMismatch, "feature names of a training cohort differ from holdout '" + split.holdout_cohort + "'");
        }
    }
    std::vector<const FeatureMatrix*> ptrs;
    for (const auto& p : train_parts) ptrs.push_back(&p);
    FeatureMatrix train = concat_rows(ptrs);

    std::unordered_set<std::string> train_ids;
    for (const auto& s : train.samples()) train_ids.insert(s.sample_id);
    for (const auto& s : holdout.samples()) {
        if (train_ids.count(s.sample_id) != 0) {
            fail(ErrorCode::DuplicateSampleId, "sample '" + s.sample_id + "' appears in both training and holdout");
        }
    }
    return {std::move(train), holdout};
}

ScorePanel align_scores(const FeatureMatrix& matrix, const ScorePanel& panel) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < panel.sample_ids.size(); ++i) index.emplace(panel.sample_ids[i], i);
    ScorePanel out;
    out.signature_matrix = panel.signature_matrix;
    out.categories = panel.categories;
    out.scores.resize(static_cast<Eigen::Index>(matrix.n_samples()), panel.scores.cols());
    for (std::size_t i = 0; i < matrix.n_samples(); ++i) {
        const auto& id = matrix.samples()[i].sample_id;
        const auto it = index.find(id);
        if (it == index.end()) fail(ErrorCode::MissingScoreForSample, "no score row for sample '" + id + "'");
        out.sample_ids.push_back(id);
        out.scores.row(static_cast<Eigen::Index>(i)) = panel.scores.row(static_cast<Eigen::Index>(it->second));
    }
    return out;
}

}  // namespace xcohort::data
