#pragma once

// Data model for multi-cohort feature matrices: samples with per-sample
// batch (cohort/site) ids, per-feature provenance descriptors, score panels
// and the train/holdout group assembly.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace xcohort::data {

enum class Sequence { T1, T1CE, T2, FLAIR, OTHER };
enum class Region { NECROTIC_CORE, ENHANCING, EDEMA, OTHER };
enum class FeatureClass { SHAPE, FIRSTORDER, GLCM, GLSZM, GLDM, NGTDM, GLRLM, OTHER };
enum class Sex { M, F };
enum class SignatureMatrix { PAN_CANCER, GBM };

std::string_view to_string(Sequence s);
std::string_view to_string(Region r);
std::string_view to_string(FeatureClass c);
std::string_view to_string(SignatureMatrix m);
SignatureMatrix signature_matrix_from_string(std::string_view s);

/// Feature names follow `<sequence>_<region>_<class>_<feature>`. Tokens are
/// matched case-insensitively; anything unrecognized maps to OTHER. The
/// region may be spelled `necrotic_core` (two tokens), `necrotic`, `ncr`,
/// `enhancing`, `et`, `edema` or `ed`.
struct FeatureDescriptor {
    std::string name;
    Sequence sequence = Sequence::OTHER;
    Region region = Region::OTHER;
    FeatureClass feature_class = FeatureClass::OTHER;

    static FeatureDescriptor parse(std::string_view name);
    bool operator==(const FeatureDescriptor&) const = default;
};

struct SampleMeta {
    std::string sample_id;
    std::string batch_id;
    std::optional<double> age_years;
    std::optional<Sex> sex;
    std::optional<double> survival_years;
    std::optional<bool> event_observed;
    std::optional<double> tumor_volume_cm3;

    bool operator==(const SampleMeta&) const = default;
};

/// Samples x features table. Immutable once constructed; the constructor
/// enforces shape agreement, finite values, unique sample ids and unique
/// non-empty feature names.
class FeatureMatrix {
public:
    FeatureMatrix() = default;
    FeatureMatrix(std::vector<SampleMeta> samples, std::vector<FeatureDescriptor> descriptors, Eigen::MatrixXd values);

    std::size_t n_samples() const { return samples_.size(); }
    std::size_t n_features() const { return descriptors_.size(); }
    const std::vector<SampleMeta>& samples() const { return samples_; }
    const std::vector<FeatureDescriptor>& descriptors() const { return descriptors_; }
    const Eigen::MatrixXd& values() const { return values_; }

    std::vector<std::string> feature_names() const;
    std::vector<std::string> sample_ids() const;
    std::vector<std::string> batch_ids() const;
    std::set<std::string> distinct_batches() const;
    std::optional<std::size_t> feature_index(std::string_view name) const;

    /// Columns with zero spread. Retained in the matrix; preprocess decides.
    std::vector<std::size_t> zero_variance_columns() const;

    FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
    FeatureMatrix select_columns(std::span<const std::size_t> cols) const;
    /// Columns looked up by name, in the given order. Missing names raise
    /// FeatureMismatch naming the first absent column.
    FeatureMatrix select_features(const std::vector<std::string>& names) const;
    FeatureMatrix with_values(Eigen::MatrixXd values) const;
    FeatureMatrix with_descriptors_and_values(std::vector<FeatureDescriptor> descriptors, Eigen::MatrixXd values) const;
    FeatureMatrix canonical() const;

private:
    std::vector<SampleMeta> samples_;
    std::vector<FeatureDescriptor> descriptors_;
    Eigen::MatrixXd values_;
};

FeatureMatrix concat_rows(const std::vector<const FeatureMatrix*>& parts);

/// Per-sample non-negative scores for named categories.
struct ScorePanel {
    SignatureMatrix signature_matrix = SignatureMatrix::PAN_CANCER;
    std::vector<std::string> categories;
    std::vector<std::string> sample_ids;
    Eigen::MatrixXd scores;  // n_samples x n_categories

    void validate() const;
    std::optional<std::size_t> category_index(std::string_view name) const;
};

/// Category names per signature matrix; 11 + 6 = 17 labels with 5 shared names.
const std::vector<std::string>& pan_cancer_categories();
const std::vector<std::string>& gbm_categories();
const std::vector<std::string>& categories_for(SignatureMatrix m);

struct GroupSplit {
    std::string group_id;
    std::set<std::string> train_cohorts;
    std::string holdout_cohort;

    void validate() const;
};

/// The three cross-cohort combinations: G1 holds out IvyGAP, G2 TCGA, G3 CPTAC.
std::vector<GroupSplit> standard_group_splits();

struct CsvSchema {
    std::string sample_id_column = "sample_id";
    std::string batch_id_column = "batch_id";
    std::vector<std::string> ignore_columns;
};

FeatureMatrix parse_feature_csv(std::string_view text, const CsvSchema& schema = {});
FeatureMatrix load_feature_matrix(const std::filesystem::path& path, const CsvSchema& schema = {});
std::string feature_matrix_to_csv(const FeatureMatrix& m);

/// Metadata CSV keyed by sample_id: age_years, sex, survival_years,
/// event_observed, tumor_volume_cm3 (any subset, empty cells allowed).
std::map<std::string, SampleMeta> parse_metadata_csv(std::string_view text);
std::map<std::string, SampleMeta> load_metadata(const std::filesystem::path& path);
FeatureMatrix attach_metadata(const FeatureMatrix& m, const std::map<std::string, SampleMeta>& meta);
std::string metadata_to_csv(const std::vector<SampleMeta>& samples);

ScorePanel parse_score_csv(std::string_view text, SignatureMatrix matrix);
ScorePanel load_score_panel(const std::filesystem::path& path, SignatureMatrix matrix);
std::string score_panel_to_csv(const ScorePanel& panel);

std::pair<FeatureMatrix, FeatureMatrix> assemble_group(const std::map<std::string, FeatureMatrix>& cohorts,
                                                       const GroupSplit& split);

ScorePanel align_scores(const FeatureMatrix& matrix, const ScorePanel& panel);

// Minimal RFC 4180 reader shared by the CSV loaders.
std::vector<std::vector<std::string>> parse_csv_rows(std::string_view text);
std::optional<double> parse_number(std::string_view cell);

}  // namespace xcohort::data
