#pragma once

// Group training (outlier gate -> ComBat -> z-score -> GMM labels -> LASSO-CV
// -> grid search -> refit -> freeze), frozen-pipeline persistence, prediction
// and hold-out evaluation.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "xcohort/core_data.hpp"
#include "xcohort/evaluation.hpp"
#include "xcohort/json_io.hpp"
#include "xcohort/labeling.hpp"
#include "xcohort/learners.hpp"
#include "xcohort/preprocess.hpp"

namespace xcohort::pipeline {

inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr int kFormatVersion = 1;

/// RFC 3339 UTC timestamp from SOURCE_DATE_EPOCH (0 when unset).
std::string build_timestamp();

struct Prediction {
    std::vector<std::string> sample_ids;
    std::vector<double> probability;
    std::vector<int> cls;
    std::vector<std::string> warnings;  // per row, empty when none
};

struct TrainedPipeline {
    std::string group_id;
    std::string category;
    learn::ModelKind model_kind = learn::ModelKind::SVM;
    data::SignatureMatrix signature_matrix = data::SignatureMatrix::PAN_CANCER;
    prep::FrozenTransform frozen;
    std::optional<learn::FittedLearner> svm;      // model_kind == SVM
    std::optional<learn::EnsembleModel> ensemble;  // model_kind == ENSEMBLE
    std::vector<learn::SearchReport> search;       // one per component learner
    label::GmmModel labeling;
    Json selection;
    std::string created_at;
    std::string tool_version = kToolVersion;
    std::map<std::string, std::string> train_cohort_fingerprints;  // cohort -> sample-set fingerprint
    std::set<std::string> train_batches;

    /// "SVM_pan", "ENS_gbm", ...
    std::string model_id() const;

    Prediction predict(const data::FeatureMatrix& m,
                       prep::UnknownBatchPolicy policy = prep::UnknownBatchPolicy::STANDARDIZE_ONLY) const;
};

Json to_json(const TrainedPipeline& p);
TrainedPipeline pipeline_from_json(const Json& j);
std::string serialize(const TrainedPipeline& p);
TrainedPipeline load_pipeline(const std::filesystem::path& path);

std::string predictions_to_csv(const Prediction& p);

struct TrainConfig {
    std::string group_id;
    std::map<std::string, std::filesystem::path> cohort_files;
    std::vector<std::string> train_cohorts;
    std::string holdout_cohort;
    std::filesystem::path score_file;
    data::SignatureMatrix signature_matrix = data::SignatureMatrix::PAN_CANCER;
    std::uint64_t seed = 0;
    std::vector<learn::ModelKind> model_kinds{learn::ModelKind::SVM, learn::ModelKind::ENSEMBLE};
    std::vector<std::string> categories;  // empty: every category in the score file
    bool harmonize = true;
    bool outlier_gate = true;
    int gate_components = 2;
    double gate_alpha = 0.01;
    int cv_folds = 5;
    std::filesystem::path output_dir = ".";

    /// Rejects a holdout that is also a training cohort (by name or file).
    void validate() const;
};

/// Relative paths resolve against base_dir.
TrainConfig train_config_from_json(const Json& j, const std::filesystem::path& base_dir = {});
Json to_json(const TrainConfig& c);

struct SkippedModel {
    std::string category;
    std::string model_kind;
    std::string stage;
    ErrorCode code = ErrorCode::Internal;
    std::string reason;
};

struct TrainOutcome {
    std::vector<TrainedPipeline> pipelines;
    std::vector<SkippedModel> skipped;
    std::optional<prep::HotellingGate> gate;
    int n_train_samples = 0;
};

/// Loads only the training cohort files. Errors raised before any model is
/// fitted carry the stage name in their message.
TrainOutcome train_group(const TrainConfig& config);

/// File name used by the CLI for a pipeline: <group>_<category>_<kind>.pipeline.json
std::string pipeline_file_name(const TrainedPipeline& p);

/// Fails with CohortLeakage when any holdout batch or sample set was seen at
/// training time, and AlignmentError when truth does not cover the holdout.
eval::HoldoutReport evaluate_holdout(const TrainedPipeline& p, const data::FeatureMatrix& holdout,
                                     const label::BinaryLabelSet& truth,
                                     prep::UnknownBatchPolicy policy = prep::UnknownBatchPolicy::STANDARDIZE_ONLY);

struct RunManifest {
    std::string subcommand;
    std::map<std::string, std::string> flags;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> inputs;   // path -> content hash
    std::map<std::string, std::string> outputs;  // path -> content hash
    std::string tool_version = kToolVersion;

    void add_input(const std::filesystem::path& path);
    void add_output(const std::filesystem::path& path);
};

Json to_json(const RunManifest& m);
std::string file_hash(const std::filesystem::path& path);

}  // namespace xcohort::pipeline
