#include "xcohort/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <unordered_map>

#include "xcohort/error.hpp"
#include "xcohort/feature_select.hpp"
#include "xcohort/rng.hpp"

namespace xcohort::pipeline {

namespace {

enum : std::uint64_t { kStageLasso = 1, kStageSearch = 2, kStageFinal = 3 };

const char* matrix_suffix(data::SignatureMatrix m) { return m == data::SignatureMatrix::GBM ? "gbm" : "pan"; }

std::uint64_t category_index(data::SignatureMatrix m, const std::string& category) {
    const auto& cats = data::categories_for(m);
    const auto it = std::find(cats.begin(), cats.end(), category);
    if (it == cats.end()) fail(ErrorCode::InvalidValue, "category '" + category + "' is not part of the signature matrix");
    return static_cast<std::uint64_t>(it - cats.begin());
}

[[noreturn]] void rethrow_with_stage(const Error& e, const std::string& stage) {
    std::string msg = e.what();
    const auto colon = msg.find(": ");
    if (colon != std::string::npos) msg = msg.substr(colon + 2);
    fail(e.code(), "[" + stage + "] " + msg);
}

template <typename F>
auto staged(const std::string& stage, F&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        rethrow_with_stage(e, stage);
    }
}

std::vector<int> labels_for(const label::BinaryLabelSet& set, const data::FeatureMatrix& m) {
    std::unordered_map<std::string, int> by_id;
    for (std::size_t i = 0; i < set.sample_ids.size(); ++i) by_id.emplace(set.sample_ids[i], set.labels[i]);
    std::vector<int> out;
    out.reserve(m.n_samples());
    for (const auto& s : m.samples()) {
        const auto it = by_id.find(s.sample_id);
        if (it == by_id.end()) fail(ErrorCode::AlignmentError, "no label for sample '" + s.sample_id + "'");
        out.push_back(it->second);
    }
    return out;
}

// Empty LASSO support: fall back to the largest lambda on the path whose
// full-data fit has any nonzero coefficient.
std::vector<std::size_t> first_nonempty_support(const Eigen::MatrixXd& X, std::span<const int> y,
                                                const Eigen::VectorXd& lambdas) {
    Eigen::VectorXd yv(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) yv[static_cast<Eigen::Index>(i)] = y[i];
    for (const auto& beta : select::lasso_path_fit(X, yv, lambdas)) {
        std::vector<std::size_t> support;
        for (Eigen::Index j = 0; j < beta.size(); ++j) {
            if (beta[j] != 0.0) support.push_back(static_cast<std::size_t>(j));
        }
        if (!support.empty()) return support;
    }
    return {};
}

}  // namespace

std::string build_timestamp() {
    long long epoch = 0;
    if (const char* env = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (end != env && *end == '\0' && v >= 0) epoch = v;
    }
    const std::time_t t = static_cast<std::time_t>(epoch);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string TrainedPipeline::model_id() const {
    return std::string(model_kind == learn::ModelKind::SVM ? "SVM" : "ENS") + "_" + matrix_suffix(signature_matrix);
}

Prediction TrainedPipeline::predict(const data::FeatureMatrix& m, prep::UnknownBatchPolicy policy) const {
    Prediction out;
    out.sample_ids = m.sample_ids();
    out.warnings.assign(m.n_samples(), "");
    if (frozen.combat) {
        for (std::size_t i = 0; i < m.n_samples(); ++i) {
            const auto& batch = m.samples()[i].batch_id;
            if (!frozen.combat->knows_batch(batch)) {
                if (policy == prep::UnknownBatchPolicy::REJECT) {
                    fail(ErrorCode::UnknownBatch, "batch '" + batch + "' was not seen at ComBat fit");
                }
                out.warnings[i] = "unknown_batch:" + batch + ":standardize_only";
            }
        }
    }
    const data::FeatureMatrix design = prep::apply_frozen(frozen, m, policy);
    Eigen::VectorXd proba;
    if (model_kind == learn::ModelKind::SVM) {
        if (!svm) fail(ErrorCode::SchemaError, "SVM pipeline has no model");
        proba = svm->predict_proba(design.values());
    } else {
        if (!ensemble) fail(ErrorCode::SchemaError, "ensemble pipeline has no model");
        proba = ensemble->predict_proba(design.values());
    }
    for (Eigen::Index i = 0; i < proba.size(); ++i) {
        out.probability.push_back(proba[i]);
        out.cls.push_back(learn::class_of(proba[i]));
    }
    return out;
}

Json to_json(const TrainedPipeline& p) {
    Json search = Json::array();
    for (const auto& s : p.search) search.push_back(learn::to_json(s));
    Json model = p.model_kind == learn::ModelKind::SVM ? learn::to_json(*p.svm) : learn::to_json(*p.ensemble);
    return Json{{"format_version", kFormatVersion},
                {"group_id", p.group_id},
                {"category", p.category},
                {"model_kind", learn::to_string(p.model_kind)},
                {"signature_matrix", std::string(data::to_string(p.signature_matrix))},
                {"frozen", prep::to_json(p.frozen)},
                {"model", model},
                {"search", search},
                {"labeling", label::to_json(p.labeling)},
                {"selection", p.selection},
                {"created_at", p.created_at},
                {"tool_version", p.tool_version},
                {"train_cohort_fingerprints", p.train_cohort_fingerprints},
                {"train_batches", p.train_batches}};
}

TrainedPipeline pipeline_from_json(const Json& j) {
    try {
        const int version = require(j, "format_version").get<int>();
        if (version != kFormatVersion) fail(ErrorCode::SchemaError, "unsupported pipeline format_version " + std::to_string(version));
        TrainedPipeline p;
        p.group_id = require(j, "group_id").get<std::string>();
        p.category = require(j, "category").get<std::string>();
        p.model_kind = learn::model_kind_from_string(require(j, "model_kind").get<std::string>());
        p.signature_matrix = data::signature_matrix_from_string(require(j, "signature_matrix").get<std::string>());
        p.frozen = prep::frozen_from_json(require(j, "frozen"));
        if (p.model_kind == learn::ModelKind::SVM) {
            p.svm = learn::fitted_from_json(require(j, "model"));
        } else {
            p.ensemble = learn::ensemble_from_json(require(j, "model"));
        }
        for (const auto& s : require(j, "search")) p.search.push_back(learn::search_from_json(s));
        p.labeling = label::gmm_from_json(require(j, "labeling"));
        p.selection = require(j, "selection");
        p.created_at = require(j, "created_at").get<std::string>();
        p.tool_version = require(j, "tool_version").get<std::string>();
        p.train_cohort_fingerprints = require(j, "train_cohort_fingerprints").get<std::map<std::string, std::string>>();
        p.train_batches = require(j, "train_batches").get<std::set<std::string>>();
        return p;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::SchemaError, std::string("malformed pipeline JSON: ") + e.what());
    }
}

std::string serialize(const TrainedPipeline& p) { return canonical_dump(to_json(p)); }

TrainedPipeline load_pipeline(const std::filesystem::path& path) { return pipeline_from_json(read_json_file(path)); }

std::string predictions_to_csv(const Prediction& p) {
    std::string out = "sample_id,probability,class,warnings\n";
    for (std::size_t i = 0; i < p.sample_ids.size(); ++i) {
        out += p.sample_ids[i] + "," + format_double(p.probability[i]) + "," + std::to_string(p.cls[i]) + "," + p.warnings[i] + "\n";
    }
    return out;
}

void TrainConfig::validate() const {
    if (group_id.empty()) fail(ErrorCode::ConfigInvalid, "group_id is required");
    if (train_cohorts.empty()) fail(ErrorCode::ConfigInvalid, "train_cohorts must not be empty");
    if (holdout_cohort.empty()) fail(ErrorCode::ConfigInvalid, "holdout_cohort is required");
    if (std::find(train_cohorts.begin(), train_cohorts.end(), holdout_cohort) != train_cohorts.end()) {
        fail(ErrorCode::CohortLeakage, "holdout cohort '" + holdout_cohort + "' is listed among the training cohorts");
    }
    std::set<std::string> seen;
    for (const auto& c : train_cohorts) {
        if (!seen.insert(c).second) fail(ErrorCode::ConfigInvalid, "train cohort '" + c + "' listed twice");
        if (cohort_files.count(c) == 0) fail(ErrorCode::UnknownCohort, "no file given for train cohort '" + c + "'");
    }
    if (const auto it = cohort_files.find(holdout_cohort); it != cohort_files.end()) {
        const auto holdout_path = std::filesystem::absolute(it->second).lexically_normal();
        for (const auto& c : train_cohorts) {
            if (std::filesystem::absolute(cohort_files.at(c)).lexically_normal() == holdout_path) {
                fail(ErrorCode::CohortLeakage, "train cohort '" + c + "' reads the holdout file");
            }
        }
    }
    if (model_kinds.empty()) fail(ErrorCode::ConfigInvalid, "model_kinds must not be empty");
    if (cv_folds < 2) fail(ErrorCode::ConfigInvalid, "cv_folds must be >= 2");
    if (gate_components < 1 || !(gate_alpha > 0.0 && gate_alpha < 1.0)) fail(ErrorCode::ConfigInvalid, "invalid outlier gate settings");
}

TrainConfig train_config_from_json(const Json& j, const std::filesystem::path& base_dir) {
    if (!j.is_object()) fail(ErrorCode::ConfigInvalid, "train config must be a JSON object");
    static const std::set<std::string> known = {"group_id",       "cohort_files",    "train_cohorts", "holdout_cohort",
                                                "score_file",     "signature_matrix", "seed",          "model_kinds",
                                                "categories",     "harmonize",        "outlier_gate",  "gate_components",
                                                "gate_alpha",     "cv_folds",         "output_dir"};
    for (const auto& [key, value] : j.items()) {
        if (known.count(key) == 0) fail(ErrorCode::ConfigInvalid, "unknown train config key '" + key + "'");
    }
    const auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
    };
    TrainConfig c;
    try {
        c.group_id = require(j, "group_id").get<std::string>();
        for (const auto& [name, path] : require(j, "cohort_files").items()) c.cohort_files[name] = resolve(path.get<std::string>());
        c.train_cohorts = require(j, "train_cohorts").get<std::vector<std::string>>();
        c.holdout_cohort = require(j, "holdout_cohort").get<std::string>();
        c.score_file = resolve(require(j, "score_file").get<std::string>());
        c.signature_matrix = data::signature_matrix_from_string(require(j, "signature_matrix").get<std::string>());
        c.seed = require(j, "seed").get<std::uint64_t>();
        if (j.contains("model_kinds")) {
            c.model_kinds.clear();
            for (const auto& k : j.at("model_kinds")) c.model_kinds.push_back(learn::model_kind_from_string(k.get<std::string>()));
        }
        if (j.contains("categories")) c.categories = j.at("categories").get<std::vector<std::string>>();
        if (j.contains("harmonize")) c.harmonize = j.at("harmonize").get<bool>();
        if (j.contains("outlier_gate")) c.outlier_gate = j.at("outlier_gate").get<bool>();
        if (j.contains("gate_components")) c.gate_components = j.at("gate_components").get<int>();
        if (j.contains("gate_alpha")) c.gate_alpha = j.at("gate_alpha").get<double>();
        if (j.contains("cv_folds")) c.cv_folds = j.at("cv_folds").get<int>();
        if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigInvalid, std::string("train config: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SchemaError) fail(ErrorCode::ConfigInvalid, e.what());
        throw;
    }
    c.validate();
    return c;
}

Json to_json(const TrainConfig& c) {
    Json files = Json::object();
    for (const auto& [name, path] : c.cohort_files) files[name] = path.string();
    std::vector<std::string> kinds;
    for (auto k : c.model_kinds) kinds.emplace_back(learn::to_string(k));
    return Json{{"group_id", c.group_id},
                {"cohort_files", files},
                {"train_cohorts", c.train_cohorts},
                {"holdout_cohort", c.holdout_cohort},
                {"score_file", c.score_file.string()},
                {"signature_matrix", std::string(data::to_string(c.signature_matrix))},
                {"seed", c.seed},
                {"model_kinds", kinds},
                {"categories", c.categories},
                {"harmonize", c.harmonize},
                {"outlier_gate", c.outlier_gate},
                {"gate_components", c.gate_components},
                {"gate_alpha", c.gate_alpha},
                {"cv_folds", c.cv_folds},
                {"output_dir", c.output_dir.string()}};
}

TrainOutcome train_group(const TrainConfig& config) {
    config.validate();
    TrainOutcome outcome;

    std::map<std::string, data::FeatureMatrix> cohorts;
    std::map<std::string, std::string> fingerprints;
    std::set<std::string> batches;
    for (const auto& name : config.train_cohorts) {
        data::FeatureMatrix m = staged("load:" + name, [&] { return data::load_feature_matrix(config.cohort_files.at(name)); });
        for (const auto& b : m.distinct_batches()) {
            if (b == config.holdout_cohort) {
                fail(ErrorCode::CohortLeakage, "train cohort '" + name + "' contains samples of holdout batch '" + b + "'");
            }
            batches.insert(b);
        }
        fingerprints[name] = prep::sample_set_fingerprint(m);
        cohorts.emplace(name, std::move(m));
    }
    std::vector<const data::FeatureMatrix*> parts;
    for (const auto& name : config.train_cohorts) parts.push_back(&cohorts.at(name));
    data::FeatureMatrix train = staged("assemble", [&] { return data::concat_rows(parts); });

    std::optional<prep::HotellingGate> gate;
    if (config.outlier_gate) {
        gate = staged("outlier_gate", [&] { return prep::hotelling_gate(train, config.gate_components, config.gate_alpha); });
        train = prep::remove_flagged(train, *gate);
    }
    outcome.gate = gate;
    outcome.n_train_samples = static_cast<int>(train.n_samples());

    std::optional<prep::CombatParams> combat;
    data::FeatureMatrix harmonized;
    if (config.harmonize) {
        combat = staged("harmonize", [&] { return prep::fit_combat(train); });
        harmonized = prep::apply_combat(*combat, train);
    } else {
        harmonized = prep::drop_zero_variance(train);
    }
    const prep::ZScoreParams zscore = staged("zscore", [&] { return prep::fit_zscore(harmonized); });
    const data::FeatureMatrix z = prep::apply_zscore(zscore, harmonized);
    const std::vector<std::string> input_features = combat ? combat->feature_names : train.feature_names();
    std::unordered_map<std::string, std::size_t> input_index;
    for (std::size_t j = 0; j < input_features.size(); ++j) input_index.emplace(input_features[j], j);

    const data::ScorePanel panel = staged("scores", [&] {
        return data::align_scores(train, data::load_score_panel(config.score_file, config.signature_matrix));
    });
    const label::PanelLabels labels = staged("binarize", [&] { return label::binarize_panel(panel); });
    for (const auto& s : labels.skipped) {
        for (auto k : config.model_kinds) outcome.skipped.push_back({s.category, learn::to_string(k), "binarize", s.code, s.reason});
    }

    const std::string created_at = build_timestamp();
    for (const auto& set : labels.sets) {
        if (!config.categories.empty() &&
            std::find(config.categories.begin(), config.categories.end(), set.category) == config.categories.end()) {
            continue;
        }
        const std::uint64_t cat = category_index(config.signature_matrix, set.category);
        const std::vector<int> y = labels_for(set, z);

        std::vector<std::size_t> selected;
        Json selection;
        try {
            const std::uint64_t lasso_seed = derive_stream(config.seed, {cat, kStageLasso});
            select::SelectionResult sel = select::lasso_cv_select(z.values(), y, config.cv_folds, lasso_seed);
            selected = sel.selected;
            bool fallback = false;
            if (selected.empty()) {
                selected = first_nonempty_support(z.values(), y, sel.path.lambdas);
                fallback = true;
            }
            if (selected.empty()) fail(ErrorCode::SingleClassLabels, "LASSO path selected no feature at any lambda");
            std::vector<std::string> names;
            for (auto idx : selected) names.push_back(z.descriptors()[idx].name);
            selection = Json{{"lambda_star", sel.path.lambda_star},
                             {"star_index", sel.path.star_index},
                             {"fold_seed", lasso_seed},
                             {"selected_names", names},
                             {"fallback_first_nonempty", fallback}};
        } catch (const Error& e) {
            for (auto k : config.model_kinds) outcome.skipped.push_back({set.category, learn::to_string(k), "select", e.code(), e.what()});
            continue;
        }

        // selected indexes the z-scored columns; the frozen transform indexes input_features.
        std::vector<std::size_t> frozen_selected;
        for (auto idx : selected) frozen_selected.push_back(input_index.at(z.descriptors()[idx].name));
        Eigen::MatrixXd X(z.values().rows(), static_cast<Eigen::Index>(selected.size()));
        for (std::size_t c = 0; c < selected.size(); ++c) X.col(static_cast<Eigen::Index>(c)) = z.values().col(static_cast<Eigen::Index>(selected[c]));

        for (auto kind : config.model_kinds) {
            TrainedPipeline p;
            p.group_id = config.group_id;
            p.category = set.category;
            p.model_kind = kind;
            p.signature_matrix = config.signature_matrix;
            p.labeling = set.model;
            p.selection = selection;
            p.created_at = created_at;
            p.train_cohort_fingerprints = fingerprints;
            p.train_batches = batches;
            try {
                p.frozen = prep::freeze(gate, combat, zscore, frozen_selected, input_features);
                const auto kk = static_cast<std::uint64_t>(kind);
                const auto search_fit = [&](learn::LearnerKind lk) {
                    const auto lku = static_cast<std::uint64_t>(lk);
                    learn::SearchReport report =
                        learn::grid_search_cv(X, y, lk, config.cv_folds, derive_stream(config.seed, {cat, kStageSearch, kk, lku}));
                    learn::FittedLearner fitted =
                        learn::fit_final(X, y, report.chosen_point(), derive_stream(config.seed, {cat, kStageFinal, kk, lku}));
                    p.search.push_back(std::move(report));
                    return fitted;
                };
                if (kind == learn::ModelKind::SVM) {
                    p.svm = search_fit(learn::LearnerKind::SVM);
                } else {
                    learn::EnsembleModel ens;
                    ens.svm = *search_fit(learn::LearnerKind::SVM).svm;
                    ens.rf = *search_fit(learn::LearnerKind::RF).rf;
                    ens.gb = *search_fit(learn::LearnerKind::GB).gb;
                    p.ensemble = std::move(ens);
                }
            } catch (const Error& e) {
                outcome.skipped.push_back({set.category, learn::to_string(kind), "train", e.code(), e.what()});
                continue;
            }
            outcome.pipelines.push_back(std::move(p));
        }
    }
    return outcome;
}

std::string pipeline_file_name(const TrainedPipeline& p) {
    return p.group_id + "_" + p.category + "_" + learn::to_string(p.model_kind) + ".pipeline.json";
}

eval::HoldoutReport evaluate_holdout(const TrainedPipeline& p, const data::FeatureMatrix& holdout, const label::BinaryLabelSet& truth,
                                     prep::UnknownBatchPolicy policy) {
    for (const auto& b : holdout.distinct_batches()) {
        if (p.train_batches.count(b) != 0) fail(ErrorCode::CohortLeakage, "holdout batch '" + b + "' was part of the training data");
    }
    const std::string fp = prep::sample_set_fingerprint(holdout);
    for (const auto& [cohort, train_fp] : p.train_cohort_fingerprints) {
        if (train_fp == fp) fail(ErrorCode::CohortLeakage, "holdout sample set matches training cohort '" + cohort + "'");
    }
    if (truth.category != p.category) {
        fail(ErrorCode::AlignmentError, "truth category '" + truth.category + "' differs from pipeline category '" + p.category + "'");
    }
    const std::vector<int> y = labels_for(truth, holdout);
    const Prediction pred = p.predict(holdout, policy);

    eval::HoldoutReport r;
    r.group_id = p.group_id;
    r.category = p.category;
    r.signature_matrix = std::string(data::to_string(p.signature_matrix));
    r.model_id = p.model_id();
    r.metrics = eval::compute_metrics(y, pred.cls);
    std::set<std::string> warnings;
    for (const auto& w : pred.warnings) {
        if (!w.empty()) warnings.insert(w);
    }
    r.warnings.assign(warnings.begin(), warnings.end());
    return r;
}

std::string file_hash(const std::filesystem::path& path) { return hex64(fnv1a64(read_text_file(path))); }

void RunManifest::add_input(const std::filesystem::path& path) { inputs[path.string()] = file_hash(path); }
void RunManifest::add_output(const std::filesystem::path& path) { outputs[path.string()] = file_hash(path); }

Json to_json(const RunManifest& m) {
    return Json{{"subcommand", m.subcommand},
                {"flags", m.flags},
                {"seed", m.seed},
                {"inputs", m.inputs},
                {"outputs", m.outputs},
                {"tool_version", m.tool_version}};
}

}  // namespace xcohort::pipeline
