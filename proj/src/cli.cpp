#include "xcohort/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <unordered_map>

#include "xcohort/cohort_stats.hpp"
#include "xcohort/core_data.hpp"
#include "xcohort/error.hpp"
#include "xcohort/evaluation.hpp"
#include "xcohort/feature_select.hpp"
#include "xcohort/json_io.hpp"
#include "xcohort/labeling.hpp"
#include "xcohort/pipeline.hpp"
#include "xcohort/preprocess.hpp"
#include "xcohort/rng.hpp"
#include "xcohort/synth.hpp"

namespace fs = std::filesystem;

namespace xcohort::cli {

namespace {

using pipeline::RunManifest;

void write_manifest(RunManifest& manifest, const fs::path& path) {
    write_text_file(path, canonical_dump(to_json(manifest)) + "\n");
}

fs::path manifest_path_for(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

void write_output(RunManifest& manifest, const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_text_file(path, content);
    manifest.add_output(path);
}

data::FeatureMatrix load_and_concat(const std::vector<std::string>& files, RunManifest& manifest) {
    std::vector<data::FeatureMatrix> parts;
    for (const auto& f : files) {
        parts.push_back(data::load_feature_matrix(f));
        manifest.add_input(f);
    }
    std::vector<const data::FeatureMatrix*> ptrs;
    for (const auto& p : parts) ptrs.push_back(&p);
    return data::concat_rows(ptrs);
}

std::vector<int> align_labels(const label::BinaryLabelSet& set, const std::vector<std::string>& ids) {
    std::unordered_map<std::string, int> by_id;
    for (std::size_t i = 0; i < set.sample_ids.size(); ++i) by_id.emplace(set.sample_ids[i], set.labels[i]);
    std::vector<int> out;
    for (const auto& id : ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) fail(ErrorCode::AlignmentError, "no '" + set.category + "' label for sample '" + id + "'");
        out.push_back(it->second);
    }
    return out;
}

const label::BinaryLabelSet& require_category(const label::PanelLabels& labels, const std::string& category) {
    const auto* set = labels.find(category);
    if (set == nullptr) fail(ErrorCode::AlignmentError, "labels file has no column for category '" + category + "'");
    return *set;
}

struct PredictionRows {
    std::vector<std::string> sample_ids;
    std::vector<double> probability;
    std::vector<int> cls;
};

PredictionRows parse_predictions(const std::string& path) {
    const auto rows = data::parse_csv_rows(read_text_file(path));
    if (rows.empty() || rows[0].size() < 3 || rows[0][0] != "sample_id" || rows[0][1] != "probability" || rows[0][2] != "class") {
        fail(ErrorCode::MissingColumn, "predictions file '" + path + "' needs sample_id,probability,class columns");
    }
    PredictionRows out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() < 3) fail(ErrorCode::SchemaError, "short row in predictions file '" + path + "'");
        const auto p = data::parse_number(rows[r][1]);
        if (!p) fail(ErrorCode::NonNumericCell, "non-numeric probability in '" + path + "'");
        if (rows[r][2] != "0" && rows[r][2] != "1") fail(ErrorCode::InvalidValue, "class must be 0 or 1 in '" + path + "'");
        out.sample_ids.push_back(rows[r][0]);
        out.probability.push_back(*p);
        out.cls.push_back(rows[r][2] == "1" ? 1 : 0);
    }
    return out;
}

prep::UnknownBatchPolicy parse_policy(const std::string& s) { return prep::unknown_batch_policy_from_string(s); }

// ---------------------------------------------------------------- commands

struct SimulateArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs& a, RunManifest& manifest, std::ostream& out) {
    synth::SynthConfig cfg;
    if (!a.config.empty()) {
        cfg = synth::config_from_json(read_json_file(a.config));
        manifest.add_input(a.config);
    }
    if (a.seed) cfg.seed = *a.seed;
    manifest.seed = cfg.seed;
    const synth::SynthOutput gen = synth::generate(cfg);
    const fs::path dir(a.out);
    fs::create_directories(dir);

    Json cohort_files = Json::object();
    std::vector<std::string> train;
    std::vector<data::SampleMeta> all_meta;
    for (int s = 0; s < cfg.n_sites; ++s) {
        const std::string site = cfg.site_name(s);
        const auto& m = gen.cohorts.at(site);
        write_output(manifest, dir / (site + ".csv"), data::feature_matrix_to_csv(m));
        cohort_files[site] = site + ".csv";
        if (s + 1 < cfg.n_sites) train.push_back(site);
        all_meta.insert(all_meta.end(), m.samples().begin(), m.samples().end());
    }
    write_output(manifest, dir / "scores.csv", data::score_panel_to_csv(gen.panel));
    write_output(manifest, dir / "metadata.csv", data::metadata_to_csv(all_meta));
    write_output(manifest, dir / "truth.json", canonical_dump(synth::to_json(gen.truth)) + "\n");
    write_output(manifest, dir / "synth_config.json", canonical_dump(synth::to_json(cfg)) + "\n");
    if (cfg.n_sites >= 2) {
        const Json group{{"group_id", "G1"},
                         {"cohort_files", cohort_files},
                         {"train_cohorts", train},
                         {"holdout_cohort", cfg.site_name(cfg.n_sites - 1)},
                         {"score_file", "scores.csv"},
                         {"signature_matrix", std::string(data::to_string(cfg.signature_matrix))},
                         {"seed", cfg.seed},
                         {"output_dir", "pipelines"}};
        write_output(manifest, dir / "group_config.json", canonical_dump(group) + "\n");
    }
    write_manifest(manifest, dir / "manifest.json");
    out << "simulated " << cfg.n_sites << " sites x " << cfg.n_per_site << " samples into " << dir.string() << "\n";
    return 0;
}

struct OutliersArgs {
    std::vector<std::string> inputs;
    int k = 2;
    double alpha = 0.01;
    std::string out;
    std::string filtered;
};

int cmd_outliers(const OutliersArgs& a, RunManifest& manifest, std::ostream& out) {
    const data::FeatureMatrix m = load_and_concat(a.inputs, manifest);
    const prep::HotellingGate gate = prep::hotelling_gate(m, a.k, a.alpha);
    Json t2 = Json::object();
    const auto ids = m.sample_ids();
    for (std::size_t i = 0; i < ids.size(); ++i) t2[ids[i]] = gate.fit_t2[static_cast<Eigen::Index>(i)];
    const Json report{{"gate", prep::to_json(gate)}, {"flagged", gate.flagged}, {"t2", t2}, {"n", m.n_samples()}};
    write_output(manifest, a.out, canonical_dump(report) + "\n");
    if (!a.filtered.empty()) write_output(manifest, a.filtered, data::feature_matrix_to_csv(prep::remove_flagged(m, gate)));
    write_manifest(manifest, manifest_path_for(a.out));
    out << gate.flagged.size() << " of " << m.n_samples() << " samples outside the T2 threshold " << format_double(gate.t2_critical) << "\n";
    return 0;
}

struct HarmonizeArgs {
    std::vector<std::string> inputs;
    std::string out;
    std::string params_out;
    std::string apply;
    std::string unknown_batch = "standardize-only";
};

int cmd_harmonize(const HarmonizeArgs& a, RunManifest& manifest, std::ostream& out) {
    const data::FeatureMatrix m = load_and_concat(a.inputs, manifest);
    std::vector<std::string> warnings;
    if (!a.apply.empty()) {
        const prep::CombatParams params = prep::combat_from_json(read_json_file(a.apply));
        manifest.add_input(a.apply);
        write_output(manifest, a.out, data::feature_matrix_to_csv(prep::apply_combat(params, m, parse_policy(a.unknown_batch), &warnings)));
    } else {
        if (a.params_out.empty()) fail(ErrorCode::ConfigInvalid, "harmonize needs --params when fitting");
        const prep::CombatParams params = prep::fit_combat(m);
        write_output(manifest, a.params_out, canonical_dump(prep::to_json(params)) + "\n");
        write_output(manifest, a.out, data::feature_matrix_to_csv(prep::apply_combat(params, m)));
    }
    write_manifest(manifest, manifest_path_for(a.out));
    for (const auto& w : warnings) out << "warning: " << w << "\n";
    out << "harmonized " << m.n_samples() << " samples\n";
    return 0;
}

struct BinarizeArgs {
    std::string scores;
    std::string matrix = "PAN_CANCER";
    std::string samples;
    std::string out;
};

int cmd_binarize(const BinarizeArgs& a, RunManifest& manifest, std::ostream& out) {
    const auto matrix = data::signature_matrix_from_string(a.matrix);
    data::ScorePanel panel = data::load_score_panel(a.scores, matrix);
    manifest.add_input(a.scores);
    if (!a.samples.empty()) {
        panel = data::align_scores(data::load_feature_matrix(a.samples), panel);
        manifest.add_input(a.samples);
    }
    const label::PanelLabels labels = label::binarize_panel(panel);
    write_output(manifest, a.out, label::labels_to_csv(labels));
    write_output(manifest, a.out + ".json", canonical_dump(label::labels_sidecar(labels)) + "\n");
    write_manifest(manifest, manifest_path_for(a.out));
    out << labels.sets.size() << " categories labeled, " << labels.skipped.size() << " skipped\n";
    return 0;
}

struct SelectArgs {
    std::vector<std::string> inputs;
    std::string labels;
    std::string matrix = "PAN_CANCER";
    std::vector<std::string> categories;
    int folds = 5;
    std::uint64_t seed = 0;
    bool no_harmonize = false;
    std::string out;
};

int cmd_select(const SelectArgs& a, RunManifest& manifest, std::ostream& out) {
    manifest.seed = a.seed;
    const data::FeatureMatrix m = load_and_concat(a.inputs, manifest);
    const label::PanelLabels labels = label::parse_labels_csv(read_text_file(a.labels), data::signature_matrix_from_string(a.matrix));
    manifest.add_input(a.labels);
    data::FeatureMatrix h = a.no_harmonize ? prep::drop_zero_variance(m) : prep::apply_combat(prep::fit_combat(m), m);
    const data::FeatureMatrix z = prep::apply_zscore(prep::fit_zscore(h), h);

    std::vector<select::SelectionResult> results;
    Json skipped = Json::array();
    for (const auto& set : labels.sets) {
        if (!a.categories.empty() && std::find(a.categories.begin(), a.categories.end(), set.category) == a.categories.end()) continue;
        try {
            const auto y = align_labels(set, z.sample_ids());
            select::SelectionResult r = select::lasso_cv_select(z.values(), y, a.folds, derive_stream(a.seed, {results.size() + skipped.size()}));
            r.category = set.category;
            for (auto idx : r.selected) r.selected_names.push_back(z.descriptors()[idx].name);
            results.push_back(std::move(r));
        } catch (const Error& e) {
            skipped.push_back(Json{{"category", set.category}, {"code", to_string(e.code())}, {"reason", e.what()}});
        }
    }
    Json per = Json::array();
    for (const auto& r : results) per.push_back(select::to_json(r));
    Json doc{{"results", per}, {"skipped", skipped}};
    if (!results.empty()) {
        const select::SelectionSummary summary = select::summarize_selection(results, z.descriptors());
        doc["summary"] = select::to_json(summary);
        out << select::summary_table(summary);
    }
    write_output(manifest, a.out, canonical_dump(doc) + "\n");
    write_manifest(manifest, manifest_path_for(a.out));
    return 0;
}

struct TrainArgs {
    std::string config;
    std::string output_dir;
};

int cmd_train(const TrainArgs& a, RunManifest& manifest, std::ostream& out) {
    const fs::path config_path(a.config);
    pipeline::TrainConfig cfg = pipeline::train_config_from_json(read_json_file(config_path), config_path.parent_path());
    manifest.add_input(config_path);
    if (!a.output_dir.empty()) cfg.output_dir = a.output_dir;
    manifest.seed = cfg.seed;
    const pipeline::TrainOutcome outcome = pipeline::train_group(cfg);
    for (const auto& c : cfg.train_cohorts) manifest.add_input(cfg.cohort_files.at(c));
    manifest.add_input(cfg.score_file);

    fs::create_directories(cfg.output_dir);
    Json files = Json::array();
    for (const auto& p : outcome.pipelines) {
        const fs::path path = cfg.output_dir / pipeline::pipeline_file_name(p);
        write_output(manifest, path, pipeline::serialize(p) + "\n");
        files.push_back(path.filename().string());
    }
    Json skipped = Json::array();
    for (const auto& s : outcome.skipped) {
        skipped.push_back(Json{{"category", s.category}, {"model_kind", s.model_kind}, {"stage", s.stage}, {"code", to_string(s.code)}, {"reason", s.reason}});
    }
    const Json summary{{"group_id", cfg.group_id},
                       {"pipelines", files},
                       {"skipped", skipped},
                       {"n_train_samples", outcome.n_train_samples},
                       {"outliers_removed", outcome.gate ? Json(outcome.gate->flagged) : Json::array()}};
    write_output(manifest, cfg.output_dir / (cfg.group_id + "_train_summary.json"), canonical_dump(summary) + "\n");
    write_manifest(manifest, cfg.output_dir / (cfg.group_id + "_train.manifest.json"));
    out << "trained " << outcome.pipelines.size() << " pipelines, skipped " << outcome.skipped.size() << "\n";
    return 0;
}

struct PredictArgs {
    std::string pipeline;
    std::string features;
    std::string unknown_batch = "standardize-only";
    std::string out;
};

int cmd_predict(const PredictArgs& a, RunManifest& manifest, std::ostream& out) {
    const pipeline::TrainedPipeline p = pipeline::load_pipeline(a.pipeline);
    manifest.add_input(a.pipeline);
    const data::FeatureMatrix m = data::load_feature_matrix(a.features);
    manifest.add_input(a.features);
    const pipeline::Prediction pred = p.predict(m, parse_policy(a.unknown_batch));
    write_output(manifest, a.out, pipeline::predictions_to_csv(pred));
    write_manifest(manifest, manifest_path_for(a.out));
    out << "predicted " << pred.sample_ids.size() << " samples with " << p.model_id() << " (" << p.category << ")\n";
    return 0;
}

struct EvaluateArgs {
    std::string pipeline;
    std::string features;
    std::string labels;
    std::string unknown_batch = "standardize-only";
    std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, RunManifest& manifest, std::ostream& out) {
    const pipeline::TrainedPipeline p = pipeline::load_pipeline(a.pipeline);
    manifest.add_input(a.pipeline);
    const data::FeatureMatrix m = data::load_feature_matrix(a.features);
    manifest.add_input(a.features);
    const label::PanelLabels labels = label::parse_labels_csv(read_text_file(a.labels), p.signature_matrix);
    manifest.add_input(a.labels);
    const eval::HoldoutReport report = pipeline::evaluate_holdout(p, m, require_category(labels, p.category), parse_policy(a.unknown_batch));
    write_output(manifest, a.out, canonical_dump(eval::to_json(report)) + "\n");
    write_manifest(manifest, manifest_path_for(a.out));
    const auto& ba = report.metrics.at(eval::Metric::BALANCED_ACCURACY);
    out << report.model_id << " " << report.category << " balanced_accuracy "
        << (ba.evaluable() ? format_double(ba.value) : std::string("non evaluable")) << "\n";
    return 0;
}

struct CompareArgs {
    std::vector<std::string> a_files;
    std::vector<std::string> b_files;
    std::vector<std::string> label_files;
    std::string name_a = "A";
    std::string name_b = "B";
    std::string category;
    std::string matrix = "PAN_CANCER";
    std::vector<std::string> metrics{"balanced_accuracy"};
    int m = 0;
    int B = 10000;
    std::uint64_t seed = 0;
    std::string mode = "per-group";
    std::string out;
};

int cmd_compare(const CompareArgs& a, RunManifest& manifest, std::ostream& out) {
    manifest.seed = a.seed;
    if (a.a_files.size() != a.b_files.size() || a.a_files.size() != a.label_files.size()) {
        fail(ErrorCode::ConfigInvalid, "--a, --b and --labels must be given the same number of times (one per group)");
    }
    if (a.m < 1) fail(ErrorCode::ConfigInvalid, "--m must be >= 1");
    std::vector<eval::GroupPredictions> groups;
    for (std::size_t g = 0; g < a.a_files.size(); ++g) {
        const PredictionRows pa = parse_predictions(a.a_files[g]);
        const PredictionRows pb = parse_predictions(a.b_files[g]);
        const label::PanelLabels labels = label::parse_labels_csv(read_text_file(a.label_files[g]), data::signature_matrix_from_string(a.matrix));
        manifest.add_input(a.a_files[g]);
        manifest.add_input(a.b_files[g]);
        manifest.add_input(a.label_files[g]);
        if (pa.sample_ids != pb.sample_ids) fail(ErrorCode::AlignmentError, "prediction files of group " + std::to_string(g) + " list different samples");
        eval::GroupPredictions gp;
        gp.group_id = "group" + std::to_string(g + 1);
        gp.truth = align_labels(require_category(labels, a.category), pa.sample_ids);
        gp.pred_a = pa.cls;
        gp.pred_b = pb.cls;
        groups.push_back(std::move(gp));
    }
    eval::BootstrapOptions opts;
    opts.B = a.B;
    opts.seed = a.seed;
    opts.m = a.m;
    if (a.mode == "per-group") {
        opts.mode = eval::BootstrapMode::PER_GROUP;
    } else if (a.mode == "pooled") {
        opts.mode = eval::BootstrapMode::POOLED;
    } else {
        fail(ErrorCode::ConfigInvalid, "--mode must be per-group or pooled");
    }
    Json comparisons = Json::array();
    Json pairs = Json::array();
    for (const auto& name : a.metrics) {
        eval::ComparisonResult r = eval::bootstrap_compare(groups, eval::metric_from_string(name), opts);
        r.category = a.category;
        r.model_a = a.name_a;
        r.model_b = a.name_b;
        comparisons.push_back(eval::to_json(r));
        pairs.push_back(Json{{"model_a", a.name_a}, {"model_b", a.name_b}, {"metric", name}});
        out << a.name_a << " vs " << a.name_b << " " << name << ": p_raw " << format_double(r.p_raw) << " p_adjusted "
            << format_double(r.p_adjusted) << "\n";
    }
    const Json doc{{"category", a.category}, {"m", a.m}, {"pairs_evaluated", pairs}, {"comparisons", comparisons}};
    write_output(manifest, a.out, canonical_dump(doc) + "\n");
    write_manifest(manifest, manifest_path_for(a.out));
    return 0;
}

struct SurvivalArgs {
    std::string predictions;
    std::string metadata;
    std::string out;
    std::string km_csv;
};

int cmd_survival(const SurvivalArgs& a, RunManifest& manifest, std::ostream& out) {
    const PredictionRows pred = parse_predictions(a.predictions);
    const auto meta = data::load_metadata(a.metadata);
    manifest.add_input(a.predictions);
    manifest.add_input(a.metadata);
    std::vector<double> t1, t0;
    std::vector<int> e1, e0;
    int missing = 0;
    for (std::size_t i = 0; i < pred.sample_ids.size(); ++i) {
        const auto it = meta.find(pred.sample_ids[i]);
        if (it == meta.end() || !it->second.survival_years || !it->second.event_observed) {
            ++missing;
            continue;
        }
        auto& t = pred.cls[i] == 1 ? t1 : t0;
        auto& e = pred.cls[i] == 1 ? e1 : e0;
        t.push_back(*it->second.survival_years);
        e.push_back(*it->second.event_observed ? 1 : 0);
    }
    const stats::LogRankResult lr = stats::logrank_test(t1, e1, t0, e0);
    const stats::KmCurve km1 = stats::km_estimate(t1, e1);
    const stats::KmCurve km0 = stats::km_estimate(t0, e0);
    const Json doc{{"logrank", stats::to_json(lr)},
                   {"km", {{"class_1", stats::to_json(km1)}, {"class_0", stats::to_json(km0)}}},
                   {"n_class_1", t1.size()},
                   {"n_class_0", t0.size()},
                   {"n_missing_survival", missing}};
    write_output(manifest, a.out, canonical_dump(doc) + "\n");
    if (!a.km_csv.empty()) {
        write_output(manifest, a.km_csv + "_class1.csv", stats::km_to_csv(km1));
        write_output(manifest, a.km_csv + "_class0.csv", stats::km_to_csv(km0));
    }
    write_manifest(manifest, manifest_path_for(a.out));
    out << "log-rank chi2 " << format_double(lr.chi_square) << " p " << format_double(lr.p_value) << "\n";
    return 0;
}

void collect_flags(const CLI::App* sub, RunManifest& manifest) {
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_name();
        if (name == "--help" || name == "-h") continue;
        std::string value;
        if (opt->count() > 0) {
            for (const auto& r : opt->results()) value += (value.empty() ? "" : ";") + r;
        } else {
            value = opt->get_default_str();
        }
        manifest.flags[name] = value;
    }
}

void write_error(std::ostream& err, const std::string& code, const std::string& message, int exit_code) {
    err << canonical_dump(Json{{"error", code}, {"message", message}, {"exit_code", exit_code}}) << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Cross-cohort radiomic classification pipeline", "xcohort"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* s_sim = app.add_subcommand("simulate", "Generate a synthetic multi-site dataset");
    s_sim->add_option("--config", sim.config, "Synth config JSON");
    s_sim->add_option("--out", sim.out, "Output directory")->required();
    s_sim->add_option("--seed", sim.seed, "Override the config seed");

    OutliersArgs outl;
    auto* s_out = app.add_subcommand("outliers", "PCA + Hotelling T2 outlier gate");
    s_out->add_option("--input", outl.inputs, "Feature CSV (repeatable)")->required();
    s_out->add_option("--k", outl.k, "Principal components")->capture_default_str();
    s_out->add_option("--alpha", outl.alpha, "Significance level")->capture_default_str();
    s_out->add_option("--out", outl.out, "Report JSON")->required();
    s_out->add_option("--filtered", outl.filtered, "Write retained samples to this CSV");

    HarmonizeArgs harm;
    auto* s_harm = app.add_subcommand("harmonize", "Fit or apply ComBat");
    s_harm->add_option("--input", harm.inputs, "Feature CSV (repeatable)")->required();
    s_harm->add_option("--out", harm.out, "Harmonized CSV")->required();
    s_harm->add_option("--params", harm.params_out, "Write fitted parameters (fit mode)");
    s_harm->add_option("--apply", harm.apply, "Apply stored parameters instead of fitting");
    s_harm->add_option("--unknown-batch", harm.unknown_batch, "standardize-only | reject")->capture_default_str();

    BinarizeArgs bin;
    auto* s_bin = app.add_subcommand("binarize", "GMM binarization of a score panel");
    s_bin->add_option("--scores", bin.scores, "Score CSV")->required();
    s_bin->add_option("--signature-matrix", bin.matrix, "PAN_CANCER | GBM")->capture_default_str();
    s_bin->add_option("--samples", bin.samples, "Restrict to the samples of this feature CSV");
    s_bin->add_option("--out", bin.out, "Labels CSV")->required();

    SelectArgs sel;
    auto* s_sel = app.add_subcommand("select", "LASSO-CV feature selection");
    s_sel->add_option("--input", sel.inputs, "Feature CSV (repeatable)")->required();
    s_sel->add_option("--labels", sel.labels, "Labels CSV")->required();
    s_sel->add_option("--signature-matrix", sel.matrix, "PAN_CANCER | GBM")->capture_default_str();
    s_sel->add_option("--category", sel.categories, "Restrict to category (repeatable)");
    s_sel->add_option("--folds", sel.folds, "CV folds")->capture_default_str();
    s_sel->add_option("--seed", sel.seed, "Seed")->capture_default_str();
    s_sel->add_flag("--no-harmonize", sel.no_harmonize, "Skip ComBat");
    s_sel->add_option("--out", sel.out, "Selection JSON")->required();

    TrainArgs tr;
    auto* s_tr = app.add_subcommand("train", "Train frozen pipelines for one group");
    s_tr->add_option("--config", tr.config, "Group config JSON")->required();
    s_tr->add_option("--output-dir", tr.output_dir, "Override the config output_dir");

    PredictArgs pr;
    auto* s_pr = app.add_subcommand("predict", "Apply a frozen pipeline");
    s_pr->add_option("--pipeline", pr.pipeline, "Pipeline JSON")->required();
    s_pr->add_option("--features", pr.features, "Feature CSV")->required();
    s_pr->add_option("--unknown-batch", pr.unknown_batch, "standardize-only | reject")->capture_default_str();
    s_pr->add_option("--out", pr.out, "Predictions CSV")->required();

    EvaluateArgs ev;
    auto* s_ev = app.add_subcommand("evaluate", "Hold-out evaluation of a pipeline");
    s_ev->add_option("--pipeline", ev.pipeline, "Pipeline JSON")->required();
    s_ev->add_option("--features", ev.features, "Holdout feature CSV")->required();
    s_ev->add_option("--labels", ev.labels, "Holdout labels CSV")->required();
    s_ev->add_option("--unknown-batch", ev.unknown_batch, "standardize-only | reject")->capture_default_str();
    s_ev->add_option("--out", ev.out, "Report JSON")->required();

    CompareArgs cmp;
    auto* s_cmp = app.add_subcommand("compare", "Paired stratified bootstrap comparison");
    s_cmp->add_option("--a", cmp.a_files, "Predictions of model A, one per group")->required();
    s_cmp->add_option("--b", cmp.b_files, "Predictions of model B, one per group")->required();
    s_cmp->add_option("--labels", cmp.label_files, "Labels CSV, one per group")->required();
    s_cmp->add_option("--name-a", cmp.name_a, "Model A id")->capture_default_str();
    s_cmp->add_option("--name-b", cmp.name_b, "Model B id")->capture_default_str();
    s_cmp->add_option("--category", cmp.category, "Label category")->required();
    s_cmp->add_option("--signature-matrix", cmp.matrix, "PAN_CANCER | GBM")->capture_default_str();
    s_cmp->add_option("--metric", cmp.metrics, "Metric (repeatable)")->capture_default_str();
    s_cmp->add_option("--m", cmp.m, "Bonferroni comparison count")->required();
    s_cmp->add_option("--B", cmp.B, "Resamples")->capture_default_str();
    s_cmp->add_option("--seed", cmp.seed, "Seed")->capture_default_str();
    s_cmp->add_option("--mode", cmp.mode, "per-group | pooled")->capture_default_str();
    s_cmp->add_option("--out", cmp.out, "Comparison JSON")->required();

    SurvivalArgs sv;
    auto* s_sv = app.add_subcommand("survival", "Kaplan-Meier and log-rank by predicted class");
    s_sv->add_option("--predictions", sv.predictions, "Predictions CSV")->required();
    s_sv->add_option("--metadata", sv.metadata, "Metadata CSV with survival_years, event_observed")->required();
    s_sv->add_option("--out", sv.out, "Survival JSON")->required();
    s_sv->add_option("--km-csv", sv.km_csv, "Prefix for per-class KM tables");

    std::vector<std::string> argv_store{"xcohort"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    const std::map<const CLI::App*, std::function<int(RunManifest&)>> dispatch = {
        {s_sim, [&](RunManifest& m) { return cmd_simulate(sim, m, out); }},
        {s_out, [&](RunManifest& m) { return cmd_outliers(outl, m, out); }},
        {s_harm, [&](RunManifest& m) { return cmd_harmonize(harm, m, out); }},
        {s_bin, [&](RunManifest& m) { return cmd_binarize(bin, m, out); }},
        {s_sel, [&](RunManifest& m) { return cmd_select(sel, m, out); }},
        {s_tr, [&](RunManifest& m) { return cmd_train(tr, m, out); }},
        {s_pr, [&](RunManifest& m) { return cmd_predict(pr, m, out); }},
        {s_ev, [&](RunManifest& m) { return cmd_evaluate(ev, m, out); }},
        {s_cmp, [&](RunManifest& m) { return cmd_compare(cmp, m, out); }},
        {s_sv, [&](RunManifest& m) { return cmd_survival(sv, m, out); }},
    };
    const CLI::App* chosen = app.get_subcommands().front();
    RunManifest manifest;
    manifest.subcommand = chosen->get_name();
    collect_flags(chosen, manifest);
    try {
        return dispatch.at(chosen)(manifest);
    } catch (const Error& e) {
        const int code = exit_code_for(e.code());
        write_error(err, to_string(e.code()), e.what(), code);
        return code;
    } catch (const nlohmann::json::exception& e) {
        write_error(err, to_string(ErrorCode::SchemaError), e.what(), 2);
        return 2;
    } catch (const std::exception& e) {
        write_error(err, to_string(ErrorCode::Internal), e.what(), 4);
        return 4;
    }
}

}  // namespace xcohort::cli
