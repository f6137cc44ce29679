// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Seeds and configurations are fixed here and were chosen before the runs.

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "../metric_oracle.hpp"
#include "xcohort/cli.hpp"
#include "xcohort/cohort_stats.hpp"
#include "xcohort/evaluation.hpp"
#include "xcohort/feature_select.hpp"
#include "xcohort/json_io.hpp"
#include "xcohort/labeling.hpp"
#include "xcohort/learners.hpp"
#include "xcohort/pipeline.hpp"
#include "xcohort/preprocess.hpp"
#include "xcohort/rng.hpp"
#include "xcohort/synth.hpp"

using namespace xcohort;
namespace fs = std::filesystem;
using testing::cpp_rational;
using testing::correctly_rounded;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

fs::path work_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("xcohort_acceptance_" + std::to_string(::getpid())) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) std::cerr << "  cli " << args.front() << " failed: " << err.str();
    return code;
}

Eigen::MatrixXd gaussian(int n, int p, std::uint64_t seed) {
    Rng rng(seed);
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < p; ++j) x(i, j) = rng.normal();
    }
    return x;
}

data::FeatureMatrix plain_matrix(const Eigen::MatrixXd& v) {
    std::vector<data::SampleMeta> samples;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        data::SampleMeta m;
        m.sample_id = "s" + std::to_string(i);
        m.batch_id = "B1";
        samples.push_back(m);
    }
    std::vector<data::FeatureDescriptor> d;
    for (Eigen::Index j = 0; j < v.cols(); ++j) d.push_back(data::FeatureDescriptor::parse("f" + std::to_string(j)));
    return data::FeatureMatrix(std::move(samples), std::move(d), v);
}

std::vector<int> bits(unsigned mask, int n) {
    std::vector<int> v;
    for (int i = 0; i < n; ++i) v.push_back(static_cast<int>((mask >> i) & 1u));
    return v;
}

// ---------------------------------------------------------------- C1
Outcome metric_oracle() {
    long checked = 0, bad = 0;
    for (int n = 1; n <= 6; ++n) {
        for (unsigned t = 0; t < (1u << n); ++t) {
            for (unsigned p = 0; p < (1u << n); ++p) {
                const auto truth = bits(t, n), pred = bits(p, n);
                const eval::MetricReport r = eval::compute_metrics(truth, pred);
                for (eval::Metric m : eval::kAllMetrics) {
                    ++checked;
                    if (!testing::matches_oracle(r.at(m), testing::oracle_metric(truth, pred, m))) ++bad;
                }
            }
        }
    }
    return {bad == 0, std::to_string(checked) + " (pair, metric) cases, " + std::to_string(bad) + " mismatches"};
}

// ---------------------------------------------------------------- C2
Outcome harmonization_recovery() {
    synth::SynthConfig cfg;
    cfg.n_sites = 4;
    cfg.n_per_site = 40;
    cfg.n_features = 100;
    cfg.batch_shift_scale = 1.5;
    cfg.batch_scale_range = {0.7, 1.4};
    cfg.seed = 1;
    const synth::SynthOutput gen = synth::generate(cfg);
    std::vector<const data::FeatureMatrix*> parts;
    for (const auto& [site, m] : gen.cohorts) parts.push_back(&m);
    const data::FeatureMatrix all = data::concat_rows(parts);
    const data::FeatureMatrix adj = prep::apply_combat(prep::fit_combat(all), all);

    const double crit = boost::math::quantile(boost::math::fisher_f_distribution<double>(3, 156), 0.95);
    const auto below = [&](const data::FeatureMatrix& m) {
        int count = 0;
        for (int j = 0; j < cfg.n_features; ++j) {
            std::vector<std::vector<double>> groups(4);
            for (std::size_t i = 0; i < m.n_samples(); ++i) {
                groups[static_cast<std::size_t>(m.samples()[i].batch_id[1] - '1')].push_back(m.values()(static_cast<Eigen::Index>(i), j));
            }
            if (stats::anova_oneway(groups).f_statistic < crit) ++count;
        }
        return static_cast<double>(count) / cfg.n_features;
    };
    const double before = below(all), after = below(adj);
    return {after >= 0.95 && before <= 0.30,
            "features below F crit " + fmt("%.3f", crit) + ": before " + fmt("%.2f", before) + ", after " + fmt("%.2f", after)};
}

// ---------------------------------------------------------------- C3
std::string prediction_row(const pipeline::Prediction& p, std::size_t i) {
    pipeline::Prediction one;
    one.sample_ids = {p.sample_ids[i]};
    one.probability = {p.probability[i]};
    one.cls = {p.cls[i]};
    one.warnings = {p.warnings[i]};
    return pipeline::predictions_to_csv(one);
}

Outcome frozen_transform_identity() {
    const fs::path dir = work_dir("c3");
    synth::SynthConfig cfg;
    cfg.n_sites = 3;
    cfg.n_per_site = 100;
    cfg.n_features = 40;
    cfg.n_signal_features = 5;
    cfg.noise_sigma = 0.5;
    cfg.seed = 3;
    const synth::SynthOutput gen = synth::generate(cfg);
    pipeline::TrainConfig tc;
    for (const auto& [site, m] : gen.cohorts) {
        tc.cohort_files[site] = dir / (site + ".csv");
        write_text_file(tc.cohort_files[site], data::feature_matrix_to_csv(m));
    }
    tc.score_file = dir / "scores.csv";
    write_text_file(tc.score_file, data::score_panel_to_csv(gen.panel));
    tc.group_id = "C3";
    tc.train_cohorts = {"S1", "S2"};
    tc.holdout_cohort = "S3";
    tc.seed = 3;
    const pipeline::TrainOutcome trained = pipeline::train_group(tc);
    if (trained.pipelines.empty()) return {false, "no pipeline trained"};

    const data::FeatureMatrix& unseen = gen.cohorts.at("S3");
    const data::FeatureMatrix& seen = gen.cohorts.at("S1");
    Rng rng(33);
    long compared = 0, mismatched = 0;
    for (const auto& p : trained.pipelines) {
        for (std::size_t i = 0; i < unseen.n_samples(); ++i) {
            const std::size_t row[] = {i};
            const data::FeatureMatrix single = unseen.select_rows(row);
            const std::string alone = prediction_row(p.predict(single), 0);

            // A random batch of unseen rows containing i, in random order, plus training-site rows.
            std::vector<std::size_t> others;
            for (std::size_t r = 0; r < unseen.n_samples(); ++r) {
                if (r != i) others.push_back(r);
            }
            rng.shuffle(others.begin(), others.end());
            others.resize(1 + rng.below(unseen.n_samples() - 1));
            others.push_back(i);
            rng.shuffle(others.begin(), others.end());
            const data::FeatureMatrix batch = unseen.select_rows(others);
            std::vector<std::size_t> train_rows(seen.n_samples());
            for (std::size_t r = 0; r < train_rows.size(); ++r) train_rows[r] = r;
            rng.shuffle(train_rows.begin(), train_rows.end());
            train_rows.resize(1 + rng.below(10));
            const data::FeatureMatrix extra = seen.select_rows(train_rows);
            const data::FeatureMatrix mixed = data::concat_rows({&extra, &batch});
            const pipeline::Prediction pred = p.predict(mixed);
            const auto pos = static_cast<std::size_t>(std::find(others.begin(), others.end(), i) - others.begin()) + extra.n_samples();
            ++compared;
            if (prediction_row(pred, pos) != alone) ++mismatched;
        }
    }
    return {mismatched == 0 && compared == 200,
            std::to_string(compared) + " rows (100 samples x " + std::to_string(trained.pipelines.size()) + " models), " +
                std::to_string(mismatched) + " differ"};
}

// ---------------------------------------------------------------- C4
Outcome gmm_recovery() {
    synth::SynthConfig cfg;
    cfg.n_sites = 5;
    cfg.n_categories = 4;
    cfg.score_separation = 6.0;
    cfg.seed = 1;
    const synth::SynthOutput gen = synth::generate(cfg);
    const label::PanelLabels labels = label::binarize_panel(gen.panel);
    data::ScorePanel moved = gen.panel;
    moved.scores = (gen.panel.scores.array() * 2.5 + 7.0).matrix();
    const label::PanelLabels moved_labels = label::binarize_panel(moved);
    if (labels.sets.size() != 4 || moved_labels.sets.size() != 4) return {false, "a category was skipped"};
    double worst = 1.0;
    bool invariant = true;
    for (std::size_t c = 0; c < 4; ++c) {
        const auto& set = labels.sets[c];
        long agree = 0;
        for (std::size_t i = 0; i < set.labels.size(); ++i) agree += set.labels[i] == gen.truth.labels[c][i] ? 1 : 0;
        worst = std::min(worst, static_cast<double>(agree) / static_cast<double>(set.labels.size()));
        invariant = invariant && set.labels == moved_labels.sets[c].labels;
    }
    return {worst >= 0.99 && invariant,
            "worst category agreement " + fmt("%.4f", worst) + ", labels under 2.5x+7 " + (invariant ? "identical" : "differ")};
}

// ---------------------------------------------------------------- C5
Outcome lasso_recovery() {
    // Closed form: x'x/n = 1, x'y/n = 2, lambda = 0.5 -> beta = 1.5.
    Eigen::MatrixXd x1(4, 1);
    x1 << 1, -1, 1, -1;
    Eigen::VectorXd y1(4);
    y1 << 2, -2, 2, -2;
    const double closed_err = std::abs(select::lasso_fit(x1, y1, 0.5)[0] - 1.5);

    const int n = 200, p = 500;
    double recall_sum = 0.0, size_sum = 0.0;
    std::string sizes;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Eigen::MatrixXd x = gaussian(n, p, seed);
        for (int j = 0; j < p; ++j) {
            x.col(j).array() -= x.col(j).mean();
            x.col(j) /= std::sqrt(x.col(j).squaredNorm() / n);
        }
        Rng noise(seed + 1000);
        std::vector<double> s(n);
        for (int i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = x.row(i).head(10).sum() + noise.normal(0.0, 0.1);
        std::vector<double> sorted = s;
        std::nth_element(sorted.begin(), sorted.begin() + n / 2, sorted.end());
        const double median = sorted[n / 2];
        std::vector<int> y;
        for (double v : s) y.push_back(v >= median ? 1 : 0);
        const select::SelectionResult r = select::lasso_cv_select(x, y, 5, seed);
        int hits = 0;
        for (auto j : r.selected) hits += j < 10 ? 1 : 0;
        recall_sum += hits / 10.0;
        size_sum += static_cast<double>(r.selected.size());
        sizes += (sizes.empty() ? "" : ",") + std::to_string(r.selected.size());
    }
    const double recall = recall_sum / 5.0, size = size_sum / 5.0;
    return {recall >= 0.9 && size <= 50.0 && closed_err <= 1e-8,
            "mean recall " + fmt("%.2f", recall) + ", mean |selected| " + fmt("%.1f", size) + " (" + sizes + "), closed-form error " +
                fmt("%.1e", closed_err)};
}

// ---------------------------------------------------------------- C6
double holdout_ba(const fs::path& report) {
    const Json j = read_json_file(report).at("metrics").at("balanced_accuracy");
    return j.contains("value") ? j.at("value").get<double>() : 0.0;
}

Outcome end_to_end() {
    const fs::path dir = work_dir("c6");
    synth::SynthConfig cfg;
    cfg.n_sites = 5;
    cfg.n_per_site = 60;
    cfg.n_features = 100;
    cfg.n_signal_features = 10;
    cfg.signal_strength = 1.0;
    cfg.noise_sigma = 0.5;  // Bayes-optimal BA = 1 - acos(sqrt(10 / 10.25)) / pi = 0.95
    cfg.seed = 1;
    write_text_file(dir / "synth.json", canonical_dump(synth::to_json(cfg)));
    if (run_cli({"simulate", "--config", (dir / "synth.json").string(), "--out", dir.string()}) != 0) return {false, "simulate failed"};
    if (run_cli({"binarize", "--scores", (dir / "scores.csv").string(), "--samples", (dir / "S5.csv").string(), "--out",
                 (dir / "S5_labels.csv").string()}) != 0) {
        return {false, "binarize failed"};
    }
    Json group = read_json_file(dir / "group_config.json");
    group["output_dir"] = "harmonized";
    write_text_file(dir / "group_h.json", canonical_dump(group));
    group["output_dir"] = "unharmonized";
    group["harmonize"] = false;
    write_text_file(dir / "group_u.json", canonical_dump(group));

    std::map<std::string, double> ba;
    for (const std::string tag : {"h", "u"}) {
        if (run_cli({"train", "--config", (dir / ("group_" + tag + ".json")).string()}) != 0) return {false, "train failed"};
        const fs::path out_dir = dir / (tag == "h" ? "harmonized" : "unharmonized");
        for (const std::string kind : {"ENSEMBLE", "SVM"}) {
            const fs::path report = dir / ("eval_" + tag + "_" + kind + ".json");
            if (run_cli({"evaluate", "--pipeline", (out_dir / ("G1_immune_score_" + kind + ".pipeline.json")).string(), "--features",
                         (dir / "S5.csv").string(), "--labels", (dir / "S5_labels.csv").string(), "--out", report.string()}) != 0) {
                return {false, "evaluate failed"};
            }
            ba[tag + kind] = holdout_ba(report);
        }
    }
    const double h = ba["hENSEMBLE"], u = ba["uENSEMBLE"];
    return {h >= 0.85 && h - u >= 0.10,
            "ensemble holdout BA " + fmt("%.3f", h) + " harmonized vs " + fmt("%.3f", u) + " unharmonized (SVM " + fmt("%.3f", ba["hSVM"]) +
                " vs " + fmt("%.3f", ba["uSVM"]) + ")"};
}

// ---------------------------------------------------------------- C7
eval::GroupPredictions planted_pair(int n, double acc_a, double acc_b, std::uint64_t seed) {
    eval::GroupPredictions g;
    g.group_id = "G";
    Rng rng(seed);
    for (int i = 0; i < n; ++i) g.truth.push_back(i % 2);
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    const auto with_errors = [&](double acc) {
        std::vector<int> pred = g.truth;
        rng.shuffle(order.begin(), order.end());
        const int n_wrong = static_cast<int>(std::lround((1.0 - acc) * n));
        for (int k = 0; k < n_wrong; ++k) pred[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] ^= 1;
        return pred;
    };
    g.pred_a = with_errors(acc_a);
    g.pred_b = with_errors(acc_b);
    return g;
}

Outcome bootstrap_calibration() {
    const auto metric = eval::Metric::BALANCED_ACCURACY;
    eval::GroupPredictions same = planted_pair(200, 0.75, 0.75, 1);
    same.pred_b = same.pred_a;
    const eval::ComparisonResult id = eval::bootstrap_compare({same}, metric, eval::BootstrapOptions{10000, 1, 6});
    const bool identical_ok = id.p_raw == 1.0 && id.ci_low == 0.0 && id.ci_high == 0.0;

    const eval::ComparisonResult gap = eval::bootstrap_compare({planted_pair(200, 0.9, 0.6, 2)}, metric, eval::BootstrapOptions{10000, 2, 6});

    int rejected = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto g = planted_pair(200, 0.75, 0.75, 100 + seed);
        if (eval::bootstrap_compare({g}, metric, eval::BootstrapOptions{10000, seed, 1}).p_raw < 0.05) ++rejected;
    }
    return {identical_ok && gap.p_adjusted < 0.05 && rejected <= 2,
            std::string("identical p_raw ") + fmt("%g", id.p_raw) + " CI [" + fmt("%g", id.ci_low) + "," + fmt("%g", id.ci_high) +
                "]; 30-point gap p_adjusted " + fmt("%.4g", gap.p_adjusted) + "; null rejections " + std::to_string(rejected) + "/20"};
}

// ---------------------------------------------------------------- C8
Outcome ensemble_arithmetic() {
    Rng rng(8);
    int bad = 0;
    for (int t = 0; t < 1000; ++t) {
        const double a = rng.uniform(), b = rng.uniform(), c = rng.uniform();
        const cpp_rational exact = (2 * cpp_rational(a) + cpp_rational(b) + cpp_rational(c)) / 4;
        if (!correctly_rounded(learn::ensemble_probability(a, b, c), exact)) ++bad;
    }
    const bool tie = learn::ensemble_probability(0.5, 0.5, 0.5) == 0.5 && learn::class_of(0.5) == 1 &&
                     learn::class_of(std::nextafter(0.5, 0.0)) == 0 && learn::class_of(learn::ensemble_probability(0.25, 0.75, 0.75)) == 1;
    return {bad == 0 && tie, "1000 triples, " + std::to_string(bad) + " not the correctly rounded (2a+b+c)/4; tie at 0.5 -> class " +
                                 std::to_string(learn::class_of(0.5))};
}

// ---------------------------------------------------------------- C9
Outcome hotelling_gate() {
    // Quantile: k(n-1)/(n-k) F^-1(0.99; k, n-k), F^-1 from the inverse regularized incomplete beta.
    double worst_rel = 0.0;
    for (int n : {20, 57, 100, 200, 501}) {
        for (int k : {1, 2, 3, 5}) {
            const double d1 = k, d2 = n - k;
            const double xb = boost::math::ibeta_inv(d1 / 2, d2 / 2, 0.99);
            const double f = d2 * xb / (d1 * (1.0 - xb));
            const double want = d1 * (n - 1) / d2 * f;
            worst_rel = std::max(worst_rel, std::abs(prep::hotelling_critical_value(n, k, 0.01) - want) / want);
        }
    }

    Eigen::MatrixXd x = gaussian(201, 5, 9);
    const prep::HotellingGate base = prep::hotelling_gate(plain_matrix(x.topRows(200)), 2, 0.01);
    const Eigen::VectorXd dir = base.pca.components.row(0).transpose();
    for (int j = 0; j < 5; ++j) {
        x(200, j) = base.pca.mean[j] + 10.0 * base.pca.scale[j] * dir[j] * std::sqrt(base.pca.explained_variance[0]);
    }
    const prep::HotellingGate gate = prep::hotelling_gate(plain_matrix(x), 2, 0.01);
    const bool outlier = std::find(gate.flagged.begin(), gate.flagged.end(), "s200") != gate.flagged.end();

    std::size_t flagged = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) flagged += prep::hotelling_gate(plain_matrix(gaussian(200, 5, 900 + seed)), 2, 0.01).flagged.size();
    const double rate = static_cast<double>(flagged) / (20.0 * 200.0);
    return {outlier && rate <= 0.03 && worst_rel <= 1e-8,
            std::string("10 sd outlier ") + (outlier ? "flagged" : "missed") + "; null flag rate " + fmt("%.4f", rate) +
                "; quantile relative error " + fmt("%.1e", worst_rel)};
}

// ---------------------------------------------------------------- C10
Outcome survival() {
    Rng rng(10);
    std::vector<double> t;
    std::vector<int> e;
    for (int i = 0; i < 60; ++i) {
        t.push_back(rng.exponential(1.0));
        e.push_back(rng.uniform() < 0.7 ? 1 : 0);
    }
    const double chi_same = stats::logrank_test(t, e, t, e).chi_square;

    int rejected = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng r(1000 + seed);
        std::vector<double> ta, tb;
        std::vector<int> ea(100, 1), eb(100, 1);
        for (int i = 0; i < 100; ++i) ta.push_back(r.exponential(2.0));
        for (int i = 0; i < 100; ++i) tb.push_back(r.exponential(1.0));
        if (stats::logrank_test(ta, ea, tb, eb).p_value < 0.05) ++rejected;
    }

    // No censoring before the last event: S(t_last) = (n - events) / n.
    bool km_exact = true;
    for (int n : {7, 23, 64}) {
        Rng r(static_cast<std::uint64_t>(n));
        std::vector<double> kt;
        std::vector<int> ke;
        const int events = n - n / 3;
        double last = 0.0;
        for (int i = 0; i < events; ++i) {
            kt.push_back(r.exponential(1.0));
            ke.push_back(1);
            last = std::max(last, kt.back());
        }
        for (int i = events; i < n; ++i) {
            kt.push_back(last + 1.0 + r.uniform());
            ke.push_back(0);
        }
        const stats::KmCurve km = stats::km_estimate(kt, ke);
        km_exact = km_exact && km.survival_at(last) == static_cast<double>(n - events) / n;
        std::vector<int> all(static_cast<std::size_t>(n), 1);
        km_exact = km_exact && stats::km_estimate(kt, all).survival.back() == 0.0;
    }
    return {chi_same == 0.0 && rejected >= 18 && km_exact,
            "identical chi2 " + fmt("%g", chi_same) + "; HR 2 rejections " + std::to_string(rejected) + "/20; KM endpoint " +
                (km_exact ? "exact" : "inexact")};
}

// ---------------------------------------------------------------- C11
std::map<std::string, std::string> output_hashes(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (name.find("manifest") == std::string::npos) continue;
        const Json m = read_json_file(entry.path());
        for (const auto& [path, hash] : m.at("outputs").items()) out[path] = hash.get<std::string>();
    }
    return out;
}

Outcome determinism() {
    const fs::path d = work_dir("c11");
    synth::SynthConfig cfg;
    cfg.n_sites = 3;
    cfg.n_per_site = 40;
    cfg.n_features = 30;
    cfg.n_signal_features = 4;
    cfg.noise_sigma = 0.5;
    cfg.survival_link = 2.0;
    write_text_file(d / "synth.json", canonical_dump(synth::to_json(cfg)));
    const auto p = [&](const std::string& f) { return (d / f).string(); };
    const std::string svm = p("pipelines/G1_immune_score_SVM.pipeline.json");
    const std::string ens = p("pipelines/G1_immune_score_ENSEMBLE.pipeline.json");
    const std::vector<std::vector<std::string>> commands = {
        {"simulate", "--config", p("synth.json"), "--seed", "11", "--out", d.string()},
        {"outliers", "--input", p("S1.csv"), "--input", p("S2.csv"), "--out", p("outliers.json"), "--filtered", p("kept.csv")},
        {"harmonize", "--input", p("S1.csv"), "--input", p("S2.csv"), "--out", p("harm.csv"), "--params", p("combat.json")},
        {"harmonize", "--input", p("S3.csv"), "--apply", p("combat.json"), "--out", p("harm_S3.csv")},
        {"binarize", "--scores", p("scores.csv"), "--samples", p("S3.csv"), "--out", p("S3_labels.csv")},
        {"binarize", "--scores", p("scores.csv"), "--out", p("all_labels.csv")},
        {"select", "--input", p("S1.csv"), "--input", p("S2.csv"), "--labels", p("all_labels.csv"), "--seed", "5", "--out", p("sel.json")},
        {"train", "--config", p("group_config.json")},
        {"predict", "--pipeline", svm, "--features", p("S3.csv"), "--out", p("svm.csv")},
        {"predict", "--pipeline", ens, "--features", p("S3.csv"), "--out", p("ens.csv")},
        {"evaluate", "--pipeline", ens, "--features", p("S3.csv"), "--labels", p("S3_labels.csv"), "--out", p("eval.json")},
        {"compare", "--a", p("svm.csv"), "--b", p("ens.csv"), "--labels", p("S3_labels.csv"), "--category", "immune_score", "--m", "6",
         "--seed", "7", "--out", p("cmp.json")},
        {"survival", "--predictions", p("ens.csv"), "--metadata", p("metadata.csv"), "--out", p("surv.json"), "--km-csv", p("km")},
    };
    std::map<std::string, std::string> first;
    for (int round = 0; round < 2; ++round) {
        for (const auto& c : commands) {
            if (run_cli(c) != 0) return {false, "subcommand " + c.front() + " failed"};
        }
        if (round == 0) {
            first = output_hashes(d);
            for (const auto& entry : fs::recursive_directory_iterator(d)) {
                if (entry.is_regular_file() && entry.path().filename().string().find("manifest") != std::string::npos) fs::remove(entry.path());
            }
        }
    }
    const auto second = output_hashes(d);
    std::set<std::string> names;
    for (const auto& c : commands) names.insert(c.front());

    int round_trips = 0, round_trip_bad = 0;
    for (const std::string& file : {svm, ens}) {
        ++round_trips;
        const std::string text = read_text_file(file);
        if (pipeline::serialize(pipeline::load_pipeline(file)) + "\n" != text) ++round_trip_bad;
    }
    return {!first.empty() && first == second && names.size() == 10 && round_trip_bad == 0,
            std::to_string(names.size()) + " subcommands, " + std::to_string(first.size()) + " outputs, hashes " +
                (first == second ? "identical" : "differ") + " on rerun; pipeline JSON round-trips " +
                std::to_string(round_trips - round_trip_bad) + "/" + std::to_string(round_trips)};
}

struct Criterion {
    const char* id;
    const char* title;
    double limit_seconds;  // 0: no runtime bound
    std::function<Outcome()> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {"C1", "metric oracle equivalence", 5.0, metric_oracle},
        {"C2", "harmonization recovery", 30.0, harmonization_recovery},
        {"C3", "leakage-free frozen transform", 0.0, frozen_transform_identity},
        {"C4", "GMM label recovery", 0.0, gmm_recovery},
        {"C5", "LASSO support recovery", 60.0, lasso_recovery},
        {"C6", "end-to-end cross-cohort generalization", 300.0, end_to_end},
        {"C7", "bootstrap comparison calibration", 120.0, bootstrap_calibration},
        {"C8", "ensemble arithmetic", 0.0, ensemble_arithmetic},
        {"C9", "Hotelling gate", 0.0, hotelling_gate},
        {"C10", "survival module", 0.0, survival},
        {"C11", "determinism and round-trip", 0.0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool pass = o.pass;
        std::string timing = fmt("%.2f s", secs);
        if (c.limit_seconds > 0.0) {
            timing += fmt(" (limit %.0f s)", c.limit_seconds);
            if (secs >= c.limit_seconds) pass = false;
        }
        if (!pass) ++failed;
        std::printf("%-4s %s  %s: %s [%s]\n", c.id, pass ? "PASS" : "FAIL", c.title, o.detail.c_str(), timing.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    fs::remove_all(fs::temp_directory_path() / ("xcohort_acceptance_" + std::to_string(::getpid())));
    return failed == 0 ? 0 : 1;
}
