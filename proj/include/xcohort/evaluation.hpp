#pragma once

// Degenerate-aware binary metrics, hold-out reports, paired stratified
// bootstrap comparison and the per-category selection table.

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "xcohort/json_io.hpp"

namespace xcohort::eval {

struct ConfusionMatrix {
    long tp = 0;
    long fp = 0;
    long fn = 0;
    long tn = 0;

    long n() const { return tp + fp + fn + tn; }
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> pred);

struct MetricOutcome {
    enum class State { VALUE, UNSTABLE, NON_EVALUABLE };
    State state = State::NON_EVALUABLE;
    double value = 0.0;
    std::string reason;

    static MetricOutcome of(double v) { return {State::VALUE, v, {}}; }
    static MetricOutcome unstable(double v) { return {State::UNSTABLE, v, {}}; }
    static MetricOutcome non_evaluable(std::string why) { return {State::NON_EVALUABLE, 0.0, std::move(why)}; }

    bool evaluable() const { return state != State::NON_EVALUABLE; }
    bool operator==(const MetricOutcome&) const = default;
};

enum class Metric { PRECISION, RECALL, ACCURACY, BALANCED_ACCURACY, F1, MCC };
inline constexpr std::array<Metric, 6> kAllMetrics = {Metric::PRECISION, Metric::RECALL, Metric::ACCURACY,
                                                      Metric::BALANCED_ACCURACY, Metric::F1, Metric::MCC};
const char* to_string(Metric m);
Metric metric_from_string(const std::string& s);

/// One metric from counts. Computable results are wrapped Unstable when the
/// minority truth class has exactly one member.
MetricOutcome metric_from_counts(const ConfusionMatrix& cm, Metric m);

struct MetricReport {
    ConfusionMatrix cm;
    long n = 0;
    long n_positive = 0;  // truth class counts
    long n_negative = 0;
    std::map<Metric, MetricOutcome> metrics;

    const MetricOutcome& at(Metric m) const { return metrics.at(m); }
};

MetricReport compute_metrics(std::span<const int> truth, std::span<const int> pred);

struct HoldoutReport {
    std::string group_id;
    std::string category;
    std::string signature_matrix;
    std::string model_id;  // e.g. SVM_pan, ENS_gbm
    MetricReport metrics;
    std::vector<std::string> warnings;
};

Json to_json(const MetricOutcome& o);
Json to_json(const MetricReport& r);
Json to_json(const HoldoutReport& r);

// ------------------------------------------------------------ bootstrap

struct GroupPredictions {
    std::string group_id;
    std::vector<int> truth;
    std::vector<int> pred_a;
    std::vector<int> pred_b;
};

enum class BootstrapMode { PER_GROUP, POOLED };

struct BootstrapOptions {
    int B = 10000;
    std::uint64_t seed = 0;
    int m = 1;  // Bonferroni comparison count
    BootstrapMode mode = BootstrapMode::PER_GROUP;
};

struct ComparisonResult {
    std::string category;
    std::string model_a;
    std::string model_b;
    Metric metric = Metric::BALANCED_ACCURACY;
    BootstrapMode mode = BootstrapMode::PER_GROUP;
    double mean_diff = 0.0;  // mean over used resamples of d_b (A minus B)
    double ci_low = 0.0;
    double ci_high = 0.0;
    double p_raw = 1.0;
    double p_adjusted = 1.0;
    int m = 1;
    int B = 0;
    int n_resamples_used = 0;
    int n_resamples_skipped = 0;
    bool non_evaluable = false;
    std::string reason;
};

/// Paired stratified bootstrap: each resample redraws every group's rows with
/// replacement inside each truth class (class counts preserved) from the
/// stream (seed, b). d_b averages A-minus-B over the groups where both
/// metrics are evaluable; resamples with none are skipped. CI is the
/// [2.5, 97.5] percentile interval; p_raw = clamp(2 min(P(d <= 0),
/// P(d >= 0)), 1/B, 1); p_adjusted = min(1, m p_raw). More than half the
/// resamples skipped makes the result non-evaluable.
ComparisonResult bootstrap_compare(const std::vector<GroupPredictions>& groups, Metric metric, const BootstrapOptions& options);

/// The raw per-resample differences (skipped resamples omitted), exposed
/// for property tests.
std::vector<double> bootstrap_differences(const std::vector<GroupPredictions>& groups, Metric metric,
                                          const BootstrapOptions& options, int* skipped = nullptr);

double bonferroni(double p_raw, int m);

/// Linear-interpolation (type 7) quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q);

Json to_json(const ComparisonResult& r);

// ------------------------------------------------------------ selection table

struct MetricSummary {
    bool evaluable = false;  // at least one group evaluable
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
    int n_evaluable = 0;
    int n_excluded = 0;
};

struct SelectionRow {
    std::string category;
    std::string signature_matrix;
    std::string model_id;
    std::map<Metric, MetricSummary> metrics;
    int n_groups = 0;
    bool evaluable_all_groups = false;
    bool positive_mean_mcc = false;
    bool bootstrap_favored = false;
    bool preferred = false;
};

struct SelectionTable {
    std::vector<SelectionRow> rows;
};

MetricSummary summarize_metric(const std::vector<MetricOutcome>& outcomes);

/// Rows per (category, signature matrix, model). A model is bootstrap
/// favored for a category when some comparison involving it in that
/// category has p_adjusted < alpha with the difference in its favor.
SelectionTable model_selection_report(const std::vector<HoldoutReport>& reports, const std::vector<ComparisonResult>& comparisons,
                                      double alpha = 0.05);

/// "0.67 (0.50-0.94)"
std::string format_mean_range(const MetricSummary& s);
std::string selection_table_text(const SelectionTable& t);
std::string selection_table_csv(const SelectionTable& t);
Json to_json(const SelectionTable& t);

}  // namespace xcohort::eval
