#include "support.hpp"

#include "metric_oracle.hpp"
#include "xcohort/evaluation.hpp"
#include "xcohort/rng.hpp"

using namespace xcohort;
using namespace xcohort::eval;

namespace {

std::vector<int> bits(unsigned mask, int n) {
    std::vector<int> v;
    for (int i = 0; i < n; ++i) v.push_back(static_cast<int>((mask >> i) & 1u));
    return v;
}

std::vector<int> flipped(std::vector<int> v) {
    for (int& x : v) x = 1 - x;
    return v;
}

// n balanced truth labels; `acc` of the rows (spread over both classes) predicted correctly.
GroupPredictions planted_pair(int n, double acc_a, double acc_b, std::uint64_t seed) {
    GroupPredictions g;
    g.group_id = "G";
    Rng rng(seed);
    for (int i = 0; i < n; ++i) g.truth.push_back(i % 2);
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    const auto wrong_set = [&](double acc) {
        std::vector<int> pred = g.truth;
        rng.shuffle(order.begin(), order.end());
        const int n_wrong = static_cast<int>(std::lround((1.0 - acc) * n));
        for (int k = 0; k < n_wrong; ++k) pred[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] ^= 1;
        return pred;
    };
    g.pred_a = wrong_set(acc_a);
    g.pred_b = wrong_set(acc_b);
    return g;
}

}  // namespace

TEST_CASE("metrics: worked examples") {
    const MetricReport perfect = compute_metrics(std::vector<int>{1, 0, 1, 0}, std::vector<int>{1, 0, 1, 0});
    for (Metric m : kAllMetrics) CHECK(perfect.at(m) == MetricOutcome::of(1.0));

    const MetricReport one_class = compute_metrics(std::vector<int>{1, 1, 1, 1}, std::vector<int>{1, 0, 1, 1});
    CHECK_FALSE(one_class.at(Metric::BALANCED_ACCURACY).evaluable());
    CHECK_FALSE(one_class.at(Metric::MCC).evaluable());
    CHECK(one_class.at(Metric::ACCURACY) == MetricOutcome::of(0.75));
    CHECK(one_class.n_negative == 0);

    const MetricReport mixed = compute_metrics(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 0, 0});
    CHECK(mixed.at(Metric::PRECISION) == MetricOutcome::of(1.0));
    CHECK(mixed.at(Metric::RECALL) == MetricOutcome::of(0.5));
    CHECK(mixed.at(Metric::BALANCED_ACCURACY) == MetricOutcome::of(0.75));
    CHECK(mixed.at(Metric::MCC).value == doctest::Approx(2.0 / std::sqrt(12.0)).epsilon(1e-12));
    CHECK(std::abs(mixed.at(Metric::MCC).value - 0.5774) < 1e-4);

    const MetricReport single_minority = compute_metrics(std::vector<int>{1, 0, 0, 0}, std::vector<int>{1, 0, 0, 1});
    CHECK(single_minority.at(Metric::BALANCED_ACCURACY).state == MetricOutcome::State::UNSTABLE);
    CHECK(single_minority.at(Metric::BALANCED_ACCURACY).value == doctest::Approx(5.0 / 6.0));

    CHECK_ERROR_CODE(compute_metrics(std::vector<int>{1}, std::vector<int>{1, 0}), ErrorCode::LengthMismatch);
    CHECK_ERROR_CODE(compute_metrics(std::vector<int>{}, std::vector<int>{}), ErrorCode::EmptyInput);
}

TEST_CASE("metrics agree with the brute-force oracle for n <= 5") {
    long checked = 0;
    for (int n = 1; n <= 5; ++n) {
        for (unsigned t = 0; t < (1u << n); ++t) {
            for (unsigned p = 0; p < (1u << n); ++p) {
                const auto truth = bits(t, n), pred = bits(p, n);
                const MetricReport r = compute_metrics(truth, pred);
                for (Metric m : kAllMetrics) {
                    CHECK(testing::matches_oracle(r.at(m), testing::oracle_metric(truth, pred, m)));
                    ++checked;
                }
            }
        }
    }
    CHECK(checked == 6L * (4 + 16 + 64 + 256 + 1024));
}

TEST_CASE("mcc symmetries") {
    for (unsigned t = 0; t < 64; ++t) {
        for (unsigned p = 0; p < 64; ++p) {
            const auto truth = bits(t, 6), pred = bits(p, 6);
            const MetricOutcome base = compute_metrics(truth, pred).at(Metric::MCC);
            if (!base.evaluable()) continue;
            const MetricOutcome swapped = compute_metrics(flipped(truth), flipped(pred)).at(Metric::MCC);
            CHECK(swapped.value == doctest::Approx(base.value).epsilon(1e-15).scale(1.0));
            const MetricOutcome negated = compute_metrics(truth, flipped(pred)).at(Metric::MCC);
            REQUIRE(negated.evaluable());
            CHECK(negated.value == doctest::Approx(-base.value).epsilon(1e-15).scale(1.0));
        }
    }
}

TEST_CASE("bootstrap: identical predictions") {
    GroupPredictions g = planted_pair(60, 0.7, 0.7, 1);
    g.pred_b = g.pred_a;
    const ComparisonResult r = bootstrap_compare({g}, Metric::BALANCED_ACCURACY, BootstrapOptions{10000, 3, 6});
    CHECK(r.mean_diff == 0.0);
    CHECK(r.ci_low == 0.0);
    CHECK(r.ci_high == 0.0);
    CHECK(r.ci_high - r.ci_low < 1e-9);
    CHECK(r.p_raw == 1.0);
    CHECK(r.p_adjusted == 1.0);
    CHECK(r.n_resamples_used == 10000);
}

TEST_CASE("bootstrap: planted 90% vs 60% gap is detected after Bonferroni") {
    const GroupPredictions g = planted_pair(200, 0.9, 0.6, 2);
    const ComparisonResult r = bootstrap_compare({g}, Metric::BALANCED_ACCURACY, BootstrapOptions{10000, 4, 6});
    CHECK(r.p_adjusted < 0.05);
    CHECK(r.mean_diff > 0.2);
    CHECK(r.ci_low <= r.mean_diff);
    CHECK(r.mean_diff <= r.ci_high);
    CHECK(r.p_raw == doctest::Approx(1.0 / 10000));
}

TEST_CASE("bootstrap resampling preserves class counts") {
    // All-ones vs all-zeros: accuracy difference is (n_pos - n_neg) / n in every
    // resample if and only if each class keeps its size.
    GroupPredictions g;
    g.group_id = "G";
    g.truth = {1, 1, 1, 0, 0, 0, 0, 0, 0, 0};
    g.pred_a.assign(10, 1);
    g.pred_b.assign(10, 0);
    const auto d = bootstrap_differences({g}, Metric::ACCURACY, BootstrapOptions{2000, 5, 1});
    REQUIRE(d.size() == 2000);
    for (double v : d) CHECK(v == doctest::Approx(-0.4).epsilon(1e-15));
}

TEST_CASE("bootstrap: pooled vs per-group modes and skips") {
    GroupPredictions g1 = planted_pair(40, 0.8, 0.6, 6);
    GroupPredictions g2 = planted_pair(40, 0.8, 0.6, 7);
    g2.group_id = "H";
    BootstrapOptions opt{1000, 8, 1};
    const auto per_group = bootstrap_compare({g1, g2}, Metric::BALANCED_ACCURACY, opt);
    opt.mode = BootstrapMode::POOLED;
    const auto pooled = bootstrap_compare({g1, g2}, Metric::BALANCED_ACCURACY, opt);
    CHECK(per_group.mean_diff > 0.0);
    CHECK(pooled.mean_diff > 0.0);
    CHECK(per_group.mode == BootstrapMode::PER_GROUP);
    CHECK(pooled.mode == BootstrapMode::POOLED);

    // Single-class truth: BA is never evaluable, so every resample is skipped.
    GroupPredictions one;
    one.group_id = "O";
    one.truth.assign(10, 1);
    one.pred_a.assign(10, 1);
    one.pred_b.assign(10, 0);
    const ComparisonResult r = bootstrap_compare({one}, Metric::BALANCED_ACCURACY, BootstrapOptions{1000, 1, 1});
    CHECK(r.non_evaluable);
    CHECK(r.n_resamples_skipped == 1000);
    g1.pred_b.pop_back();
    CHECK_ERROR_CODE(bootstrap_compare({g1}, Metric::BALANCED_ACCURACY, BootstrapOptions{1000, 1, 1}), ErrorCode::AlignmentError);
}

TEST_CASE("bootstrap is deterministic in its seed") {
    const GroupPredictions g = planted_pair(50, 0.8, 0.7, 9);
    const auto a = bootstrap_differences({g}, Metric::MCC, BootstrapOptions{1000, 10, 1});
    CHECK(a == bootstrap_differences({g}, Metric::MCC, BootstrapOptions{1000, 10, 1}));
    CHECK(a != bootstrap_differences({g}, Metric::MCC, BootstrapOptions{1000, 11, 1}));
}

TEST_CASE("bonferroni and quantiles") {
    CHECK(bonferroni(0.02, 6) == doctest::Approx(0.12));
    CHECK(bonferroni(0.3, 6) == 1.0);
    const std::vector<double> s{1.0, 2.0, 3.0, 4.0, 5.0};
    CHECK(quantile_sorted(s, 0.0) == 1.0);
    CHECK(quantile_sorted(s, 0.5) == 3.0);
    CHECK(quantile_sorted(s, 0.125) == doctest::Approx(1.5));
    CHECK(quantile_sorted(s, 1.0) == 5.0);
}

namespace {

HoldoutReport report_with(const std::string& group, const std::string& model, MetricOutcome ba, MetricOutcome mcc) {
    HoldoutReport r;
    r.group_id = group;
    r.category = "immune_score";
    r.signature_matrix = "PAN_CANCER";
    r.model_id = model;
    for (Metric m : kAllMetrics) r.metrics.metrics[m] = MetricOutcome::of(0.8);
    r.metrics.metrics[Metric::BALANCED_ACCURACY] = ba;
    r.metrics.metrics[Metric::MCC] = mcc;
    return r;
}

}  // namespace

TEST_CASE("selection table: mean and range, exclusions, flags") {
    const MetricSummary s = summarize_metric({MetricOutcome::of(0.50), MetricOutcome::of(0.58), MetricOutcome::of(0.94)});
    CHECK(s.mean == doctest::Approx(0.6733333333));
    CHECK(format_mean_range(s) == "0.67 (0.50-0.94)");

    const MetricSummary partial = summarize_metric({MetricOutcome::of(0.6), MetricOutcome::non_evaluable("x"), MetricOutcome::of(0.8)});
    CHECK(partial.n_evaluable == 2);
    CHECK(partial.n_excluded == 1);
    CHECK(partial.mean == doctest::Approx(0.7));

    const MetricSummary none = summarize_metric({MetricOutcome::non_evaluable("a"), MetricOutcome::non_evaluable("b")});
    CHECK_FALSE(none.evaluable);
    CHECK(format_mean_range(none) == "non evaluable");

    std::vector<HoldoutReport> reports;
    for (const char* g : {"G1", "G2", "G3"}) reports.push_back(report_with(g, "ENS_pan", MetricOutcome::of(0.7), MetricOutcome::of(0.3)));
    reports.push_back(report_with("G1", "SVM_pan", MetricOutcome::of(0.6), MetricOutcome::of(0.1)));
    reports.push_back(report_with("G2", "SVM_pan", MetricOutcome::non_evaluable("single class"), MetricOutcome::non_evaluable("z")));
    ComparisonResult c;
    c.category = "immune_score";
    c.model_a = "ENS_pan";
    c.model_b = "SVM_pan";
    c.mean_diff = 0.1;
    c.p_adjusted = 0.01;
    const SelectionTable t = model_selection_report(reports, {c});
    REQUIRE(t.rows.size() == 2);
    const SelectionRow& ens = t.rows[0].model_id == "ENS_pan" ? t.rows[0] : t.rows[1];
    const SelectionRow& svm = t.rows[0].model_id == "ENS_pan" ? t.rows[1] : t.rows[0];
    CHECK(ens.preferred);
    CHECK(ens.bootstrap_favored);
    CHECK_FALSE(svm.evaluable_all_groups);
    CHECK_FALSE(svm.bootstrap_favored);
    CHECK(svm.metrics.at(Metric::BALANCED_ACCURACY).n_excluded == 1);
    CHECK(selection_table_csv(t).find("0.70 (0.70-0.70)") != std::string::npos);
    CHECK(selection_table_text(t).find("non evaluable") == std::string::npos);
}

TEST_CASE("holdout report JSON carries exactly the six metrics") {
    HoldoutReport r;
    r.group_id = "G1";
    r.category = "immune_score";
    r.model_id = "SVM_pan";
    r.metrics = compute_metrics(std::vector<int>{1, 1, 0, 0}, std::vector<int>{1, 0, 0, 0});
    const Json j = to_json(r);
    const Json& m = j.at("metrics");
    REQUIRE(m.is_object());
    CHECK(m.size() == 6);
    for (const char* name : {"precision", "recall", "accuracy", "balanced_accuracy", "f1", "mcc"}) CHECK(m.contains(name));
}
