#include <algorithm>
#include <cmath>

#include "xcohort/error.hpp"
#include "xcohort/evaluation.hpp"
#include "xcohort/rng.hpp"

namespace xcohort::eval {

namespace {

struct PreparedGroup {
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    const GroupPredictions* source = nullptr;
};

std::vector<GroupPredictions> pooled(const std::vector<GroupPredictions>& groups) {
    GroupPredictions all;
    all.group_id = "pooled";
    for (const auto& g : groups) {
        all.truth.insert(all.truth.end(), g.truth.begin(), g.truth.end());
        all.pred_a.insert(all.pred_a.end(), g.pred_a.begin(), g.pred_a.end());
        all.pred_b.insert(all.pred_b.end(), g.pred_b.begin(), g.pred_b.end());
    }
    return {all};
}

}  // namespace

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) fail(ErrorCode::EmptyInput, "quantile of an empty sample");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double bonferroni(double p_raw, int m) {
    if (m < 1) fail(ErrorCode::InvalidValue, "comparison count must be >= 1");
    return std::min(1.0, p_raw * m);
}

std::vector<double> bootstrap_differences(const std::vector<GroupPredictions>& input, Metric metric, const BootstrapOptions& options,
                                          int* skipped) {
    const std::vector<GroupPredictions> groups = options.mode == BootstrapMode::POOLED ? pooled(input) : input;
    std::vector<PreparedGroup> prepared;
    for (const auto& g : groups) {
        if (g.truth.size() != g.pred_a.size() || g.truth.size() != g.pred_b.size()) {
            fail(ErrorCode::AlignmentError, "group '" + g.group_id + "' has misaligned prediction vectors");
        }
        if (g.truth.empty()) fail(ErrorCode::AlignmentError, "group '" + g.group_id + "' is empty");
        PreparedGroup p;
        p.source = &g;
        for (std::size_t i = 0; i < g.truth.size(); ++i) (g.truth[i] == 1 ? p.positives : p.negatives).push_back(i);
        prepared.push_back(std::move(p));
    }

    std::vector<double> diffs;
    diffs.reserve(static_cast<std::size_t>(options.B));
    int n_skipped = 0;
    for (int b = 0; b < options.B; ++b) {
        Rng rng = Rng::stream(options.seed, {static_cast<std::uint64_t>(b)});
        double sum = 0.0;
        int used = 0;
        for (const auto& g : prepared) {
            ConfusionMatrix ca;
            ConfusionMatrix cb;
            const auto draw = [&](const std::vector<std::size_t>& pool, int truth) {
                for (std::size_t k = 0; k < pool.size(); ++k) {
                    const std::size_t i = pool[rng.below(pool.size())];
                    const int pa = g.source->pred_a[i];
                    const int pb = g.source->pred_b[i];
                    if (truth == 1) {
                        (pa == 1 ? ca.tp : ca.fn) += 1;
                        (pb == 1 ? cb.tp : cb.fn) += 1;
                    } else {
                        (pa == 1 ? ca.fp : ca.tn) += 1;
                        (pb == 1 ? cb.fp : cb.tn) += 1;
                    }
                }
            };
            draw(g.positives, 1);
            draw(g.negatives, 0);
            const MetricOutcome ma = metric_from_counts(ca, metric);
            const MetricOutcome mb = metric_from_counts(cb, metric);
            if (ma.evaluable() && mb.evaluable()) {
                sum += ma.value - mb.value;
                ++used;
            }
        }
        if (used == 0) {
            ++n_skipped;
        } else {
            diffs.push_back(sum / used);
        }
    }
    if (skipped) *skipped = n_skipped;
    return diffs;
}

ComparisonResult bootstrap_compare(const std::vector<GroupPredictions>& groups, Metric metric, const BootstrapOptions& options) {
    if (options.B < 1000) fail(ErrorCode::InvalidValue, "bootstrap needs B >= 1000");
    if (groups.empty()) fail(ErrorCode::AlignmentError, "no groups to compare");
    ComparisonResult r;
    r.metric = metric;
    r.mode = options.mode;
    r.B = options.B;
    r.m = options.m;
    int skipped = 0;
    std::vector<double> d = bootstrap_differences(groups, metric, options, &skipped);
    r.n_resamples_skipped = skipped;
    r.n_resamples_used = static_cast<int>(d.size());
    if (2 * skipped > options.B) {
        r.non_evaluable = true;
        r.reason = "more than half of the resamples had no evaluable group";
        r.p_raw = 1.0;
        r.p_adjusted = 1.0;
        return r;
    }
    double sum = 0.0;
    int le = 0;
    int ge = 0;
    for (double v : d) {
        sum += v;
        le += v <= 0.0 ? 1 : 0;
        ge += v >= 0.0 ? 1 : 0;
    }
    const double used = static_cast<double>(d.size());
    r.mean_diff = sum / used;
    std::sort(d.begin(), d.end());
    r.ci_low = quantile_sorted(d, 0.025);
    r.ci_high = quantile_sorted(d, 0.975);
    const double two_sided = 2.0 * std::min(le / used, ge / used);
    r.p_raw = std::clamp(two_sided, 1.0 / options.B, 1.0);
    r.p_adjusted = bonferroni(r.p_raw, options.m);
    return r;
}

Json to_json(const ComparisonResult& r) {
    Json j{{"category", r.category},
           {"model_a", r.model_a},
           {"model_b", r.model_b},
           {"metric", to_string(r.metric)},
           {"mode", r.mode == BootstrapMode::PER_GROUP ? "per_group" : "pooled"},
           {"B", r.B},
           {"m", r.m},
           {"n_resamples_used", r.n_resamples_used},
           {"n_resamples_skipped", r.n_resamples_skipped},
           {"non_evaluable", r.non_evaluable}};
    if (r.non_evaluable) {
        j["reason"] = r.reason;
    } else {
        j["mean_diff"] = r.mean_diff;
        j["ci_low"] = r.ci_low;
        j["ci_high"] = r.ci_high;
        j["p_raw"] = r.p_raw;
        j["p_adjusted"] = r.p_adjusted;
    }
    return j;
}

}  // namespace xcohort::eval
