#include "xcohort/cohort_stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "xcohort/error.hpp"
#include "xcohort/special.hpp"

namespace xcohort::stats {

namespace {

void check_times(std::span<const double> times, std::span<const int> events) {
    if (times.size() != events.size()) fail(ErrorCode::LengthMismatch, "times and event flags differ in length");
    for (double t : times) {
        if (!std::isfinite(t)) fail(ErrorCode::InvalidValue, "non-finite survival time");
        if (t < 0.0) fail(ErrorCode::NegativeTime, "negative survival time");
    }
    for (int e : events) {
        if (e != 0 && e != 1) fail(ErrorCode::InvalidValue, "event flags must be 0 or 1");
    }
}

}  // namespace

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) fail(ErrorCode::TooFewGroups, "ANOVA needs at least 2 groups");
    std::size_t total = 0;
    std::vector<double> means;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].size() < 2) fail(ErrorCode::EmptyGroup, "group " + std::to_string(g) + " has fewer than 2 values");
        double s = 0.0;
        for (double v : groups[g]) {
            if (!std::isfinite(v)) fail(ErrorCode::InvalidValue, "non-finite value in ANOVA input");
            s += v;
        }
        means.push_back(s / static_cast<double>(groups[g].size()));
        total += groups[g].size();
    }
    const auto k = groups.size();
    // Grand mean as an offset from the first group's mean, so identical group
    // means give an exactly zero between-group sum.
    double offset = 0.0;
    for (std::size_t g = 0; g < k; ++g) offset += static_cast<double>(groups[g].size()) * (means[g] - means[0]);
    offset /= static_cast<double>(total);
    double ssb = 0.0;
    double ssw = 0.0;
    for (std::size_t g = 0; g < k; ++g) {
        const double d = (means[g] - means[0]) - offset;
        ssb += static_cast<double>(groups[g].size()) * d * d;
        for (double v : groups[g]) ssw += (v - means[g]) * (v - means[g]);
    }
    AnovaResult r;
    r.df_between = static_cast<int>(k - 1);
    r.df_within = static_cast<int>(total - k);
    if (ssb == 0.0) {
        r.f_statistic = 0.0;
        r.p_value = 1.0;
    } else if (ssw == 0.0) {
        r.f_statistic = std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
    } else {
        r.f_statistic = (ssb / r.df_between) / (ssw / r.df_within);
        r.p_value = math::f_sf(r.f_statistic, r.df_between, r.df_within);
    }
    return r;
}

ChiSquareResult chi_square_independence(const std::vector<std::vector<double>>& table) {
    const std::size_t r = table.size();
    if (r < 2) fail(ErrorCode::InvalidValue, "contingency table needs at least 2 rows");
    const std::size_t c = table[0].size();
    if (c < 2) fail(ErrorCode::InvalidValue, "contingency table needs at least 2 columns");
    std::vector<double> row_sum(r, 0.0);
    std::vector<double> col_sum(c, 0.0);
    double n = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
        if (table[i].size() != c) fail(ErrorCode::DimensionMismatch, "ragged contingency table");
        for (std::size_t j = 0; j < c; ++j) {
            const double v = table[i][j];
            if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorCode::InvalidValue, "counts must be finite and non-negative");
            row_sum[i] += v;
            col_sum[j] += v;
            n += v;
        }
    }
    ChiSquareResult out;
    out.df = static_cast<int>((r - 1) * (c - 1));
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            const double e = row_sum[i] * col_sum[j] / n;
            if (!(e > 0.0)) fail(ErrorCode::ZeroExpectedCell, "expected count is zero at cell (" + std::to_string(i) + ", " + std::to_string(j) + ")");
            out.statistic += (table[i][j] - e) * (table[i][j] - e) / e;
        }
    }
    out.p_value = out.statistic == 0.0 ? 1.0 : math::chi_square_sf(out.statistic, out.df);
    return out;
}

KmCurve km_estimate(std::span<const double> times, std::span<const int> events) {
    check_times(times, events);
    if (times.empty()) fail(ErrorCode::EmptyInput, "no survival times");
    std::vector<std::size_t> order(times.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return times[a] < times[b]; });

    KmCurve c;
    c.times.push_back(0.0);
    c.survival.push_back(1.0);
    c.at_risk.push_back(static_cast<int>(times.size()));
    c.events.push_back(0);
    c.censored.push_back(0);

    // Between censorings the product-limit terms telescope, so S is kept as
    // anchor * (at risk now) / (at risk at anchor); exact without censoring.
    double anchor_s = 1.0;
    int anchor_n = static_cast<int>(times.size());
    int remaining = anchor_n;
    std::size_t k = 0;
    while (k < order.size()) {
        const double t = times[order[k]];
        int d = 0;
        int cen = 0;
        while (k < order.size() && times[order[k]] == t) {
            (events[order[k]] == 1 ? d : cen) += 1;
            ++k;
        }
        const int n_t = remaining;
        remaining -= d;
        const double s = anchor_s * static_cast<double>(remaining) / static_cast<double>(anchor_n);
        if (cen > 0) {
            remaining -= cen;
            anchor_s = s;
            anchor_n = remaining;
        }
        if (t == 0.0 && c.times.size() == 1) {
            c.survival[0] = s;
            c.events[0] = d;
            c.censored[0] = cen;
        } else {
            c.times.push_back(t);
            c.survival.push_back(s);
            c.at_risk.push_back(n_t);
            c.events.push_back(d);
            c.censored.push_back(cen);
        }
        if (anchor_n == 0) anchor_n = 1;  // nobody left; S is frozen from here
    }
    return c;
}

double KmCurve::survival_at(double t) const {
    double s = 1.0;
    for (std::size_t i = 0; i < times.size() && times[i] <= t; ++i) s = survival[i];
    return s;
}

LogRankResult logrank_test(std::span<const double> times_a, std::span<const int> events_a, std::span<const double> times_b,
                           std::span<const int> events_b) {
    check_times(times_a, events_a);
    check_times(times_b, events_b);
    if (times_a.empty() || times_b.empty()) fail(ErrorCode::EmptyGroup, "log-rank needs both groups non-empty");

    struct Obs {
        double t;
        int event;
        int group;
    };
    std::vector<Obs> all;
    for (std::size_t i = 0; i < times_a.size(); ++i) all.push_back({times_a[i], events_a[i], 0});
    for (std::size_t i = 0; i < times_b.size(); ++i) all.push_back({times_b[i], events_b[i], 1});
    std::stable_sort(all.begin(), all.end(), [](const Obs& x, const Obs& y) { return x.t < y.t; });

    double n_a = static_cast<double>(times_a.size());
    double n = static_cast<double>(all.size());
    double observed = 0.0;
    double expected = 0.0;
    double variance = 0.0;
    int total_events = 0;
    std::size_t k = 0;
    while (k < all.size()) {
        const double t = all[k].t;
        double d = 0.0;
        double d_a = 0.0;
        double leave = 0.0;
        double leave_a = 0.0;
        while (k < all.size() && all[k].t == t) {
            if (all[k].event) {
                d += 1.0;
                if (all[k].group == 0) d_a += 1.0;
            }
            leave += 1.0;
            if (all[k].group == 0) leave_a += 1.0;
            ++k;
        }
        if (d > 0.0) {
            total_events += static_cast<int>(d);
            observed += d_a;
            expected += d * n_a / n;
            if (n > 1.0) variance += d * (n_a / n) * (1.0 - n_a / n) * (n - d) / (n - 1.0);
        }
        n -= leave;
        n_a -= leave_a;
    }
    if (total_events == 0) fail(ErrorCode::NoEvents, "log-rank needs at least one event");
    LogRankResult r;
    r.observed_a = observed;
    r.expected_a = expected;
    if (variance > 0.0) {
        r.chi_square = (observed - expected) * (observed - expected) / variance;
        r.p_value = r.chi_square == 0.0 ? 1.0 : math::chi_square_sf(r.chi_square, 1.0);
    }
    return r;
}

std::string km_to_csv(const KmCurve& c) {
    std::string out = "time,survival,at_risk,events,censored\n";
    char buf[128];
    for (std::size_t i = 0; i < c.times.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%d,%d\n", c.times[i], c.survival[i], c.at_risk[i], c.events[i], c.censored[i]);
        out += buf;
    }
    return out;
}

Json to_json(const AnovaResult& r) {
    return Json{{"f_statistic", r.f_statistic}, {"df_between", r.df_between}, {"df_within", r.df_within}, {"p_value", r.p_value}};
}

Json to_json(const ChiSquareResult& r) { return Json{{"statistic", r.statistic}, {"df", r.df}, {"p_value", r.p_value}}; }

Json to_json(const LogRankResult& r) {
    return Json{{"chi_square", r.chi_square},
                {"df", r.df},
                {"p_value", r.p_value},
                {"observed_a", r.observed_a},
                {"expected_a", r.expected_a}};
}

Json to_json(const KmCurve& c) {
    return Json{{"times", c.times}, {"survival", c.survival}, {"at_risk", c.at_risk}, {"events", c.events}, {"censored", c.censored}};
}

}  // namespace xcohort::stats
