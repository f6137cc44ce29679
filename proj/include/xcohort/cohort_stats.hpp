#pragma once

// Cohort comparison tests (one-way ANOVA, chi-square independence) and
// survival analysis (Kaplan-Meier, two-group log-rank).

#include <span>
#include <string>
#include <vector>

#include "xcohort/json_io.hpp"

namespace xcohort::stats {

struct AnovaResult {
    double f_statistic = 0.0;
    int df_between = 0;
    int df_within = 0;
    double p_value = 1.0;
};

AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups);

struct ChiSquareResult {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
};

ChiSquareResult chi_square_independence(const std::vector<std::vector<double>>& table);

/// One row per distinct observed time, preceded by a time-0 row with S = 1.
/// At a shared time, events are applied before censorings.
struct KmCurve {
    std::vector<double> times;
    std::vector<double> survival;  // S just after each time
    std::vector<int> at_risk;
    std::vector<int> events;
    std::vector<int> censored;

    /// Right-continuous step value at t.
    double survival_at(double t) const;
};

KmCurve km_estimate(std::span<const double> times, std::span<const int> events);

struct LogRankResult {
    double chi_square = 0.0;
    int df = 1;
    double p_value = 1.0;
    double observed_a = 0.0;
    double expected_a = 0.0;
};

LogRankResult logrank_test(std::span<const double> times_a, std::span<const int> events_a, std::span<const double> times_b,
                           std::span<const int> events_b);

std::string km_to_csv(const KmCurve& c);
Json to_json(const AnovaResult& r);
Json to_json(const ChiSquareResult& r);
Json to_json(const LogRankResult& r);
Json to_json(const KmCurve& c);

}  // namespace xcohort::stats
