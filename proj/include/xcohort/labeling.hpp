#pragma once

// Two-component 1-D Gaussian mixture binarization of continuous scores.

#include <array>
#include <span>
#include <string>
#include <vector>

#include "xcohort/core_data.hpp"
#include "xcohort/error.hpp"
#include "xcohort/json_io.hpp"

namespace xcohort::label {

struct GmmModel {
    std::array<double, 2> weights{0.5, 0.5};
    std::array<double, 2> means{0.0, 0.0};  // means[0] < means[1] after canonicalization
    std::array<double, 2> variances{1.0, 1.0};
    double log_likelihood = 0.0;
    int n_iter = 0;
    bool converged = false;

    /// {P(low | x), P(high | x)}
    std::array<double, 2> posterior(double x) const;
    double posterior_high(double x) const { return posterior(x)[1]; }
};

struct EmOptions {
    double tolerance = 1e-6;  // stop when the log-likelihood gain falls below this
    int max_iterations = 500;
};

struct EmRun {
    GmmModel model;                // not canonicalized
    std::vector<double> ll_trace;  // log-likelihood after each E-step, starting at the initial point
};

/// A single EM run from the given initial means (weights 0.5, both variances
/// equal to the data variance).
EmRun run_em(std::span<const double> scores, double init_mean0, double init_mean1, const EmOptions& options = {});

/// Ten deterministic restarts: quantile pairs (q, 1-q) for q in
/// {0.1, 0.2, 0.3, 0.4, 0.05}, each tried in both component orders. The best
/// log-likelihood wins (first on ties) and components are relabeled so that
/// component 1 has the larger mean.
GmmModel fit_gmm(std::span<const double> scores, const EmOptions& options = {});

/// Label 1 iff P(high | x) >= 0.5.
int label_of(const GmmModel& model, double x);

struct BinaryLabelSet {
    std::string category;
    data::SignatureMatrix signature_matrix = data::SignatureMatrix::PAN_CANCER;
    std::vector<std::string> sample_ids;
    std::vector<int> labels;
    std::vector<double> posteriors;
    GmmModel model;
};

struct SkippedCategory {
    std::string category;
    ErrorCode code;
    std::string reason;
};

struct PanelLabels {
    data::SignatureMatrix signature_matrix = data::SignatureMatrix::PAN_CANCER;
    std::vector<BinaryLabelSet> sets;
    std::vector<SkippedCategory> skipped;

    const BinaryLabelSet* find(const std::string& category) const;
};

BinaryLabelSet label_with(const GmmModel& model, const std::string& category, data::SignatureMatrix matrix,
                          const std::vector<std::string>& sample_ids, std::span<const double> scores);

PanelLabels binarize_panel(const data::ScorePanel& panel, const EmOptions& options = {});

/// Labels CSV: sample_id, then one {0,1} column per labeled category.
std::string labels_to_csv(const PanelLabels& labels);
/// Sidecar: per-category GMM parameters and skip reasons.
Json labels_sidecar(const PanelLabels& labels);

/// Reads a labels CSV (sample_id + {0,1} columns). The returned sets carry
/// no model or posteriors.
PanelLabels parse_labels_csv(std::string_view text, data::SignatureMatrix matrix);

Json to_json(const GmmModel& m);
GmmModel gmm_from_json(const Json& j);

}  // namespace xcohort::label
