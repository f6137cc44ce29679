#pragma once

// Deterministic multi-site generator with planted batch effects, sparse
// linear signal, bimodal scores and label-linked survival.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xcohort/core_data.hpp"
#include "xcohort/json_io.hpp"

namespace xcohort::synth {

struct SynthConfig {
    int n_sites = 4;
    int n_per_site = 40;
    int n_features = 100;
    int n_signal_features = 10;
    double signal_strength = 1.0;
    double batch_shift_scale = 1.5;                 // sd of the per-site additive shift
    std::array<double, 2> batch_scale_range{0.7, 1.4};  // per-site multiplicative scale
    double noise_sigma = 0.1;
    double score_separation = 6.0;
    std::optional<double> survival_link;  // hazard ratio of label 1 vs label 0
    double censoring_rate = 0.2;
    int n_categories = 1;
    data::SignatureMatrix signature_matrix = data::SignatureMatrix::PAN_CANCER;
    std::vector<std::string> site_names;  // defaults to S1..Sn
    std::uint64_t seed = 0;

    void validate() const;
    std::string site_name(int s) const;
};

struct SynthTruth {
    std::vector<std::string> categories;
    std::vector<std::vector<std::size_t>> supports;  // per category
    std::vector<std::string> sample_ids;             // all sites, site order
    std::vector<std::vector<int>> labels;            // [category][sample]
    std::vector<std::vector<double>> latent;         // [category][sample]
    std::map<std::string, Eigen::VectorXd> site_shift;
    std::map<std::string, Eigen::VectorXd> site_scale;
};

struct SynthOutput {
    std::map<std::string, data::FeatureMatrix> cohorts;
    data::ScorePanel panel;
    SynthTruth truth;
};

/// Base features are N(0, 1) from per-(site, feature) streams. Category c
/// has support {(c k + t) mod p : t < k} with unit coefficients; its latent
/// is signal_strength * sum(support) + N(0, noise_sigma^2) and its label is
/// latent > 0 (the population median). Scores are 10 + label *
/// score_separation + N(0, 1), clipped at 0. Site effects x * scale + shift
/// are applied after the signal is built.
SynthOutput generate(const SynthConfig& config);

/// Feature name with parseable provenance tokens for column j.
std::string feature_name(int j);

SynthConfig config_from_json(const Json& j);
Json to_json(const SynthConfig& c);
Json to_json(const SynthTruth& t);

}  // namespace xcohort::synth
