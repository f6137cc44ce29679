#pragma once

// Outlier gating (PCA + Hotelling T^2), parametric empirical-Bayes ComBat,
// Z-score normalization and the frozen transform that replays all fitted
// parameters on unseen samples.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "xcohort/core_data.hpp"
#include "xcohort/json_io.hpp"

namespace xcohort::prep {

/// Order-independent fingerprint of the (sample_id, batch_id) set of a matrix.
std::string sample_set_fingerprint(const data::FeatureMatrix& m);
std::string sample_set_fingerprint(const std::vector<data::SampleMeta>& samples);

/// PCA over standardized features. Zero-variance columns get scale 0 and
/// zero loadings so they never contribute to scores.
struct PcaModel {
    std::vector<std::string> feature_names;
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    Eigen::MatrixXd components;  // k x p, orthonormal rows
    Eigen::VectorXd explained_variance;
    int k = 0;

    /// n x k matrix of component scores; columns matched by name.
    Eigen::MatrixXd transform(const data::FeatureMatrix& m) const;
    Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& scores) const;
};

PcaModel fit_pca(const data::FeatureMatrix& m, int k);

struct HotellingGate {
    PcaModel pca;
    double alpha = 0.01;
    int n_fit = 0;
    double t2_critical = 0.0;
    std::vector<std::string> flagged;
    Eigen::VectorXd fit_t2;
    std::string retained_fingerprint;  // sample set left after removing flagged

    Eigen::VectorXd t2(const data::FeatureMatrix& m) const;
};

/// k(n-1)/(n-k) * F^-1(1 - alpha; k, n - k)
double hotelling_critical_value(int n, int k, double alpha);

HotellingGate hotelling_gate(const data::FeatureMatrix& m, int k = 2, double alpha = 0.01);

/// Drops the gate's flagged samples.
data::FeatureMatrix remove_flagged(const data::FeatureMatrix& m, const HotellingGate& gate);

struct BatchEffect {
    Eigen::VectorXd gamma;  // additive, EB-shrunk
    Eigen::VectorXd delta;  // multiplicative (standard-deviation scale), EB-shrunk
    int n = 0;
    int iterations = 0;
};

struct CombatParams {
    std::vector<std::string> feature_names;
    Eigen::VectorXd grand_mean;
    Eigen::VectorXd pooled_std;
    std::map<std::string, BatchEffect> batches;
    std::set<std::size_t> dropped_features;
    std::string fit_fingerprint;

    bool knows_batch(const std::string& id) const { return batches.count(id) != 0; }
    std::vector<std::string> kept_features() const;
};

enum class UnknownBatchPolicy { STANDARDIZE_ONLY, REJECT };

UnknownBatchPolicy unknown_batch_policy_from_string(const std::string& s);

struct CombatOptions {
    double tolerance = 1e-6;
    int max_iterations = 500;
};

CombatParams fit_combat(const data::FeatureMatrix& m, const CombatOptions& options = {});

/// Output holds the kept (non-dropped) features only. Unknown batches under
/// STANDARDIZE_ONLY pass through with gamma = 0, delta = 1 and a warning.
data::FeatureMatrix apply_combat(const CombatParams& params, const data::FeatureMatrix& m,
                                 UnknownBatchPolicy policy = UnknownBatchPolicy::STANDARDIZE_ONLY,
                                 std::vector<std::string>* warnings = nullptr);

struct ZScoreParams {
    std::vector<std::string> feature_names;
    Eigen::VectorXd mean;
    Eigen::VectorXd std;  // population standard deviation
    std::string fit_fingerprint;
};

ZScoreParams fit_zscore(const data::FeatureMatrix& m);
data::FeatureMatrix apply_zscore(const ZScoreParams& params, const data::FeatureMatrix& m);

/// Drops columns with zero spread; used when ComBat is disabled.
data::FeatureMatrix drop_zero_variance(const data::FeatureMatrix& m);

struct FrozenTransform {
    std::optional<HotellingGate> gate;
    std::optional<CombatParams> combat;
    ZScoreParams zscore;
    std::vector<std::string> input_features;  // column space selected indices refer to
    std::vector<std::size_t> selected_features;
    std::string fit_fingerprint;

    std::vector<std::string> selected_names() const;
};

FrozenTransform freeze(std::optional<HotellingGate> gate, std::optional<CombatParams> combat, ZScoreParams zscore,
                       std::vector<std::size_t> selected_features, std::vector<std::string> input_features);

/// combat -> z-score -> column selection, using stored parameters only.
data::FeatureMatrix apply_frozen(const FrozenTransform& t, const data::FeatureMatrix& m,
                                 UnknownBatchPolicy policy = UnknownBatchPolicy::STANDARDIZE_ONLY,
                                 std::vector<std::string>* warnings = nullptr);

Json to_json(const PcaModel& p);
Json to_json(const HotellingGate& g);
Json to_json(const CombatParams& c);
Json to_json(const ZScoreParams& z);
Json to_json(const FrozenTransform& t);
PcaModel pca_from_json(const Json& j);
HotellingGate gate_from_json(const Json& j);
CombatParams combat_from_json(const Json& j);
ZScoreParams zscore_from_json(const Json& j);
FrozenTransform frozen_from_json(const Json& j);

}  // namespace xcohort::prep
