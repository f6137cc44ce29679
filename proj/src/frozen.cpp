#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "xcohort/error.hpp"
#include "xcohort/preprocess.hpp"

namespace xcohort::prep {

ZScoreParams fit_zscore(const data::FeatureMatrix& m) {
    const auto n = static_cast<Eigen::Index>(m.n_samples());
    if (n < 2) fail(ErrorCode::InsufficientSamples, "z-score fit needs at least 2 samples");
    ZScoreParams z;
    z.feature_names = m.feature_names();
    z.fit_fingerprint = sample_set_fingerprint(m);
    z.mean = m.values().colwise().mean().transpose();
    z.std.resize(z.mean.size());
    for (Eigen::Index j = 0; j < z.mean.size(); ++j) {
        const double var = (m.values().col(j).array() - z.mean[j]).square().sum() / static_cast<double>(n);
        if (!(var > 1e-24 * z.mean[j] * z.mean[j]) || var == 0.0) {
            fail(ErrorCode::ZeroVariance, "feature '" + z.feature_names[static_cast<std::size_t>(j)] + "' has zero variance");
        }
        z.std[j] = std::sqrt(var);
    }
    return z;
}

data::FeatureMatrix apply_zscore(const ZScoreParams& params, const data::FeatureMatrix& m) {
    const data::FeatureMatrix sub = m.select_features(params.feature_names);
    Eigen::MatrixXd out(sub.values().rows(), sub.values().cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = (sub.values()(i, j) - params.mean[j]) / params.std[j];
    }
    return sub.with_values(std::move(out));
}

data::FeatureMatrix drop_zero_variance(const data::FeatureMatrix& m) {
    const auto zero = m.zero_variance_columns();
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < m.n_features(); ++j) {
        if (std::find(zero.begin(), zero.end(), j) == zero.end()) keep.push_back(j);
    }
    return m.select_columns(keep);
}

std::vector<std::string> FrozenTransform::selected_names() const {
    std::vector<std::string> out;
    out.reserve(selected_features.size());
    for (auto idx : selected_features) out.push_back(input_features.at(idx));
    return out;
}

FrozenTransform freeze(std::optional<HotellingGate> gate, std::optional<CombatParams> combat, ZScoreParams zscore,
                       std::vector<std::size_t> selected_features, std::vector<std::string> input_features) {
    if (combat) {
        if (combat->fit_fingerprint != zscore.fit_fingerprint) {
            fail(ErrorCode::FingerprintMismatch, "ComBat and z-score parameters were fitted on different samples");
        }
        if (input_features != combat->feature_names) {
            fail(ErrorCode::FeatureMismatch, "input feature space differs from the ComBat fit");
        }
    }
    if (gate && gate->retained_fingerprint != zscore.fit_fingerprint) {
        fail(ErrorCode::FingerprintMismatch, "outlier gate retained set differs from the z-score fit samples");
    }
    const std::unordered_set<std::string> z_names(zscore.feature_names.begin(), zscore.feature_names.end());
    for (auto idx : selected_features) {
        if (idx >= input_features.size()) fail(ErrorCode::FeatureMismatch, "selected index " + std::to_string(idx) + " out of range");
        if (combat && combat->dropped_features.count(idx) != 0) {
            fail(ErrorCode::FeatureMismatch, "selected feature '" + input_features[idx] + "' was dropped at ComBat fit");
        }
        if (z_names.count(input_features[idx]) == 0) {
            fail(ErrorCode::FeatureMismatch, "selected feature '" + input_features[idx] + "' has no z-score parameters");
        }
    }
    FrozenTransform t;
    t.gate = std::move(gate);
    t.combat = std::move(combat);
    t.fit_fingerprint = zscore.fit_fingerprint;
    t.zscore = std::move(zscore);
    t.input_features = std::move(input_features);
    t.selected_features = std::move(selected_features);
    return t;
}

data::FeatureMatrix apply_frozen(const FrozenTransform& t, const data::FeatureMatrix& m, UnknownBatchPolicy policy,
                                 std::vector<std::string>* warnings) {
    if (t.combat) {
        const data::FeatureMatrix harmonized = apply_combat(*t.combat, m, policy, warnings);
        return apply_zscore(t.zscore, harmonized).select_features(t.selected_names());
    }
    return apply_zscore(t.zscore, m).select_features(t.selected_names());
}

Json to_json(const ZScoreParams& z) {
    return Json{{"feature_names", z.feature_names},
                {"mean", xcohort::to_json(z.mean)},
                {"std", xcohort::to_json(z.std)},
                {"fit_fingerprint", z.fit_fingerprint}};
}

ZScoreParams zscore_from_json(const Json& j) {
    ZScoreParams z;
    z.feature_names = require(j, "feature_names").get<std::vector<std::string>>();
    z.mean = vector_from_json(require(j, "mean"));
    z.std = vector_from_json(require(j, "std"));
    z.fit_fingerprint = require(j, "fit_fingerprint").get<std::string>();
    return z;
}

Json to_json(const FrozenTransform& t) {
    return Json{{"gate", t.gate ? to_json(*t.gate) : Json(nullptr)},
                {"combat", t.combat ? to_json(*t.combat) : Json(nullptr)},
                {"zscore", to_json(t.zscore)},
                {"input_features", t.input_features},
                {"selected_features", t.selected_features},
                {"selected_names", t.selected_names()},
                {"fit_fingerprint", t.fit_fingerprint}};
}

FrozenTransform frozen_from_json(const Json& j) {
    std::optional<HotellingGate> gate;
    std::optional<CombatParams> combat;
    if (!require(j, "gate").is_null()) gate = gate_from_json(j.at("gate"));
    if (!require(j, "combat").is_null()) combat = combat_from_json(j.at("combat"));
    FrozenTransform t = freeze(std::move(gate), std::move(combat), zscore_from_json(require(j, "zscore")),
                               require(j, "selected_features").get<std::vector<std::size_t>>(),
                               require(j, "input_features").get<std::vector<std::string>>());
    if (t.fit_fingerprint != require(j, "fit_fingerprint").get<std::string>()) {
        fail(ErrorCode::FingerprintMismatch, "stored transform fingerprint is inconsistent");
    }
    return t;
}

}  // namespace xcohort::prep
