#include <algorithm>
#include <cmath>

#include "xcohort/error.hpp"
#include "xcohort/preprocess.hpp"

namespace xcohort::prep {

namespace {

constexpr double kDeltaFloor = 1e-8;  // in standardized units, i.e. x pooled variance

struct Prior {
    double gamma_bar = 0.0;
    double tau2 = 0.0;
    double a = 0.0;  // inverse-gamma shape
    double b = 0.0;  // inverse-gamma scale
    double delta_mean = 1.0;
    bool delta_point_mass = false;
};

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size() - 1);
}

Prior moment_prior(const std::vector<double>& gamma_hat, const std::vector<double>& delta_hat) {
    Prior p;
    p.gamma_bar = mean_of(gamma_hat);
    p.tau2 = sample_var(gamma_hat, p.gamma_bar);
    const double m = mean_of(delta_hat);
    const double s2 = sample_var(delta_hat, m);
    p.delta_mean = m;
    if (!(s2 > 0.0)) {
        p.delta_point_mass = true;
    } else {
        p.a = (2.0 * s2 + m * m) / s2;
        p.b = (m * s2 + m * m * m) / s2;
        if (!std::isfinite(p.a) || !std::isfinite(p.b)) p.delta_point_mass = true;
    }
    return p;
}

struct Posterior {
    double gamma = 0.0;
    double delta2 = 1.0;
    int iterations = 0;
};

// Fixed-point iteration of the normal / inverse-gamma posterior means for one
// feature in one batch.
Posterior eb_posterior(const std::vector<double>& z, double gamma_hat, double delta_hat, const Prior& prior,
                       const CombatOptions& opt) {
    const double n = static_cast<double>(z.size());
    double g_old = gamma_hat;
    double d_old = delta_hat;
    Posterior post{g_old, d_old, 0};
    for (int it = 1; it <= opt.max_iterations; ++it) {
        const double denom = n * prior.tau2 + d_old;
        const double g_new = denom > 0.0 ? (n * prior.tau2 * gamma_hat + d_old * prior.gamma_bar) / denom : prior.gamma_bar;
        double d_new = prior.delta_mean;
        if (!prior.delta_point_mass) {
            double sum2 = 0.0;
            for (double v : z) sum2 += (v - g_new) * (v - g_new);
            d_new = (0.5 * sum2 + prior.b) / (0.5 * n + prior.a - 1.0);
        }
        const double change = std::max(std::fabs(g_new - g_old), std::fabs(d_new - d_old));
        g_old = g_new;
        d_old = d_new;
        post = {g_new, d_new, it};
        if (change < opt.tolerance) break;
    }
    post.delta2 = std::max(post.delta2, kDeltaFloor);
    return post;
}

}  // namespace

std::vector<std::string> CombatParams::kept_features() const {
    std::vector<std::string> out;
    for (std::size_t j = 0; j < feature_names.size(); ++j) {
        if (dropped_features.count(j) == 0) out.push_back(feature_names[j]);
    }
    return out;
}

UnknownBatchPolicy unknown_batch_policy_from_string(const std::string& s) {
    if (s == "standardize-only" || s == "STANDARDIZE_ONLY") return UnknownBatchPolicy::STANDARDIZE_ONLY;
    if (s == "reject" || s == "REJECT") return UnknownBatchPolicy::REJECT;
    fail(ErrorCode::ConfigInvalid, "unknown batch policy '" + s + "'");
}

CombatParams fit_combat(const data::FeatureMatrix& m, const CombatOptions& options) {
    const auto n = static_cast<Eigen::Index>(m.n_samples());
    const auto p = static_cast<Eigen::Index>(m.n_features());
    if (n == 0) fail(ErrorCode::NoBatches, "no samples to harmonize");

    std::map<std::string, std::vector<Eigen::Index>> rows_by_batch;
    for (Eigen::Index i = 0; i < n; ++i) rows_by_batch[m.samples()[static_cast<std::size_t>(i)].batch_id].push_back(i);
    for (const auto& [id, rows] : rows_by_batch) {
        if (rows.size() < 2) fail(ErrorCode::BatchTooSmall, "batch '" + id + "' has " + std::to_string(rows.size()) + " sample(s)");
    }
    const auto n_batches = static_cast<Eigen::Index>(rows_by_batch.size());

    CombatParams params;
    params.feature_names = m.feature_names();
    params.fit_fingerprint = sample_set_fingerprint(m);
    params.grand_mean = Eigen::VectorXd::Zero(p);
    params.pooled_std = Eigen::VectorXd::Zero(p);
    const Eigen::MatrixXd& y = m.values();

    // Grand mean and pooled within-batch variance (unbiased, n - n_batches).
    for (Eigen::Index j = 0; j < p; ++j) {
        params.grand_mean[j] = y.col(j).mean();
        double ss = 0.0;
        for (const auto& [id, rows] : rows_by_batch) {
            double bm = 0.0;
            for (auto r : rows) bm += y(r, j);
            bm /= static_cast<double>(rows.size());
            for (auto r : rows) ss += (y(r, j) - bm) * (y(r, j) - bm);
        }
        const double var = ss / static_cast<double>(n - n_batches);
        const double gm = params.grand_mean[j];
        if (!(var > 1e-24 * gm * gm) || var == 0.0) {
            params.dropped_features.insert(static_cast<std::size_t>(j));
        } else {
            params.pooled_std[j] = std::sqrt(var);
        }
    }
    std::vector<Eigen::Index> kept;
    for (Eigen::Index j = 0; j < p; ++j) {
        if (params.dropped_features.count(static_cast<std::size_t>(j)) == 0) kept.push_back(j);
    }
    if (kept.empty()) fail(ErrorCode::AllFeaturesConstant, "every feature has zero pooled variance");
    if (kept.size() < 2) fail(ErrorCode::InvalidValue, "empirical-Bayes priors need at least 2 non-constant features");

    for (const auto& [id, rows] : rows_by_batch) {
        const std::size_t nk = kept.size();
        std::vector<std::vector<double>> z(nk, std::vector<double>(rows.size()));
        std::vector<double> gamma_hat(nk);
        std::vector<double> delta_hat(nk);
        for (std::size_t c = 0; c < nk; ++c) {
            const Eigen::Index j = kept[c];
            for (std::size_t r = 0; r < rows.size(); ++r) {
                z[c][r] = (y(rows[r], j) - params.grand_mean[j]) / params.pooled_std[j];
            }
            gamma_hat[c] = mean_of(z[c]);
            delta_hat[c] = sample_var(z[c], gamma_hat[c]);
        }
        const Prior prior = moment_prior(gamma_hat, delta_hat);

        BatchEffect effect;
        effect.n = static_cast<int>(rows.size());
        effect.gamma = Eigen::VectorXd::Zero(p);
        effect.delta = Eigen::VectorXd::Ones(p);
        for (std::size_t c = 0; c < nk; ++c) {
            const Posterior post = eb_posterior(z[c], gamma_hat[c], delta_hat[c], prior, options);
            effect.gamma[kept[c]] = post.gamma;
            effect.delta[kept[c]] = std::sqrt(post.delta2);
            effect.iterations = std::max(effect.iterations, post.iterations);
        }
        params.batches.emplace(id, std::move(effect));
    }
    return params;
}

data::FeatureMatrix apply_combat(const CombatParams& params, const data::FeatureMatrix& m, UnknownBatchPolicy policy,
                                 std::vector<std::string>* warnings) {
    std::vector<Eigen::Index> fit_cols;
    std::vector<Eigen::Index> in_cols;
    std::vector<data::FeatureDescriptor> descriptors;
    for (std::size_t j = 0; j < params.feature_names.size(); ++j) {
        if (params.dropped_features.count(j) != 0) continue;
        const auto idx = m.feature_index(params.feature_names[j]);
        if (!idx) fail(ErrorCode::FeatureMismatch, "missing feature column '" + params.feature_names[j] + "'");
        fit_cols.push_back(static_cast<Eigen::Index>(j));
        in_cols.push_back(static_cast<Eigen::Index>(*idx));
        descriptors.push_back(m.descriptors()[*idx]);
    }
    const auto n = static_cast<Eigen::Index>(m.n_samples());
    Eigen::MatrixXd out(n, static_cast<Eigen::Index>(fit_cols.size()));
    std::set<std::string> reported;
    for (Eigen::Index i = 0; i < n; ++i) {
        const std::string& batch = m.samples()[static_cast<std::size_t>(i)].batch_id;
        const auto it = params.batches.find(batch);
        if (it == params.batches.end()) {
            if (policy == UnknownBatchPolicy::REJECT) fail(ErrorCode::UnknownBatch, "batch '" + batch + "' was not seen at fit time");
            if (warnings && reported.insert(batch).second) {
                warnings->push_back("unknown batch '" + batch + "': standardize-only (gamma = 0, delta = 1)");
            }
        }
        for (std::size_t c = 0; c < fit_cols.size(); ++c) {
            const Eigen::Index j = fit_cols[c];
            const double alpha = params.grand_mean[j];
            const double sigma = params.pooled_std[j];
            const double gamma = it == params.batches.end() ? 0.0 : it->second.gamma[j];
            const double delta = it == params.batches.end() ? 1.0 : it->second.delta[j];
            const double z = (m.values()(i, in_cols[c]) - alpha) / sigma;
            out(i, static_cast<Eigen::Index>(c)) = sigma * ((z - gamma) / delta) + alpha;
        }
    }
    return m.with_descriptors_and_values(std::move(descriptors), std::move(out));
}

Json to_json(const CombatParams& c) {
    Json batches = Json::object();
    for (const auto& [id, e] : c.batches) {
        batches[id] = Json{{"gamma", xcohort::to_json(e.gamma)},
                           {"delta", xcohort::to_json(e.delta)},
                           {"n", e.n},
                           {"iterations", e.iterations}};
    }
    return Json{{"feature_names", c.feature_names},
                {"grand_mean", xcohort::to_json(c.grand_mean)},
                {"pooled_std", xcohort::to_json(c.pooled_std)},
                {"batches", batches},
                {"dropped_features", std::vector<std::size_t>(c.dropped_features.begin(), c.dropped_features.end())},
                {"fit_fingerprint", c.fit_fingerprint}};
}

CombatParams combat_from_json(const Json& j) {
    CombatParams c;
    c.feature_names = require(j, "feature_names").get<std::vector<std::string>>();
    c.grand_mean = vector_from_json(require(j, "grand_mean"));
    c.pooled_std = vector_from_json(require(j, "pooled_std"));
    for (const auto& [id, e] : require(j, "batches").items()) {
        BatchEffect b;
        b.gamma = vector_from_json(require(e, "gamma"));
        b.delta = vector_from_json(require(e, "delta"));
        b.n = require(e, "n").get<int>();
        b.iterations = require(e, "iterations").get<int>();
        if (b.gamma.size() != c.grand_mean.size() || b.delta.size() != c.grand_mean.size()) {
            fail(ErrorCode::SchemaError, "batch '" + id + "' effect length mismatch");
        }
        c.batches.emplace(id, std::move(b));
    }
    for (auto idx : require(j, "dropped_features")) c.dropped_features.insert(idx.get<std::size_t>());
    c.fit_fingerprint = require(j, "fit_fingerprint").get<std::string>();
    return c;
}

}  // namespace xcohort::prep
