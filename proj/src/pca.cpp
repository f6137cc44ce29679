#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <Eigen/SVD>

#include "xcohort/error.hpp"
#include "xcohort/preprocess.hpp"
#include "xcohort/special.hpp"

namespace xcohort::prep {

namespace {

std::vector<Eigen::Index> columns_by_name(const std::vector<std::string>& names, const data::FeatureMatrix& m) {
    std::vector<Eigen::Index> cols;
    cols.reserve(names.size());
    for (const auto& n : names) {
        const auto j = m.feature_index(n);
        if (!j) fail(ErrorCode::FeatureMismatch, "missing feature column '" + n + "'");
        cols.push_back(static_cast<Eigen::Index>(*j));
    }
    return cols;
}

}  // namespace

std::string sample_set_fingerprint(const std::vector<data::SampleMeta>& samples) {
    std::vector<std::string> keys;
    keys.reserve(samples.size());
    for (const auto& s : samples) keys.push_back(s.sample_id + '\x1f' + s.batch_id);
    std::sort(keys.begin(), keys.end());
    std::uint64_t h = fnv1a64("");
    for (const auto& k : keys) {
        h = fnv1a64(k, h);
        h = fnv1a64("\x1e", h);
    }
    return hex64(h);
}

std::string sample_set_fingerprint(const data::FeatureMatrix& m) { return sample_set_fingerprint(m.samples()); }

Eigen::MatrixXd PcaModel::transform(const data::FeatureMatrix& m) const {
    const auto cols = columns_by_name(feature_names, m);
    const auto p = static_cast<Eigen::Index>(feature_names.size());
    Eigen::MatrixXd z(static_cast<Eigen::Index>(m.n_samples()), p);
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            z(i, j) = scale[j] > 0.0 ? (m.values()(i, cols[static_cast<std::size_t>(j)]) - mean[j]) / scale[j] : 0.0;
        }
    }
    return z * components.transpose();
}

Eigen::MatrixXd PcaModel::reconstruct(const Eigen::MatrixXd& scores) const {
    Eigen::MatrixXd z = scores * components;
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = z(i, j) * scale[j] + mean[j];
    }
    return z;
}

PcaModel fit_pca(const data::FeatureMatrix& m, int k) {
    const auto n = static_cast<Eigen::Index>(m.n_samples());
    const auto p = static_cast<Eigen::Index>(m.n_features());
    if (k < 1) fail(ErrorCode::InvalidValue, "component count must be >= 1");
    if (n < k + 2) fail(ErrorCode::InsufficientSamples, "PCA needs n >= k + 2");

    PcaModel model;
    model.feature_names = m.feature_names();
    model.k = k;
    model.mean = m.values().colwise().mean().transpose();
    model.scale = Eigen::VectorXd::Zero(p);
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < p; ++j) {
        const double var = (m.values().col(j).array() - model.mean[j]).square().sum() / static_cast<double>(n - 1);
        const double sd = std::sqrt(var);
        if (sd > 1e-12 * std::max(1.0, std::fabs(model.mean[j]))) {
            model.scale[j] = sd;
            active.push_back(j);
        }
    }
    if (active.empty()) fail(ErrorCode::AllFeaturesConstant, "every feature is constant");
    const auto pa = static_cast<Eigen::Index>(active.size());
    if (k > std::min(n - 1, pa)) fail(ErrorCode::InsufficientSamples, "k exceeds min(n - 1, non-constant features)");

    Eigen::MatrixXd z(n, pa);
    for (Eigen::Index c = 0; c < pa; ++c) {
        const Eigen::Index j = active[static_cast<std::size_t>(c)];
        z.col(c) = (m.values().col(j).array() - model.mean[j]) / model.scale[j];
    }
    z /= std::sqrt(static_cast<double>(n - 1));
    Eigen::BDCSVD<Eigen::MatrixXd> svd(z, Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const Eigen::MatrixXd& v = svd.matrixV();

    model.components = Eigen::MatrixXd::Zero(k, p);
    model.explained_variance.resize(k);
    for (int c = 0; c < k; ++c) {
        const double lambda = sv[c] * sv[c];
        if (!(lambda > 1e-12 * std::max(1.0, sv[0] * sv[0]))) {
            fail(ErrorCode::InsufficientSamples, "data rank is below the requested component count");
        }
        model.explained_variance[c] = lambda;
        Eigen::VectorXd loading = v.col(c);
        Eigen::Index arg = 0;
        loading.cwiseAbs().maxCoeff(&arg);
        if (loading[arg] < 0.0) loading = -loading;
        for (Eigen::Index a = 0; a < pa; ++a) model.components(c, active[static_cast<std::size_t>(a)]) = loading[a];
    }
    return model;
}

double hotelling_critical_value(int n, int k, double alpha) {
    if (n <= k) fail(ErrorCode::InsufficientSamples, "Hotelling threshold needs n > k");
    const double f = math::f_quantile(1.0 - alpha, k, n - k);
    return static_cast<double>(k) * (n - 1) / static_cast<double>(n - k) * f;
}

Eigen::VectorXd HotellingGate::t2(const data::FeatureMatrix& m) const {
    const Eigen::MatrixXd scores = pca.transform(m);
    Eigen::VectorXd out(scores.rows());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        double s = 0.0;
        for (int c = 0; c < pca.k; ++c) s += scores(i, c) * scores(i, c) / pca.explained_variance[c];
        out[i] = s;
    }
    return out;
}

HotellingGate hotelling_gate(const data::FeatureMatrix& m, int k, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidValue, "alpha must lie in (0, 1)");
    HotellingGate gate;
    gate.pca = fit_pca(m, k);
    gate.alpha = alpha;
    gate.n_fit = static_cast<int>(m.n_samples());
    gate.t2_critical = hotelling_critical_value(gate.n_fit, k, alpha);
    gate.fit_t2 = gate.t2(m);
    std::vector<data::SampleMeta> retained;
    for (std::size_t i = 0; i < m.n_samples(); ++i) {
        if (gate.fit_t2[static_cast<Eigen::Index>(i)] > gate.t2_critical) {
            gate.flagged.push_back(m.samples()[i].sample_id);
        } else {
            retained.push_back(m.samples()[i]);
        }
    }
    gate.retained_fingerprint = sample_set_fingerprint(retained);
    return gate;
}

data::FeatureMatrix remove_flagged(const data::FeatureMatrix& m, const HotellingGate& gate) {
    const std::unordered_set<std::string> flagged(gate.flagged.begin(), gate.flagged.end());
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < m.n_samples(); ++i) {
        if (flagged.count(m.samples()[i].sample_id) == 0) keep.push_back(i);
    }
    return m.select_rows(keep);
}

Json to_json(const PcaModel& p) {
    return Json{{"feature_names", p.feature_names},
                {"mean", xcohort::to_json(p.mean)},
                {"scale", xcohort::to_json(p.scale)},
                {"components", xcohort::to_json(p.components)},
                {"explained_variance", xcohort::to_json(p.explained_variance)},
                {"k", p.k}};
}

PcaModel pca_from_json(const Json& j) {
    PcaModel p;
    p.feature_names = require(j, "feature_names").get<std::vector<std::string>>();
    p.mean = vector_from_json(require(j, "mean"));
    p.scale = vector_from_json(require(j, "scale"));
    p.components = matrix_from_json(require(j, "components"));
    p.explained_variance = vector_from_json(require(j, "explained_variance"));
    p.k = require(j, "k").get<int>();
    if (p.components.rows() != p.k) fail(ErrorCode::SchemaError, "PCA component count mismatch");
    return p;
}

Json to_json(const HotellingGate& g) {
    return Json{{"pca", to_json(g.pca)},
                {"alpha", g.alpha},
                {"n_fit", g.n_fit},
                {"t2_critical", g.t2_critical},
                {"flagged", g.flagged},
                {"fit_t2", xcohort::to_json(g.fit_t2)},
                {"retained_fingerprint", g.retained_fingerprint}};
}

HotellingGate gate_from_json(const Json& j) {
    HotellingGate g;
    g.pca = pca_from_json(require(j, "pca"));
    g.alpha = require(j, "alpha").get<double>();
    g.n_fit = require(j, "n_fit").get<int>();
    g.t2_critical = require(j, "t2_critical").get<double>();
    g.flagged = require(j, "flagged").get<std::vector<std::string>>();
    g.fit_t2 = vector_from_json(require(j, "fit_t2"));
    g.retained_fingerprint = require(j, "retained_fingerprint").get<std::string>();
    return g;
}

}  // namespace xcohort::prep
