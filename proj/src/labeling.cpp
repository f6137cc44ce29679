#include "xcohort/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace xcohort::label {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

double log_component(double x, double w, double mean, double var) {
    const double d = x - mean;
    return std::log(w) - 0.5 * (kLog2Pi + std::log(var)) - 0.5 * d * d / var;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

void check_scores(std::span<const double> x) {
    if (x.size() < 4) fail(ErrorCode::TooFewSamples, "GMM fit needs at least 4 scores");
    double lo = x[0];
    double hi = x[0];
    for (double v : x) {
        if (!std::isfinite(v)) fail(ErrorCode::InvalidValue, "non-finite score");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi - lo <= 1e-12 * std::max(std::fabs(hi), std::fabs(lo))) {
        fail(ErrorCode::DegenerateDistribution, "all scores are equal");
    }
}

double population_variance(std::span<const double> x) {
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    double ss = 0.0;
    for (double v : x) ss += (v - mean) * (v - mean);
    return ss / static_cast<double>(x.size());
}

// E-step: responsibilities of component 1 and the total log-likelihood.
double e_step(std::span<const double> x, const GmmModel& m, std::vector<double>& r1) {
    double ll = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double l0 = log_component(x[i], m.weights[0], m.means[0], m.variances[0]);
        const double l1 = log_component(x[i], m.weights[1], m.means[1], m.variances[1]);
        const double top = std::max(l0, l1);
        ll += top + std::log(std::exp(l0 - top) + std::exp(l1 - top));
        r1[i] = 1.0 / (1.0 + std::exp(l0 - l1));
    }
    return ll;
}

}  // namespace

std::array<double, 2> GmmModel::posterior(double x) const {
    const double l0 = log_component(x, weights[0], means[0], variances[0]);
    const double l1 = log_component(x, weights[1], means[1], variances[1]);
    const double high = 1.0 / (1.0 + std::exp(l0 - l1));
    return {1.0 - high, high};
}

EmRun run_em(std::span<const double> x, double init_mean0, double init_mean1, const EmOptions& options) {
    check_scores(x);
    const double data_var = population_variance(x);
    const double floor = 1e-8 * data_var;
    const auto n = static_cast<double>(x.size());

    EmRun run;
    GmmModel& m = run.model;
    m.weights = {0.5, 0.5};
    m.means = {init_mean0, init_mean1};
    m.variances = {data_var, data_var};
    std::vector<double> r1(x.size());
    double ll = e_step(x, m, r1);
    run.ll_trace.push_back(ll);

    for (int it = 1; it <= options.max_iterations; ++it) {
        double s0 = 0.0;
        double s1 = 0.0;
        double m0 = 0.0;
        double m1 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            s1 += r1[i];
            s0 += 1.0 - r1[i];
            m1 += r1[i] * x[i];
            m0 += (1.0 - r1[i]) * x[i];
        }
        // A component that lost every point keeps its previous location.
        if (s0 > 0.0) m.means[0] = m0 / s0;
        if (s1 > 0.0) m.means[1] = m1 / s1;
        double v0 = 0.0;
        double v1 = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            v1 += r1[i] * (x[i] - m.means[1]) * (x[i] - m.means[1]);
            v0 += (1.0 - r1[i]) * (x[i] - m.means[0]) * (x[i] - m.means[0]);
        }
        m.variances[0] = s0 > 0.0 ? std::max(v0 / s0, floor) : m.variances[0];
        m.variances[1] = s1 > 0.0 ? std::max(v1 / s1, floor) : m.variances[1];
        m.weights[0] = std::max(s0 / n, 1e-300);
        m.weights[1] = std::max(s1 / n, 1e-300);

        const double next = e_step(x, m, r1);
        run.ll_trace.push_back(next);
        m.n_iter = it;
        const double gain = next - ll;
        ll = next;
        if (gain < options.tolerance) {
            m.converged = true;
            break;
        }
    }
    m.log_likelihood = ll;
    return run;
}

GmmModel fit_gmm(std::span<const double> scores, const EmOptions& options) {
    check_scores(scores);
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    static constexpr std::array<double, 5> kQuantiles = {0.1, 0.2, 0.3, 0.4, 0.05};

    bool have = false;
    GmmModel best;
    for (double q : kQuantiles) {
        const double lo = quantile_sorted(sorted, q);
        const double hi = quantile_sorted(sorted, 1.0 - q);
        for (int order = 0; order < 2; ++order) {
            const EmRun run = order == 0 ? run_em(scores, lo, hi, options) : run_em(scores, hi, lo, options);
            if (!have || run.model.log_likelihood > best.log_likelihood) {
                best = run.model;
                have = true;
            }
        }
    }
    if (best.means[0] > best.means[1]) {
        std::swap(best.means[0], best.means[1]);
        std::swap(best.variances[0], best.variances[1]);
        std::swap(best.weights[0], best.weights[1]);
    }
    return best;
}

int label_of(const GmmModel& model, double x) { return model.posterior_high(x) >= 0.5 ? 1 : 0; }

const BinaryLabelSet* PanelLabels::find(const std::string& category) const {
    for (const auto& s : sets) {
        if (s.category == category) return &s;
    }
    return nullptr;
}

BinaryLabelSet label_with(const GmmModel& model, const std::string& category, data::SignatureMatrix matrix,
                          const std::vector<std::string>& sample_ids, std::span<const double> scores) {
    if (sample_ids.size() != scores.size()) fail(ErrorCode::LengthMismatch, "sample ids and scores differ in length");
    BinaryLabelSet set;
    set.category = category;
    set.signature_matrix = matrix;
    set.sample_ids = sample_ids;
    set.model = model;
    for (double s : scores) {
        const double post = model.posterior_high(s);
        set.posteriors.push_back(post);
        set.labels.push_back(post >= 0.5 ? 1 : 0);
    }
    return set;
}

PanelLabels binarize_panel(const data::ScorePanel& panel, const EmOptions& options) {
    panel.validate();
    PanelLabels out;
    out.signature_matrix = panel.signature_matrix;
    for (std::size_t c = 0; c < panel.categories.size(); ++c) {
        std::vector<double> col(panel.sample_ids.size());
        for (std::size_t i = 0; i < col.size(); ++i) col[i] = panel.scores(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        try {
            const GmmModel model = fit_gmm(col, options);
            out.sets.push_back(label_with(model, panel.categories[c], panel.signature_matrix, panel.sample_ids, col));
        } catch (const Error& e) {
            out.skipped.push_back({panel.categories[c], e.code(), e.what()});
        }
    }
    return out;
}

std::string labels_to_csv(const PanelLabels& labels) {
    std::string out = "sample_id";
    for (const auto& s : labels.sets) out += "," + s.category;
    out += "\n";
    if (labels.sets.empty()) return out;
    const auto& ids = labels.sets.front().sample_ids;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out += ids[i];
        for (const auto& s : labels.sets) out += s.labels[i] ? ",1" : ",0";
        out += "\n";
    }
    return out;
}

Json labels_sidecar(const PanelLabels& labels) {
    Json cats = Json::object();
    for (const auto& s : labels.sets) {
        int positives = 0;
        for (int l : s.labels) positives += l;
        cats[s.category] = Json{{"gmm", to_json(s.model)}, {"n", s.labels.size()}, {"n_high", positives}};
    }
    Json skipped = Json::array();
    for (const auto& s : labels.skipped) {
        skipped.push_back(Json{{"category", s.category}, {"code", to_string(s.code)}, {"reason", s.reason}});
    }
    return Json{{"schema_version", 1},
                {"signature_matrix", std::string(data::to_string(labels.signature_matrix))},
                {"categories", cats},
                {"skipped", skipped}};
}

PanelLabels parse_labels_csv(std::string_view text, data::SignatureMatrix matrix) {
    const auto rows = data::parse_csv_rows(text);
    if (rows.empty() || rows.front().empty() || rows.front().front() != "sample_id") {
        fail(ErrorCode::MissingColumn, "labels CSV must start with a sample_id column");
    }
    PanelLabels out;
    out.signature_matrix = matrix;
    const auto& header = rows.front();
    for (std::size_t c = 1; c < header.size(); ++c) {
        BinaryLabelSet s;
        s.category = header[c];
        s.signature_matrix = matrix;
        out.sets.push_back(std::move(s));
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != header.size()) fail(ErrorCode::DimensionMismatch, "labels row " + std::to_string(r) + " is ragged");
        for (std::size_t c = 1; c < header.size(); ++c) {
            const std::string& cell = rows[r][c];
            if (cell != "0" && cell != "1") {
                fail(ErrorCode::NonNumericCell, "labels row " + std::to_string(r) + ", column " + header[c] + ": '" + cell + "'");
            }
            out.sets[c - 1].sample_ids.push_back(rows[r][0]);
            out.sets[c - 1].labels.push_back(cell == "1" ? 1 : 0);
        }
    }
    return out;
}

Json to_json(const GmmModel& m) {
    return Json{{"weights", {m.weights[0], m.weights[1]}},
                {"means", {m.means[0], m.means[1]}},
                {"variances", {m.variances[0], m.variances[1]}},
                {"log_likelihood", m.log_likelihood},
                {"n_iter", m.n_iter},
                {"converged", m.converged}};
}

GmmModel gmm_from_json(const Json& j) {
    GmmModel m;
    const auto w = require(j, "weights").get<std::vector<double>>();
    const auto mu = require(j, "means").get<std::vector<double>>();
    const auto v = require(j, "variances").get<std::vector<double>>();
    if (w.size() != 2 || mu.size() != 2 || v.size() != 2) fail(ErrorCode::SchemaError, "GMM must have 2 components");
    m.weights = {w[0], w[1]};
    m.means = {mu[0], mu[1]};
    m.variances = {v[0], v[1]};
    m.log_likelihood = require(j, "log_likelihood").get<double>();
    m.n_iter = require(j, "n_iter").get<int>();
    m.converged = require(j, "converged").get<bool>();
    return m;
}

}  // namespace xcohort::label
