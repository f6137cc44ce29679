#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>

#include "xcohort/error.hpp"
#include "xcohort/folds.hpp"
#include "xcohort/learners.hpp"
#include "xcohort/rng.hpp"

namespace xcohort::learn {

namespace {

std::pair<double, double> two_sum(double a, double b) {
    const double s = a + b;
    const double bp = s - a;
    const double e = (a - (s - bp)) + (b - bp);
    return {s, e};
}

// a + b rounded to odd: an inexact result gets an odd last mantissa bit.
double add_round_to_odd(double a, double b) {
    auto [s, e] = two_sum(a, b);
    if (e != 0.0 && (std::bit_cast<std::uint64_t>(s) & 1U) == 0) {
        s = std::nextafter(s, e > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity());
    }
    return s;
}

// Correctly rounded a + b + c (rounding-to-odd emulation).
double sum3(double a, double b, double c) {
    const auto [uh, ul] = two_sum(b, c);
    const auto [th, tl] = two_sum(a, uh);
    return th + add_round_to_odd(tl, ul);
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<std::size_t>& rows) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(rows[r]));
    return out;
}

std::string fmt_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

FittedLearner fit_point(const Eigen::MatrixXd& X, std::span<const int> y, const GridPoint& point, std::uint64_t seed, bool platt) {
    FittedLearner out;
    out.kind = point.kind;
    switch (point.kind) {
        case LearnerKind::SVM: {
            SvmOptions opt;
            opt.platt = platt;
            out.svm = train_svm(X, y, point.C, resolve_kernel(point, X), opt);
            break;
        }
        case LearnerKind::RF:
            out.rf = train_forest(X, y, point.n_trees, point.max_depth, seed);
            break;
        case LearnerKind::GB: {
            HistGbOptions opt;
            opt.n_rounds = point.n_rounds;
            opt.learning_rate = point.learning_rate;
            out.gb = train_histgb(X, y, seed, opt);
            break;
        }
    }
    return out;
}

}  // namespace

double ensemble_probability(double p_svm, double p_rf, double p_gb) { return sum3(2.0 * p_svm, p_rf, p_gb) / 4.0; }

Eigen::VectorXd EnsembleModel::predict_proba(const Eigen::MatrixXd& X) const {
    const Eigen::VectorXd a = svm.predict_proba(X);
    const Eigen::VectorXd b = rf.predict_proba(X);
    const Eigen::VectorXd c = gb.predict_proba(X);
    Eigen::VectorXd out(X.rows());
    for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = ensemble_probability(a[i], b[i], c[i]);
    return out;
}

const char* to_string(LearnerKind k) {
    switch (k) {
        case LearnerKind::SVM: return "SVM";
        case LearnerKind::RF: return "RF";
        case LearnerKind::GB: return "GB";
    }
    return "?";
}

const char* to_string(ModelKind k) { return k == ModelKind::SVM ? "SVM" : "ENSEMBLE"; }

LearnerKind learner_kind_from_string(const std::string& s) {
    if (s == "SVM") return LearnerKind::SVM;
    if (s == "RF") return LearnerKind::RF;
    if (s == "GB") return LearnerKind::GB;
    fail(ErrorCode::ConfigInvalid, "unknown learner kind '" + s + "'");
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "SVM" || s == "svm") return ModelKind::SVM;
    if (s == "ENSEMBLE" || s == "ensemble" || s == "ENS") return ModelKind::ENSEMBLE;
    fail(ErrorCode::ConfigInvalid, "unknown model kind '" + s + "'");
}

std::string GridPoint::id() const {
    switch (kind) {
        case LearnerKind::SVM: {
            const char* k = kernel == KernelType::LINEAR ? "LINEAR" : gamma_rule == GammaRule::INV_P ? "RBF_INV_P" : "RBF_SCALE";
            return "SVM:C=" + fmt_number(C) + ":" + k;
        }
        case LearnerKind::RF:
            return "RF:n_trees=" + std::to_string(n_trees) + ":max_depth=" + (max_depth > 0 ? std::to_string(max_depth) : "none");
        case LearnerKind::GB:
            return "GB:rounds=" + std::to_string(n_rounds) + ":lr=" + fmt_number(learning_rate);
    }
    return "?";
}

std::vector<GridPoint> default_grid(LearnerKind kind) {
    std::vector<GridPoint> grid;
    switch (kind) {
        case LearnerKind::SVM:
            for (double c : {0.1, 1.0, 10.0, 100.0}) {
                GridPoint p;
                p.kind = LearnerKind::SVM;
                p.C = c;
                p.kernel = KernelType::LINEAR;
                grid.push_back(p);
                p.kernel = KernelType::RBF;
                p.gamma_rule = GammaRule::INV_P;
                grid.push_back(p);
                p.gamma_rule = GammaRule::SCALE;
                grid.push_back(p);
            }
            break;
        case LearnerKind::RF:
            for (int depth : {0, 8}) {
                GridPoint p;
                p.kind = LearnerKind::RF;
                p.n_trees = 100;
                p.max_depth = depth;
                grid.push_back(p);
            }
            break;
        case LearnerKind::GB: {
            GridPoint p;
            p.kind = LearnerKind::GB;
            p.n_rounds = 100;
            p.learning_rate = 0.1;
            grid.push_back(p);
            break;
        }
    }
    return grid;
}

GridPoint grid_point_from_id(const std::string& id) {
    for (auto kind : {LearnerKind::SVM, LearnerKind::RF, LearnerKind::GB}) {
        for (const auto& p : default_grid(kind)) {
            if (p.id() == id) return p;
        }
    }
    fail(ErrorCode::UnknownGridPoint, "grid point '" + id + "' is not in the declared grid");
}

Kernel resolve_kernel(const GridPoint& point, const Eigen::MatrixXd& X) {
    Kernel k;
    k.type = point.kernel;
    if (point.kernel == KernelType::LINEAR) return k;
    const double p = static_cast<double>(X.cols());
    if (point.gamma_rule == GammaRule::INV_P) {
        k.gamma = 1.0 / p;
    } else {
        const double mean = X.mean();
        const double var = (X.array() - mean).square().mean();
        k.gamma = var > 0.0 ? 1.0 / (p * var) : 1.0;
    }
    return k;
}

double balanced_accuracy_simple(std::span<const int> truth, std::span<const int> pred) {
    double tp = 0, fn = 0, tn = 0, fp = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 1) {
            (pred[i] == 1 ? tp : fn) += 1.0;
        } else {
            (pred[i] == 0 ? tn : fp) += 1.0;
        }
    }
    const bool has_pos = tp + fn > 0;
    const bool has_neg = tn + fp > 0;
    if (has_pos && has_neg) return (tp / (tp + fn) + tn / (tn + fp)) / 2.0;
    if (has_pos) return tp / (tp + fn);
    if (has_neg) return tn / (tn + fp);
    return 0.0;
}

SearchReport grid_search_cv(const Eigen::MatrixXd& X, std::span<const int> y, LearnerKind kind, int k, std::uint64_t seed) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) fail(ErrorCode::DimensionMismatch, "design rows and label count differ");
    int pos = 0;
    for (int v : y) pos += v == 1 ? 1 : 0;
    const int neg = static_cast<int>(y.size()) - pos;
    if (pos < k || neg < k) {
        fail(ErrorCode::ClassTooSmallForFolds,
             "class counts (" + std::to_string(neg) + ", " + std::to_string(pos) + ") are below the fold count " + std::to_string(k));
    }
    SearchReport report;
    report.kind = kind;
    report.grid = default_grid(kind);
    report.k = k;
    report.fold_seed = seed;
    const std::vector<int> fold_of = stratified_folds(y, k, seed);
    std::vector<FoldSplit> splits;
    for (int f = 0; f < k; ++f) splits.push_back(fold_split(fold_of, f));

    for (std::size_t g = 0; g < report.grid.size(); ++g) {
        std::vector<double> scores;
        for (int f = 0; f < k; ++f) {
            const FoldSplit& s = splits[static_cast<std::size_t>(f)];
            std::vector<int> ytr;
            std::vector<int> yva;
            for (auto i : s.train) ytr.push_back(y[i]);
            for (auto i : s.validation) yva.push_back(y[i]);
            const FittedLearner m = fit_point(take_rows(X, s.train), ytr, report.grid[g],
                                              derive_stream(seed, {static_cast<std::uint64_t>(f), g}), false);
            scores.push_back(balanced_accuracy_simple(yva, m.predict(take_rows(X, s.validation))));
        }
        double mean = 0.0;
        for (double v : scores) mean += v;
        mean /= static_cast<double>(k);
        double ss = 0.0;
        for (double v : scores) ss += (v - mean) * (v - mean);
        report.mean_ba.push_back(mean);
        report.sd_ba.push_back(std::sqrt(ss / static_cast<double>(k - 1)));
        if (report.mean_ba[g] > report.mean_ba[static_cast<std::size_t>(report.chosen)]) report.chosen = static_cast<int>(g);
    }
    return report;
}

FittedLearner fit_final(const Eigen::MatrixXd& X, std::span<const int> y, const GridPoint& point, std::uint64_t seed) {
    const auto grid = default_grid(point.kind);
    if (std::find(grid.begin(), grid.end(), point) == grid.end()) {
        fail(ErrorCode::UnknownGridPoint, "grid point '" + point.id() + "' is not in the declared grid");
    }
    return fit_point(X, y, point, seed, true);
}

Eigen::VectorXd FittedLearner::predict_proba(const Eigen::MatrixXd& X) const {
    if (svm) return svm->predict_proba(X);
    if (rf) return rf->predict_proba(X);
    if (gb) return gb->predict_proba(X);
    fail(ErrorCode::Internal, "empty fitted learner");
}

std::vector<int> FittedLearner::predict(const Eigen::MatrixXd& X) const {
    if (svm) return svm->predict(X);
    const Eigen::VectorXd p = predict_proba(X);
    std::vector<int> out(static_cast<std::size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i) out[static_cast<std::size_t>(i)] = class_of(p[i]);
    return out;
}

Json to_json(const EnsembleModel& m) {
    return Json{{"svm", to_json(m.svm)}, {"rf", to_json(m.rf)}, {"gb", to_json(m.gb)}, {"weights", {2, 1, 1}}};
}

EnsembleModel ensemble_from_json(const Json& j) {
    EnsembleModel m;
    m.svm = svm_from_json(require(j, "svm"));
    m.rf = forest_from_json(require(j, "rf"));
    m.gb = histgb_from_json(require(j, "gb"));
    if (require(j, "weights") != Json{2, 1, 1}) fail(ErrorCode::SchemaError, "ensemble weights must be [2, 1, 1]");
    return m;
}

Json to_json(const SearchReport& r) {
    std::vector<std::string> ids;
    for (const auto& p : r.grid) ids.push_back(p.id());
    return Json{{"kind", to_string(r.kind)},
                {"grid", ids},
                {"mean_ba", r.mean_ba},
                {"sd_ba", r.sd_ba},
                {"chosen", r.chosen},
                {"chosen_point", r.chosen_point().id()},
                {"k", r.k},
                {"fold_seed", r.fold_seed}};
}

SearchReport search_from_json(const Json& j) {
    SearchReport r;
    r.kind = learner_kind_from_string(require(j, "kind").get<std::string>());
    for (const auto& id : require(j, "grid")) r.grid.push_back(grid_point_from_id(id.get<std::string>()));
    r.mean_ba = require(j, "mean_ba").get<std::vector<double>>();
    r.sd_ba = require(j, "sd_ba").get<std::vector<double>>();
    r.chosen = require(j, "chosen").get<int>();
    r.k = require(j, "k").get<int>();
    r.fold_seed = require(j, "fold_seed").get<std::uint64_t>();
    if (r.chosen < 0 || r.chosen >= static_cast<int>(r.grid.size())) fail(ErrorCode::SchemaError, "chosen grid index out of range");
    if (r.chosen_point().id() != require(j, "chosen_point").get<std::string>()) fail(ErrorCode::SchemaError, "chosen point mismatch");
    return r;
}

Json to_json(const FittedLearner& f) {
    Json j{{"kind", to_string(f.kind)}};
    if (f.svm) j["model"] = to_json(*f.svm);
    if (f.rf) j["model"] = to_json(*f.rf);
    if (f.gb) j["model"] = to_json(*f.gb);
    return j;
}

FittedLearner fitted_from_json(const Json& j) {
    FittedLearner f;
    f.kind = learner_kind_from_string(require(j, "kind").get<std::string>());
    const Json& m = require(j, "model");
    switch (f.kind) {
        case LearnerKind::SVM: f.svm = svm_from_json(m); break;
        case LearnerKind::RF: f.rf = forest_from_json(m); break;
        case LearnerKind::GB: f.gb = histgb_from_json(m); break;
    }
    return f;
}

}  // namespace xcohort::learn
