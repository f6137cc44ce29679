#include <algorithm>
#include <cmath>

#include "xcohort/error.hpp"
#include "xcohort/evaluation.hpp"

namespace xcohort::eval {

const char* to_string(Metric m) {
    switch (m) {
        case Metric::PRECISION: return "precision";
        case Metric::RECALL: return "recall";
        case Metric::ACCURACY: return "accuracy";
        case Metric::BALANCED_ACCURACY: return "balanced_accuracy";
        case Metric::F1: return "f1";
        case Metric::MCC: return "mcc";
    }
    return "?";
}

Metric metric_from_string(const std::string& s) {
    for (Metric m : kAllMetrics) {
        if (s == to_string(m)) return m;
    }
    if (s == "ba" || s == "BA") return Metric::BALANCED_ACCURACY;
    fail(ErrorCode::ConfigInvalid, "unknown metric '" + s + "'");
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> pred) {
    if (truth.size() != pred.size()) fail(ErrorCode::LengthMismatch, "truth and prediction lengths differ");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if ((truth[i] != 0 && truth[i] != 1) || (pred[i] != 0 && pred[i] != 1)) fail(ErrorCode::InvalidValue, "labels must be 0 or 1");
        if (truth[i] == 1) {
            (pred[i] == 1 ? cm.tp : cm.fn) += 1;
        } else {
            (pred[i] == 1 ? cm.fp : cm.tn) += 1;
        }
    }
    return cm;
}

// Each ratio is formed from integer counts with a single division, so the
// result is the correctly rounded value of the exact fraction.
MetricOutcome metric_from_counts(const ConfusionMatrix& cm, Metric m) {
    const double tp = static_cast<double>(cm.tp);
    const double fp = static_cast<double>(cm.fp);
    const double fn = static_cast<double>(cm.fn);
    const double tn = static_cast<double>(cm.tn);
    const long pos = cm.tp + cm.fn;
    const long neg = cm.tn + cm.fp;

    MetricOutcome out;
    switch (m) {
        case Metric::PRECISION:
            out = cm.tp + cm.fp == 0 ? MetricOutcome::non_evaluable("no positive predictions") : MetricOutcome::of(tp / (tp + fp));
            break;
        case Metric::RECALL:
            out = pos == 0 ? MetricOutcome::non_evaluable("no positive truth labels") : MetricOutcome::of(tp / (tp + fn));
            break;
        case Metric::ACCURACY:
            out = MetricOutcome::of((tp + tn) / (tp + fp + fn + tn));
            break;
        case Metric::BALANCED_ACCURACY:
            out = pos == 0 || neg == 0 ? MetricOutcome::non_evaluable("truth contains a single class")
                                       : MetricOutcome::of((tp * neg + tn * pos) / (2.0 * pos * neg));
            break;
        case Metric::F1: {
            if (cm.tp + cm.fp == 0 || pos == 0) {
                out = MetricOutcome::non_evaluable("precision or recall is undefined");
            } else {
                out = MetricOutcome::of(2.0 * tp / (2.0 * tp + fp + fn));
            }
            break;
        }
        case Metric::MCC: {
            if (cm.tp + cm.fp == 0 || pos == 0 || neg == 0 || cm.tn + cm.fn == 0) {
                out = MetricOutcome::non_evaluable("a confusion-matrix margin is zero");
            } else {
                const long double den = std::sqrt(static_cast<long double>(tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
                out = MetricOutcome::of(static_cast<double>((static_cast<long double>(tp) * tn - static_cast<long double>(fp) * fn) / den));
            }
            break;
        }
    }
    if (out.evaluable() && std::min(pos, neg) == 1) out.state = MetricOutcome::State::UNSTABLE;
    return out;
}

MetricReport compute_metrics(std::span<const int> truth, std::span<const int> pred) {
    if (truth.size() != pred.size()) fail(ErrorCode::LengthMismatch, "truth and prediction lengths differ");
    if (truth.empty()) fail(ErrorCode::EmptyInput, "no predictions to score");
    MetricReport r;
    r.cm = confusion(truth, pred);
    r.n = r.cm.n();
    r.n_positive = r.cm.tp + r.cm.fn;
    r.n_negative = r.cm.tn + r.cm.fp;
    for (Metric m : kAllMetrics) r.metrics[m] = metric_from_counts(r.cm, m);
    return r;
}

Json to_json(const MetricOutcome& o) {
    switch (o.state) {
        case MetricOutcome::State::VALUE: return Json{{"state", "value"}, {"value", o.value}};
        case MetricOutcome::State::UNSTABLE: return Json{{"state", "unstable"}, {"value", o.value}};
        case MetricOutcome::State::NON_EVALUABLE: return Json{{"state", "non_evaluable"}, {"reason", o.reason}};
    }
    return Json();
}

Json to_json(const MetricReport& r) {
    Json metrics = Json::object();
    for (const auto& [m, o] : r.metrics) metrics[to_string(m)] = to_json(o);
    return Json{{"metrics", metrics},
                {"n", r.n},
                {"class_counts", Json{{"0", r.n_negative}, {"1", r.n_positive}}},
                {"confusion", Json{{"tp", r.cm.tp}, {"fp", r.cm.fp}, {"fn", r.cm.fn}, {"tn", r.cm.tn}}}};
}

Json to_json(const HoldoutReport& r) {
    Json j = to_json(r.metrics);
    j["group_id"] = r.group_id;
    j["category"] = r.category;
    j["signature_matrix"] = r.signature_matrix;
    j["model_id"] = r.model_id;
    j["warnings"] = r.warnings;
    return j;
}

}  // namespace xcohort::eval
