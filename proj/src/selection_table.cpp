#include <algorithm>
#include <cstdio>
#include <tuple>

#include "xcohort/evaluation.hpp"

namespace xcohort::eval {

MetricSummary summarize_metric(const std::vector<MetricOutcome>& outcomes) {
    MetricSummary s;
    double sum = 0.0;
    for (const auto& o : outcomes) {
        if (!o.evaluable()) {
            ++s.n_excluded;
            continue;
        }
        if (s.n_evaluable == 0) {
            s.min = o.value;
            s.max = o.value;
        }
        s.min = std::min(s.min, o.value);
        s.max = std::max(s.max, o.value);
        sum += o.value;
        ++s.n_evaluable;
    }
    s.evaluable = s.n_evaluable > 0;
    if (s.evaluable) s.mean = sum / s.n_evaluable;
    return s;
}

SelectionTable model_selection_report(const std::vector<HoldoutReport>& reports, const std::vector<ComparisonResult>& comparisons,
                                      double alpha) {
    using Key = std::tuple<std::string, std::string, std::string>;
    std::map<Key, std::vector<const HoldoutReport*>> grouped;
    for (const auto& r : reports) grouped[{r.category, r.signature_matrix, r.model_id}].push_back(&r);

    SelectionTable table;
    for (const auto& [key, list] : grouped) {
        SelectionRow row;
        std::tie(row.category, row.signature_matrix, row.model_id) = key;
        row.n_groups = static_cast<int>(list.size());
        for (Metric m : kAllMetrics) {
            std::vector<MetricOutcome> outcomes;
            for (const auto* r : list) outcomes.push_back(r->metrics.at(m));
            row.metrics[m] = summarize_metric(outcomes);
        }
        const MetricSummary& ba = row.metrics.at(Metric::BALANCED_ACCURACY);
        const MetricSummary& mcc = row.metrics.at(Metric::MCC);
        row.evaluable_all_groups = ba.n_excluded == 0 && mcc.n_excluded == 0 && row.n_groups > 0;
        row.positive_mean_mcc = mcc.evaluable && mcc.mean > 0.0;
        for (const auto& c : comparisons) {
            if (c.category != row.category || c.non_evaluable || !(c.p_adjusted < alpha)) continue;
            if ((c.model_a == row.model_id && c.mean_diff > 0.0) || (c.model_b == row.model_id && c.mean_diff < 0.0)) {
                row.bootstrap_favored = true;
            }
        }
        row.preferred = row.evaluable_all_groups && row.positive_mean_mcc && row.bootstrap_favored;
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string format_mean_range(const MetricSummary& s) {
    if (!s.evaluable) return "non evaluable";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f (%.2f-%.2f)", s.mean, s.min, s.max);
    return buf;
}

namespace {

std::string fmt_mean(const MetricSummary& s) {
    if (!s.evaluable) return "non evaluable";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", s.mean);
    return buf;
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }

}  // namespace

std::string selection_table_text(const SelectionTable& t) {
    std::string out;
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-20s %-10s %-10s %-20s %-20s %-14s %-6s %-6s %-6s\n", "category", "matrix", "model",
                  "mean BA (range)", "mean precision", "mean MCC", "eval", "mcc>0", "boot");
    out += buf;
    for (const auto& r : t.rows) {
        std::snprintf(buf, sizeof buf, "%-20s %-10s %-10s %-20s %-20s %-14s %-6s %-6s %-6s\n", r.category.c_str(),
                      r.signature_matrix.c_str(), r.model_id.c_str(),
                      format_mean_range(r.metrics.at(Metric::BALANCED_ACCURACY)).c_str(),
                      format_mean_range(r.metrics.at(Metric::PRECISION)).c_str(), fmt_mean(r.metrics.at(Metric::MCC)).c_str(),
                      yes_no(r.evaluable_all_groups), yes_no(r.positive_mean_mcc), yes_no(r.bootstrap_favored));
        out += buf;
    }
    return out;
}

std::string selection_table_csv(const SelectionTable& t) {
    std::string out =
        "category,signature_matrix,model,mean_ba_range,mean_precision_range,mean_mcc,evaluable_all_groups,positive_mean_mcc,"
        "bootstrap_favored,preferred\n";
    for (const auto& r : t.rows) {
        out += r.category + "," + r.signature_matrix + "," + r.model_id + "," +
               format_mean_range(r.metrics.at(Metric::BALANCED_ACCURACY)) + "," +
               format_mean_range(r.metrics.at(Metric::PRECISION)) + "," + fmt_mean(r.metrics.at(Metric::MCC)) + "," +
               yes_no(r.evaluable_all_groups) + "," + yes_no(r.positive_mean_mcc) + "," + yes_no(r.bootstrap_favored) + "," +
               yes_no(r.preferred) + "\n";
    }
    return out;
}

Json to_json(const SelectionTable& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        Json metrics = Json::object();
        for (const auto& [m, s] : r.metrics) {
            Json js{{"n_evaluable", s.n_evaluable}, {"n_excluded", s.n_excluded}, {"evaluable", s.evaluable}};
            if (s.evaluable) {
                js["mean"] = s.mean;
                js["min"] = s.min;
                js["max"] = s.max;
            }
            metrics[to_string(m)] = js;
        }
        rows.push_back(Json{{"category", r.category},
                            {"signature_matrix", r.signature_matrix},
                            {"model_id", r.model_id},
                            {"n_groups", r.n_groups},
                            {"metrics", metrics},
                            {"evaluable_all_groups", r.evaluable_all_groups},
                            {"positive_mean_mcc", r.positive_mean_mcc},
                            {"bootstrap_favored", r.bootstrap_favored},
                            {"preferred", r.preferred}});
    }
    return Json{{"rows", rows}};
}

}  // namespace xcohort::eval
