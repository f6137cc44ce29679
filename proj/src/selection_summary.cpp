#include <cstdio>
#include <set>

#include "xcohort/error.hpp"
#include "xcohort/feature_select.hpp"

namespace xcohort::select {

namespace {

void bump(std::map<std::string, CountWithShare>& m, std::string_view key) { ++m[std::string(key)].count; }

void finish_shares(std::map<std::string, CountWithShare>& m, std::size_t total) {
    for (auto& [k, v] : m) v.percent = total == 0 ? 0.0 : 100.0 * static_cast<double>(v.count) / static_cast<double>(total);
}

Json shares_json(const std::map<std::string, CountWithShare>& m) {
    Json out = Json::object();
    for (const auto& [k, v] : m) out[k] = Json{{"count", v.count}, {"percent", v.percent}, {"display", format_count(v)}};
    return out;
}

}  // namespace

SelectionSummary summarize_selection(const std::vector<SelectionResult>& results,
                                     const std::vector<data::FeatureDescriptor>& descriptors) {
    SelectionSummary s;
    std::map<std::string, const data::FeatureDescriptor*> distinct;
    for (const auto& r : results) {
        s.per_category[r.category] = r.selected.size();
        for (auto idx : r.selected) {
            if (idx >= descriptors.size()) {
                fail(ErrorCode::IndexOutOfRange, "category '" + r.category + "' selects index " + std::to_string(idx));
            }
            distinct.emplace(descriptors[idx].name, &descriptors[idx]);
        }
    }
    s.distinct_union = distinct.size();
    for (const auto& [name, d] : distinct) {
        bump(s.by_region, data::to_string(d->region));
        bump(s.by_sequence, data::to_string(d->sequence));
        bump(s.by_class, data::to_string(d->feature_class));
    }
    finish_shares(s.by_region, s.distinct_union);
    finish_shares(s.by_sequence, s.distinct_union);
    finish_shares(s.by_class, s.distinct_union);
    return s;
}

std::string format_count(const CountWithShare& c) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu (%.1f%%)", c.count, c.percent);
    return buf;
}

std::string summary_table(const SelectionSummary& s) {
    std::string out;
    char buf[160];
    std::snprintf(buf, sizeof buf, "distinct features: %zu\n", s.distinct_union);
    out += buf;
    out += "\nper category\n";
    for (const auto& [cat, n] : s.per_category) {
        std::snprintf(buf, sizeof buf, "  %-24s %zu\n", cat.c_str(), n);
        out += buf;
    }
    const auto block = [&](const char* title, const std::map<std::string, CountWithShare>& m) {
        out += "\n";
        out += title;
        out += "\n";
        for (const auto& [k, v] : m) {
            std::snprintf(buf, sizeof buf, "  %-24s %s\n", k.c_str(), format_count(v).c_str());
            out += buf;
        }
    };
    block("by region", s.by_region);
    block("by sequence", s.by_sequence);
    block("by feature class", s.by_class);
    return out;
}

Json to_json(const SelectionResult& r) {
    return Json{{"category", r.category},
                {"lambda_star", r.path.lambda_star},
                {"star_index", r.path.star_index},
                {"selected", r.selected},
                {"selected_names", r.selected_names},
                {"fold_seed", r.fold_seed},
                {"lambdas", xcohort::to_json(r.path.lambdas)},
                {"mean_cv_mse", xcohort::to_json(Eigen::VectorXd(r.path.mean_cv_mse()))},
                {"coefficients_at_star", xcohort::to_json(r.path.coefficients_at_star)}};
}

Json to_json(const SelectionSummary& s) {
    return Json{{"distinct_union", s.distinct_union},
                {"per_category", s.per_category},
                {"by_region", shares_json(s.by_region)},
                {"by_sequence", shares_json(s.by_sequence)},
                {"by_class", shares_json(s.by_class)}};
}

}  // namespace xcohort::select
