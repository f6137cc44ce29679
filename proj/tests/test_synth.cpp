#include "support.hpp"

#include "xcohort/cohort_stats.hpp"
#include "xcohort/json_io.hpp"
#include "xcohort/labeling.hpp"
#include "xcohort/rng.hpp"
#include "xcohort/synth.hpp"

using namespace xcohort;
using namespace xcohort::synth;

TEST_CASE("synth is a pure function of its config") {
    SynthConfig cfg;
    cfg.n_categories = 3;
    cfg.survival_link = 2.0;
    cfg.seed = 5;
    const SynthOutput a = generate(cfg);
    const SynthOutput b = generate(cfg);
    for (const auto& [site, m] : a.cohorts) {
        CHECK(data::feature_matrix_to_csv(m) == data::feature_matrix_to_csv(b.cohorts.at(site)));
    }
    CHECK(data::score_panel_to_csv(a.panel) == data::score_panel_to_csv(b.panel));
    CHECK(canonical_dump(to_json(a.truth)) == canonical_dump(to_json(b.truth)));
    cfg.seed = 6;
    CHECK(data::score_panel_to_csv(generate(cfg).panel) != data::score_panel_to_csv(a.panel));
}

TEST_CASE("injected effects are recoverable exactly from the truth record") {
    SynthConfig cfg;
    cfg.n_sites = 3;
    cfg.n_per_site = 12;
    cfg.n_features = 30;
    cfg.n_signal_features = 4;
    cfg.n_categories = 2;
    cfg.seed = 9;
    const SynthOutput out = generate(cfg);
    CHECK(out.truth.supports[0] == std::vector<std::size_t>{0, 1, 2, 3});
    CHECK(out.truth.supports[1] == std::vector<std::size_t>{4, 5, 6, 7});
    for (int s = 0; s < 3; ++s) {
        const std::string site = cfg.site_name(s);
        const data::FeatureMatrix& m = out.cohorts.at(site);
        const Eigen::VectorXd& shift = out.truth.site_shift.at(site);
        const Eigen::VectorXd& scale = out.truth.site_scale.at(site);
        Eigen::MatrixXd base(12, 30);
        for (int j = 0; j < 30; ++j) {
            // Base features come from the (1, site, feature) stream.
            Rng rng = Rng::stream(cfg.seed, {1, static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(j)});
            for (int i = 0; i < 12; ++i) base(i, j) = rng.normal();
            CHECK(scale[j] >= 0.7);
            CHECK(scale[j] <= 1.4);
        }
        for (int i = 0; i < 12; ++i) {
            for (int j = 0; j < 30; ++j) CHECK(m.values()(i, j) == base(i, j) * scale[j] + shift[j]);
            const std::size_t row = static_cast<std::size_t>(s * 12 + i);
            CHECK(out.truth.sample_ids[row] == m.samples()[static_cast<std::size_t>(i)].sample_id);
            for (std::size_t c = 0; c < 2; ++c) {
                double sig = 0.0;
                for (auto j : out.truth.supports[c]) sig += base(i, static_cast<Eigen::Index>(j));
                CHECK(std::abs(out.truth.latent[c][row] - sig) <= 0.1 * 6.0);
                CHECK(out.truth.labels[c][row] == (out.truth.latent[c][row] > 0.0 ? 1 : 0));
            }
        }
    }
}

TEST_CASE("adding sites leaves earlier sites untouched") {
    SynthConfig small;
    small.n_sites = 2;
    small.seed = 3;
    SynthConfig large = small;
    large.n_sites = 5;
    const SynthOutput a = generate(small);
    const SynthOutput b = generate(large);
    for (const auto& site : {"S1", "S2"}) {
        CHECK(a.cohorts.at(site).values() == b.cohorts.at(site).values());
        CHECK(a.truth.site_shift.at(site) == b.truth.site_shift.at(site));
    }
    CHECK(a.panel.scores.topRows(80) == b.panel.scores.topRows(80));
}

TEST_CASE("null site effects: ANOVA rejection rate near alpha") {
    SynthConfig cfg;
    cfg.n_features = 400;
    cfg.batch_shift_scale = 0.0;
    cfg.batch_scale_range = {1.0, 1.0};
    cfg.seed = 21;
    const SynthOutput out = generate(cfg);
    int rejected = 0;
    for (int j = 0; j < cfg.n_features; ++j) {
        std::vector<std::vector<double>> groups;
        for (const auto& [site, m] : out.cohorts) {
            const Eigen::VectorXd col = m.values().col(j);
            groups.emplace_back(col.data(), col.data() + col.size());
        }
        if (stats::anova_oneway(groups).p_value < 0.05) ++rejected;
    }
    CHECK(static_cast<double>(rejected) / cfg.n_features <= 0.07);
}

TEST_CASE("score separation 6 lets the mixture recover planted labels") {
    SynthConfig cfg;
    cfg.n_sites = 5;
    cfg.n_categories = 4;
    cfg.seed = 13;
    const SynthOutput out = generate(cfg);
    const label::PanelLabels labels = label::binarize_panel(out.panel);
    REQUIRE(labels.sets.size() == 4);
    for (std::size_t c = 0; c < 4; ++c) {
        const auto& set = labels.sets[c];
        int agree = 0;
        for (std::size_t i = 0; i < set.labels.size(); ++i) agree += set.labels[i] == out.truth.labels[c][i] ? 1 : 0;
        CHECK(static_cast<double>(agree) / static_cast<double>(set.labels.size()) >= 0.99);
    }
}

TEST_CASE("survival link: label-1 subjects fail faster") {
    SynthConfig cfg;
    cfg.n_sites = 4;
    cfg.n_per_site = 100;
    cfg.survival_link = 2.0;
    cfg.seed = 17;
    const SynthOutput out = generate(cfg);
    std::vector<double> t1, t0;
    std::vector<int> e1, e0;
    for (const auto& [site, m] : out.cohorts) {
        for (const auto& s : m.samples()) {
            REQUIRE(s.survival_years.has_value());
            REQUIRE(s.event_observed.has_value());
            const auto it = std::find(out.truth.sample_ids.begin(), out.truth.sample_ids.end(), s.sample_id);
            const int lab = out.truth.labels[0][static_cast<std::size_t>(it - out.truth.sample_ids.begin())];
            (lab ? t1 : t0).push_back(*s.survival_years);
            (lab ? e1 : e0).push_back(*s.event_observed ? 1 : 0);
        }
    }
    const stats::LogRankResult r = stats::logrank_test(t1, e1, t0, e0);
    CHECK(r.p_value < 0.05);
    CHECK(r.observed_a > r.expected_a);
}

TEST_CASE("config validation and JSON") {
    SynthConfig bad;
    bad.n_sites = 0;
    CHECK_ERROR_CODE(generate(bad), ErrorCode::ConfigInvalid);
    bad = SynthConfig{};
    bad.batch_scale_range = {1.4, 0.7};
    CHECK_ERROR_CODE(generate(bad), ErrorCode::ConfigInvalid);
    bad = SynthConfig{};
    bad.n_signal_features = 200;
    CHECK_ERROR_CODE(generate(bad), ErrorCode::ConfigInvalid);

    SynthConfig cfg;
    cfg.survival_link = 1.5;
    cfg.seed = 77;
    const std::string text = canonical_dump(to_json(cfg));
    CHECK(canonical_dump(to_json(config_from_json(Json::parse(text)))) == text);
    Json extra = Json::parse(text);
    extra["mystery"] = 1;
    CHECK_ERROR_CODE(config_from_json(extra), ErrorCode::ConfigInvalid);
}
