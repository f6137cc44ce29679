#include "xcohort/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "xcohort/error.hpp"
#include "xcohort/rng.hpp"

namespace xcohort::synth {

namespace {

// Stream tags keep the draw families independent.
enum : std::uint64_t { kFeature = 1, kLatentNoise = 2, kScore = 3, kSiteEffect = 4, kSurvival = 5, kMeta = 6 };

}  // namespace

void SynthConfig::validate() const {
    if (n_sites < 1 || n_per_site < 1 || n_features < 1 || n_signal_features < 1 || n_categories < 1) {
        fail(ErrorCode::ConfigInvalid, "synth counts must be >= 1");
    }
    if (n_signal_features > n_features) fail(ErrorCode::ConfigInvalid, "n_signal_features exceeds n_features");
    if (!(batch_scale_range[0] > 0.0) || batch_scale_range[1] < batch_scale_range[0]) {
        fail(ErrorCode::ConfigInvalid, "batch_scale_range must satisfy 0 < lo <= hi");
    }
    if (batch_shift_scale < 0.0 || noise_sigma < 0.0 || signal_strength < 0.0 || score_separation < 0.0) {
        fail(ErrorCode::ConfigInvalid, "scales must be non-negative");
    }
    if (survival_link && !(*survival_link > 0.0)) fail(ErrorCode::ConfigInvalid, "survival_link must be > 0");
    if (!(censoring_rate >= 0.0)) fail(ErrorCode::ConfigInvalid, "censoring_rate must be >= 0");
    if (n_categories > static_cast<int>(data::categories_for(signature_matrix).size())) {
        fail(ErrorCode::ConfigInvalid, "n_categories exceeds the signature matrix category count");
    }
    if (!site_names.empty() && static_cast<int>(site_names.size()) != n_sites) {
        fail(ErrorCode::ConfigInvalid, "site_names must list n_sites names");
    }
}

std::string SynthConfig::site_name(int s) const {
    if (!site_names.empty()) return site_names.at(static_cast<std::size_t>(s));
    return "S" + std::to_string(s + 1);
}

std::string feature_name(int j) {
    static const char* kSeq[] = {"t1", "t1ce", "t2", "flair"};
    static const char* kRegion[] = {"necrotic_core", "enhancing", "edema"};
    static const char* kClass[] = {"shape", "firstorder", "glcm", "glszm", "gldm", "ngtdm", "glrlm"};
    char buf[96];
    std::snprintf(buf, sizeof buf, "%s_%s_%s_f%04d", kSeq[j % 4], kRegion[(j / 4) % 3], kClass[(j / 12) % 7], j);
    return buf;
}

SynthOutput generate(const SynthConfig& cfg) {
    cfg.validate();
    const int p = cfg.n_features;
    const int k = cfg.n_signal_features;
    const int n = cfg.n_per_site;
    const auto& all_categories = data::categories_for(cfg.signature_matrix);

    SynthOutput out;
    SynthTruth& truth = out.truth;
    for (int c = 0; c < cfg.n_categories; ++c) {
        truth.categories.push_back(all_categories[static_cast<std::size_t>(c)]);
        std::vector<std::size_t> support;
        for (int t = 0; t < k; ++t) support.push_back(static_cast<std::size_t>((c * k + t) % p));
        std::sort(support.begin(), support.end());
        truth.supports.push_back(std::move(support));
    }
    truth.labels.assign(static_cast<std::size_t>(cfg.n_categories), {});
    truth.latent.assign(static_cast<std::size_t>(cfg.n_categories), {});

    std::vector<data::FeatureDescriptor> descriptors;
    for (int j = 0; j < p; ++j) descriptors.push_back(data::FeatureDescriptor::parse(feature_name(j)));

    const auto total = static_cast<Eigen::Index>(cfg.n_sites) * n;
    out.panel.signature_matrix = cfg.signature_matrix;
    out.panel.categories = truth.categories;
    out.panel.scores.resize(total, cfg.n_categories);

    for (int s = 0; s < cfg.n_sites; ++s) {
        const std::string site = cfg.site_name(s);
        const auto su = static_cast<std::uint64_t>(s);
        Eigen::MatrixXd x(n, p);
        for (int j = 0; j < p; ++j) {
            Rng rng = Rng::stream(cfg.seed, {kFeature, su, static_cast<std::uint64_t>(j)});
            for (int i = 0; i < n; ++i) x(i, j) = rng.normal();
        }

        std::vector<int> label0(static_cast<std::size_t>(n), 0);
        for (int c = 0; c < cfg.n_categories; ++c) {
            Rng noise = Rng::stream(cfg.seed, {kLatentNoise, su, static_cast<std::uint64_t>(c)});
            Rng score = Rng::stream(cfg.seed, {kScore, su, static_cast<std::uint64_t>(c)});
            const auto& support = truth.supports[static_cast<std::size_t>(c)];
            for (int i = 0; i < n; ++i) {
                double sig = 0.0;
                for (auto j : support) sig += x(i, static_cast<Eigen::Index>(j));
                const double latent = cfg.signal_strength * sig + cfg.noise_sigma * noise.normal();
                const int label = latent > 0.0 ? 1 : 0;
                truth.latent[static_cast<std::size_t>(c)].push_back(latent);
                truth.labels[static_cast<std::size_t>(c)].push_back(label);
                if (c == 0) label0[static_cast<std::size_t>(i)] = label;
                const double sc = 10.0 + label * cfg.score_separation + score.normal();
                out.panel.scores(static_cast<Eigen::Index>(s) * n + i, c) = std::max(0.0, sc);
            }
        }

        Eigen::VectorXd shift(p);
        Eigen::VectorXd scale(p);
        for (int j = 0; j < p; ++j) {
            Rng rng = Rng::stream(cfg.seed, {kSiteEffect, su, static_cast<std::uint64_t>(j)});
            scale[j] = rng.uniform(cfg.batch_scale_range[0], cfg.batch_scale_range[1]);
            shift[j] = cfg.batch_shift_scale * rng.normal();
            for (int i = 0; i < n; ++i) x(i, j) = x(i, j) * scale[j] + shift[j];
        }
        truth.site_shift[site] = shift;
        truth.site_scale[site] = scale;

        std::vector<data::SampleMeta> samples;
        for (int i = 0; i < n; ++i) {
            data::SampleMeta m;
            char id[64];
            std::snprintf(id, sizeof id, "%s_%04d", site.c_str(), i);
            m.sample_id = id;
            m.batch_id = site;
            Rng meta = Rng::stream(cfg.seed, {kMeta, su, static_cast<std::uint64_t>(i)});
            m.age_years = meta.normal(60.0, 10.0);
            m.sex = meta.uniform() < 0.5 ? data::Sex::M : data::Sex::F;
            if (cfg.survival_link) {
                Rng surv = Rng::stream(cfg.seed, {kSurvival, su, static_cast<std::uint64_t>(i)});
                const double hazard = label0[static_cast<std::size_t>(i)] == 1 ? *cfg.survival_link : 1.0;
                const double t_event = surv.exponential(hazard);
                const double t_censor = cfg.censoring_rate > 0.0 ? surv.exponential(cfg.censoring_rate) : t_event + 1.0;
                m.survival_years = std::min(t_event, t_censor);
                m.event_observed = t_event <= t_censor;
            }
            samples.push_back(m);
            truth.sample_ids.push_back(m.sample_id);
            out.panel.sample_ids.push_back(m.sample_id);
        }
        out.cohorts.emplace(site, data::FeatureMatrix(std::move(samples), descriptors, std::move(x)));
    }
    return out;
}

SynthConfig config_from_json(const Json& j) {
    SynthConfig c;
    const auto get_int = [&](const char* key, int& dst) {
        if (j.contains(key)) dst = j.at(key).get<int>();
    };
    const auto get_double = [&](const char* key, double& dst) {
        if (j.contains(key)) dst = j.at(key).get<double>();
    };
    if (!j.is_object()) fail(ErrorCode::ConfigInvalid, "synth config must be a JSON object");
    static const std::set<std::string> known = {"n_sites", "n_per_site", "n_features", "n_signal_features", "signal_strength",
                                                "batch_shift_scale", "batch_scale_range", "noise_sigma", "score_separation",
                                                "survival_link", "censoring_rate", "n_categories", "signature_matrix",
                                                "site_names", "seed"};
    for (const auto& [key, value] : j.items()) {
        if (known.count(key) == 0) fail(ErrorCode::ConfigInvalid, "unknown synth config key '" + key + "'");
    }
    try {
        get_int("n_sites", c.n_sites);
        get_int("n_per_site", c.n_per_site);
        get_int("n_features", c.n_features);
        get_int("n_signal_features", c.n_signal_features);
        get_double("signal_strength", c.signal_strength);
        get_double("batch_shift_scale", c.batch_shift_scale);
        get_double("noise_sigma", c.noise_sigma);
        get_double("score_separation", c.score_separation);
        get_double("censoring_rate", c.censoring_rate);
        get_int("n_categories", c.n_categories);
        if (j.contains("batch_scale_range")) {
            const auto r = j.at("batch_scale_range").get<std::vector<double>>();
            if (r.size() != 2) fail(ErrorCode::ConfigInvalid, "batch_scale_range needs 2 values");
            c.batch_scale_range = {r[0], r[1]};
        }
        if (j.contains("survival_link") && !j.at("survival_link").is_null()) c.survival_link = j.at("survival_link").get<double>();
        if (j.contains("signature_matrix")) c.signature_matrix = data::signature_matrix_from_string(j.at("signature_matrix").get<std::string>());
        if (j.contains("site_names")) c.site_names = j.at("site_names").get<std::vector<std::string>>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ConfigInvalid, std::string("synth config: ") + e.what());
    }
    c.validate();
    return c;
}

Json to_json(const SynthConfig& c) {
    std::vector<std::string> sites;
    for (int s = 0; s < c.n_sites; ++s) sites.push_back(c.site_name(s));
    return Json{{"n_sites", c.n_sites},
                {"n_per_site", c.n_per_site},
                {"n_features", c.n_features},
                {"n_signal_features", c.n_signal_features},
                {"signal_strength", c.signal_strength},
                {"batch_shift_scale", c.batch_shift_scale},
                {"batch_scale_range", {c.batch_scale_range[0], c.batch_scale_range[1]}},
                {"noise_sigma", c.noise_sigma},
                {"score_separation", c.score_separation},
                {"survival_link", c.survival_link ? Json(*c.survival_link) : Json(nullptr)},
                {"censoring_rate", c.censoring_rate},
                {"n_categories", c.n_categories},
                {"signature_matrix", std::string(data::to_string(c.signature_matrix))},
                {"site_names", sites},
                {"seed", c.seed}};
}

Json to_json(const SynthTruth& t) {
    Json cats = Json::object();
    for (std::size_t c = 0; c < t.categories.size(); ++c) {
        cats[t.categories[c]] = Json{{"support", t.supports[c]}, {"labels", t.labels[c]}};
    }
    Json sites = Json::object();
    for (const auto& [site, shift] : t.site_shift) {
        sites[site] = Json{{"shift", xcohort::to_json(shift)}, {"scale", xcohort::to_json(t.site_scale.at(site))}};
    }
    return Json{{"sample_ids", t.sample_ids}, {"categories", cats}, {"sites", sites}};
}

}  // namespace xcohort::synth
