#include "support.hpp"

#include <set>

#include "xcohort/core_data.hpp"
#include "xcohort/json_io.hpp"
#include "xcohort/rng.hpp"

using namespace xcohort;
using namespace xcohort::data;

TEST_CASE("feature csv: shape and descriptor parsing") {
    const std::string csv =
        "sample_id,batch_id,T1CE_enhancing_glcm_ClusterProminence,flair_necrotic_core_shape_Volume,foo\n"
        "a,X,1,2,3\n"
        "b,X,4,5,6\n"
        "c,Y,7,8,9\n"
        "d,Y,10,11,12\n";
    const FeatureMatrix m = parse_feature_csv(csv);
    CHECK(m.n_samples() == 4);
    CHECK(m.n_features() == 3);
    const auto& d = m.descriptors();
    CHECK(d[0].sequence == Sequence::T1CE);
    CHECK(d[0].region == Region::ENHANCING);
    CHECK(d[0].feature_class == FeatureClass::GLCM);
    CHECK(d[1].sequence == Sequence::FLAIR);
    CHECK(d[1].region == Region::NECROTIC_CORE);
    CHECK(d[1].feature_class == FeatureClass::SHAPE);
    CHECK(d[2].sequence == Sequence::OTHER);
    CHECK(d[2].region == Region::OTHER);
    CHECK(d[2].feature_class == FeatureClass::OTHER);
    CHECK(m.values()(3, 2) == 12.0);
    CHECK(m.distinct_batches() == std::set<std::string>{"X", "Y"});
}

TEST_CASE("descriptor parsing is case-insensitive and pure") {
    const auto a = FeatureDescriptor::parse("t2_ED_GLRLM_RunEntropy");
    CHECK(a.sequence == Sequence::T2);
    CHECK(a.region == Region::EDEMA);
    CHECK(a.feature_class == FeatureClass::GLRLM);
    CHECK(FeatureDescriptor::parse("t2_ED_GLRLM_RunEntropy") == a);
    CHECK(FeatureDescriptor::parse("t1_ncr_firstorder_Mean").region == Region::NECROTIC_CORE);
    CHECK(FeatureDescriptor::parse("t1_et_ngtdm_Busyness").region == Region::ENHANCING);
}

TEST_CASE("feature csv rejections") {
    CHECK_ERROR_CODE(parse_feature_csv("sample_id,batch_id,f\na,X,abc\n"), ErrorCode::NonNumericCell);
    CHECK_ERROR_CODE(parse_feature_csv("sample_id,batch_id,f\na,X,1\na,X,2\n"), ErrorCode::DuplicateSampleId);
    CHECK_ERROR_CODE(parse_feature_csv("id,batch_id,f\na,X,1\n"), ErrorCode::MissingColumn);
    CHECK_ERROR_CODE(parse_feature_csv("sample_id,f\na,1\n"), ErrorCode::MissingColumn);
    CHECK_ERROR_CODE(parse_feature_csv("sample_id,batch_id,f\na,X,nan\n"), ErrorCode::NonNumericCell);
}

TEST_CASE("non-numeric cell error names row and column") {
    try {
        parse_feature_csv("sample_id,batch_id,f,g\na,X,1,2\nb,X,3,oops\n");
        FAIL("expected NonNumericCell");
    } catch (const Error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("oops") != std::string::npos);
        CHECK(msg.find("'g'") != std::string::npos);
    }
}

TEST_CASE("ingest -> serialize -> ingest round-trips bit-identically") {
    Rng rng(11);
    Eigen::MatrixXd v(7, 5);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        for (Eigen::Index j = 0; j < v.cols(); ++j) v(i, j) = rng.normal() * std::pow(10.0, static_cast<double>(j) - 2.0);
    }
    const FeatureMatrix m = testing::make_matrix(v, "SITE");
    const std::string csv = feature_matrix_to_csv(m);
    const FeatureMatrix back = parse_feature_csv(csv);
    CHECK(back.values() == m.values());
    CHECK(back.sample_ids() == m.sample_ids());
    CHECK(feature_matrix_to_csv(back) == csv);
}

TEST_CASE("category universe: 11 + 6 with 5 shared names") {
    const auto& pan = pan_cancer_categories();
    const auto& gbm = gbm_categories();
    CHECK(pan.size() == 11);
    CHECK(gbm.size() == 6);
    std::set<std::string> shared;
    for (const auto& c : gbm) {
        if (std::find(pan.begin(), pan.end(), c) != pan.end()) shared.insert(c);
    }
    CHECK(shared.size() == 5);
    CHECK(shared.count("microglia") == 0);
    CHECK(pan.size() + gbm.size() == 17);
}

namespace {

std::map<std::string, FeatureMatrix> cohorts_of_sizes(const std::map<std::string, int>& sizes) {
    std::map<std::string, FeatureMatrix> out;
    for (const auto& [name, n] : sizes) {
        Eigen::MatrixXd v = Eigen::MatrixXd::Constant(n, 3, 1.0);
        for (int i = 0; i < n; ++i) v(i, 0) = i;
        out.emplace(name, testing::make_matrix(v, name, name + "_"));
    }
    return out;
}

}  // namespace

TEST_CASE("standard group 1 holds out IvyGAP and partitions samples") {
    const auto splits = standard_group_splits();
    REQUIRE(splits.size() == 3);
    CHECK(splits[0].holdout_cohort == "IvyGAP");
    CHECK(splits[1].holdout_cohort == "TCGA");
    CHECK(splits[2].holdout_cohort == "CPTAC");
    // Sizes chosen so training totals 155 of 176.
    const auto cohorts = cohorts_of_sizes({{"TCGA", 60}, {"CPTAC", 40}, {"CGGA", 30}, {"REMBRANDT", 25}, {"IvyGAP", 21}});
    const auto [train, holdout] = assemble_group(cohorts, splits[0]);
    CHECK(train.n_samples() == 155);
    CHECK(holdout.n_samples() == 21);
    CHECK(train.n_samples() + holdout.n_samples() == 176);
    for (const auto& s : train.samples()) CHECK(s.batch_id != "IvyGAP");
    const auto ids = holdout.sample_ids();
    const std::set<std::string> hold(ids.begin(), ids.end());
    for (const auto& id : train.sample_ids()) CHECK(hold.count(id) == 0);
}

TEST_CASE("group split guards") {
    const auto cohorts = cohorts_of_sizes({{"A", 3}, {"B", 3}});
    CHECK_ERROR_CODE(assemble_group(cohorts, GroupSplit{"G", {"A", "B"}, "B"}), ErrorCode::InvalidSplit);
    CHECK_ERROR_CODE(assemble_group(cohorts, GroupSplit{"G", {"A"}, "C"}), ErrorCode::UnknownCohort);
    auto mismatched = cohorts;
    mismatched.erase("B");
    mismatched.emplace("B", testing::make_matrix(Eigen::MatrixXd::Ones(3, 2), "B", "B_"));
    CHECK_ERROR_CODE(assemble_group(mismatched, GroupSplit{"G", {"A"}, "B"}), ErrorCode::FeatureMismatch);
}

TEST_CASE("align_scores filters, reorders and rejects missing samples") {
    const FeatureMatrix m = testing::make_matrix(Eigen::MatrixXd::Ones(3, 2), "X");
    ScorePanel panel;
    panel.categories = {"immune_score"};
    panel.sample_ids = {"s2", "extra", "s0", "s1"};
    panel.scores.resize(4, 1);
    panel.scores << 2.0, 9.0, 0.5, 1.0;
    const ScorePanel aligned = align_scores(m, panel);
    CHECK(aligned.sample_ids == std::vector<std::string>{"s0", "s1", "s2"});
    CHECK(aligned.scores(0, 0) == 0.5);
    CHECK(aligned.scores(2, 0) == 2.0);
    const ScorePanel again = align_scores(m, aligned);
    CHECK(again.sample_ids == aligned.sample_ids);
    CHECK(again.scores == aligned.scores);
    panel.sample_ids = {"s2", "extra", "s0", "zz"};
    CHECK_ERROR_CODE(align_scores(m, panel), ErrorCode::MissingScoreForSample);
}

TEST_CASE("score csv round trip and validation") {
    const std::string csv = "sample_id,immune_score,t_cells\na,1.5,0\nb,2,3.25\n";
    const ScorePanel p = parse_score_csv(csv, SignatureMatrix::PAN_CANCER);
    CHECK(p.categories == std::vector<std::string>{"immune_score", "t_cells"});
    CHECK(parse_score_csv(score_panel_to_csv(p), SignatureMatrix::PAN_CANCER).scores == p.scores);
    CHECK_ERROR_CODE(parse_score_csv("sample_id,immune_score\na,-1\n", SignatureMatrix::PAN_CANCER), ErrorCode::InvalidValue);
}

TEST_CASE("metadata csv: optional fields and event/survival pairing") {
    const std::string csv =
        "sample_id,age_years,sex,survival_years,event_observed\n"
        "a,61.5,M,1.25,1\n"
        "b,,F,,\n";
    const auto meta = parse_metadata_csv(csv);
    CHECK(meta.at("a").age_years == 61.5);
    CHECK(meta.at("a").sex == Sex::M);
    CHECK(meta.at("a").event_observed == true);
    CHECK_FALSE(meta.at("b").age_years.has_value());
    CHECK_FALSE(meta.at("b").survival_years.has_value());
    CHECK_ERROR_CODE(parse_metadata_csv("sample_id,survival_years,event_observed\na,1.0,\n"), ErrorCode::InvalidValue);
}

TEST_CASE("feature matrix construction invariants") {
    Eigen::MatrixXd v(2, 2);
    v << 1, 2, 3, std::numeric_limits<double>::infinity();
    CHECK_ERROR_CODE(testing::make_matrix(v), ErrorCode::InvalidValue);
    const FeatureMatrix m = testing::make_matrix(Eigen::MatrixXd::Ones(3, 2));
    CHECK(m.zero_variance_columns().size() == 2);
    CHECK_ERROR_CODE(m.select_features({"f0", "nope"}), ErrorCode::FeatureMismatch);
}
