#include "support.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "xcohort/cohort_stats.hpp"
#include "xcohort/rng.hpp"
#include "xcohort/special.hpp"

using namespace xcohort;
using namespace xcohort::stats;

TEST_CASE("anova: identical groups and hand-decomposed shift") {
    const std::vector<double> v{1.0, 4.0, 2.5, 7.0};
    const AnovaResult same = anova_oneway({v, v, v});
    CHECK(same.f_statistic == 0.0);
    CHECK(same.p_value == 1.0);

    // Group means 2, 2, 12; grand mean 16/3; SSB = 200, SSW = 6, F = (200/2)/(6/6).
    const AnovaResult shifted = anova_oneway({{1, 2, 3}, {1, 2, 3}, {11, 12, 13}});
    CHECK(shifted.f_statistic == doctest::Approx(100.0).epsilon(1e-12));
    CHECK(shifted.df_between == 2);
    CHECK(shifted.df_within == 6);
    CHECK(shifted.p_value < 0.001);
    const double p_oracle = boost::math::cdf(boost::math::complement(boost::math::fisher_f_distribution<double>(2, 6), 100.0));
    CHECK(shifted.p_value == doctest::Approx(p_oracle).epsilon(1e-10));

    CHECK_ERROR_CODE(anova_oneway({{1, 2}}), ErrorCode::TooFewGroups);
    CHECK_ERROR_CODE(anova_oneway({{1, 2}, {3}}), ErrorCode::EmptyGroup);
}

TEST_CASE("anova F is invariant to shift and scale") {
    Rng rng(1);
    std::vector<std::vector<double>> g(4);
    for (std::size_t k = 0; k < 4; ++k) {
        for (int i = 0; i < 15; ++i) g[k].push_back(rng.normal(0.3 * static_cast<double>(k), 1.0));
    }
    const double f = anova_oneway(g).f_statistic;
    auto shifted = g;
    auto scaled = g;
    for (auto& grp : shifted) for (double& v : grp) v += 1e4;
    for (auto& grp : scaled) for (double& v : grp) v *= 37.5;
    CHECK(anova_oneway(shifted).f_statistic == doctest::Approx(f).epsilon(1e-8));
    CHECK(anova_oneway(scaled).f_statistic == doctest::Approx(f).epsilon(1e-12));
}

TEST_CASE("chi-square independence") {
    const ChiSquareResult r = chi_square_independence({{10, 20}, {20, 10}});
    CHECK(std::abs(r.statistic - 20.0 / 3.0) < 1e-3);
    CHECK(r.df == 1);
    const double p_oracle = boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(1), 20.0 / 3.0));
    CHECK(r.p_value == doctest::Approx(p_oracle).epsilon(1e-10));
    const ChiSquareResult flat = chi_square_independence({{5, 10, 15}, {10, 20, 30}});
    CHECK(flat.statistic == doctest::Approx(0.0).scale(1.0));
    CHECK(flat.p_value == doctest::Approx(1.0));
    CHECK(flat.df == 2);
    CHECK_ERROR_CODE(chi_square_independence({{0, 0}, {3, 4}}), ErrorCode::ZeroExpectedCell);
}

TEST_CASE("kaplan-meier: exact endpoints and step semantics") {
    // Five events at distinct times, two censored after the last event.
    const std::vector<double> t{1, 2, 3, 4, 5, 9, 9};
    const std::vector<int> e{1, 1, 1, 1, 1, 0, 0};
    const KmCurve km = km_estimate(t, e);
    CHECK(km.times.front() == 0.0);
    CHECK(km.survival.front() == 1.0);
    CHECK(km.survival_at(5.0) == 2.0 / 7.0);
    CHECK(km.survival_at(4.999) == 3.0 / 7.0);
    CHECK(km.survival_at(0.5) == 1.0);

    const std::vector<double> all_t{0.5, 1.0, 1.0, 2.0, 3.5, 3.5, 6.0};
    const std::vector<int> all_e(7, 1);
    CHECK(km_estimate(all_t, all_e).survival_at(6.0) == 0.0);
    CHECK(km_estimate(all_t, all_e).survival_at(1.0) == 4.0 / 7.0);
    CHECK(km_estimate(all_t, all_e).survival_at(3.5) == 1.0 / 7.0);

    // Event and censor tied at t = 2: the event is applied with the censored subject still at risk.
    const KmCurve tie = km_estimate(std::vector<double>{1, 2, 2, 3}, std::vector<int>{0, 1, 0, 1});
    CHECK(tie.survival_at(2.0) == doctest::Approx(2.0 / 3.0));
    CHECK(tie.survival_at(3.0) == 0.0);

    const std::vector<int> none(4, 0);
    const KmCurve flat = km_estimate(std::vector<double>{1, 2, 3, 4}, none);
    for (double s : flat.survival) CHECK(s == 1.0);

    CHECK_ERROR_CODE(km_estimate(std::vector<double>{-1.0}, std::vector<int>{1}), ErrorCode::NegativeTime);
    CHECK(km_to_csv(km).rfind("time,", 0) == 0);
}

TEST_CASE("log-rank: identical groups, swap invariance, no events") {
    const std::vector<double> t{1, 2, 2, 5, 8, 9};
    const std::vector<int> e{1, 0, 1, 1, 0, 1};
    const LogRankResult same = logrank_test(t, e, t, e);
    CHECK(same.chi_square == doctest::Approx(0.0).scale(1.0));
    CHECK(same.p_value == doctest::Approx(1.0));

    Rng rng(3);
    std::vector<double> ta, tb;
    std::vector<int> ea, eb;
    for (int i = 0; i < 30; ++i) {
        ta.push_back(rng.exponential(1.0));
        ea.push_back(rng.uniform() < 0.8 ? 1 : 0);
        tb.push_back(rng.exponential(1.5));
        eb.push_back(rng.uniform() < 0.8 ? 1 : 0);
    }
    const LogRankResult ab = logrank_test(ta, ea, tb, eb);
    const LogRankResult ba = logrank_test(tb, eb, ta, ea);
    CHECK(ab.chi_square == doctest::Approx(ba.chi_square).epsilon(1e-12));
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));

    const std::vector<int> none(6, 0);
    CHECK_ERROR_CODE(logrank_test(t, none, t, none), ErrorCode::NoEvents);
}

TEST_CASE("log-rank detects hazard ratio 2 in at least 90% of seeds") {
    int rejections = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed + 100);
        std::vector<double> ta, tb;
        std::vector<int> ea, eb;
        for (int i = 0; i < 100; ++i) {
            ta.push_back(rng.exponential(1.0));
            ea.push_back(1);
            tb.push_back(rng.exponential(2.0));
            eb.push_back(1);
        }
        if (logrank_test(ta, ea, tb, eb).p_value < 0.05) ++rejections;
    }
    CHECK(rejections >= 18);
}

TEST_CASE("special functions agree with Boost.Math on a probe grid") {
    namespace bm = boost::math;
    for (double a : {0.5, 1.0, 2.5, 10.0, 49.0}) {
        for (double b : {0.5, 1.0, 3.0, 49.0, 500.0}) {
            for (double x : {0.001, 0.1, 0.3, 0.5, 0.77, 0.999}) {
                CHECK(math::incomplete_beta(a, b, x) == doctest::Approx(bm::ibeta(a, b, x)).epsilon(1e-8).scale(1e-8));
            }
            for (double p : {0.01, 0.5, 0.99}) {
                CHECK(math::incomplete_beta_inverse(a, b, p) == doctest::Approx(bm::ibeta_inv(a, b, p)).epsilon(1e-8));
            }
        }
        for (double x : {0.01, 0.5, 1.0, 3.0, 20.0, 80.0}) {
            CHECK(math::gamma_p(a, x) == doctest::Approx(bm::gamma_p(a, x)).epsilon(1e-8).scale(1e-8));
            CHECK(math::gamma_q(a, x) == doctest::Approx(bm::gamma_q(a, x)).epsilon(1e-8).scale(1e-8));
        }
    }
    for (double d1 : {1.0, 2.0, 5.0}) {
        for (double d2 : {6.0, 98.0, 1000.0}) {
            const bm::fisher_f_distribution<double> f(d1, d2);
            for (double x : {0.1, 1.0, 4.824, 20.0}) {
                CHECK(math::f_cdf(x, d1, d2) == doctest::Approx(bm::cdf(f, x)).epsilon(1e-8).scale(1e-8));
                CHECK(math::f_sf(x, d1, d2) == doctest::Approx(bm::cdf(bm::complement(f, x))).epsilon(1e-8).scale(1e-8));
            }
        }
    }
    for (double df : {1.0, 2.0, 10.0}) {
        for (double x : {0.1, 3.84, 30.0}) {
            CHECK(math::chi_square_sf(x, df) ==
                  doctest::Approx(bm::cdf(bm::complement(bm::chi_squared_distribution<double>(df), x))).epsilon(1e-8).scale(1e-8));
        }
    }
    for (double z : {-6.0, -1.96, 0.0, 0.5, 3.0}) {
        CHECK(math::normal_cdf(z) == doctest::Approx(bm::cdf(bm::normal_distribution<double>(), z)).epsilon(1e-8).scale(1e-8));
    }
    CHECK(math::f_cdf(4.824, 2, 98) == doctest::Approx(0.99).epsilon(1e-3));
}
