#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "dfv/errors.hpp"
#include "dfv/experiment.hpp"
#include "dfv/util.hpp"

using namespace dfv;

namespace {

void add_mf_tokens(TokenStore& store, const std::string& speaker, Condition cond, int n,
                   const std::vector<double>& mean, double sd, uint64_t seed) {
    Rng rng(seed);
    for (int i = 0; i < n; ++i) {
        FeatureToken t;
        t.family = Family::mf;
        t.speaker = speaker;
        t.phoneme = "ʊ";
        t.condition = cond;
        t.time_s = 0.1 * i;
        t.source_file = speaker + "_" + to_string(cond) + ".wav";
        for (double m : mean) t.values.push_back(rng.normal(m, sd));
        store.add(t);
    }
}

ExperimentPlan quick_plan(const std::string& speaker, ConditionPair pair) {
    ExperimentPlan p;
    p.speaker = speaker;
    p.family = Family::mf;
    p.phoneme = "ʊ";
    p.pair = pair;
    p.repetitions = 6;
    p.split = 0.7;
    p.master_seed = 99;
    p.pretest_grid = {1, 2};
    p.pretest_folds = 3;
    return p;
}

}  // namespace

TEST_CASE("condition pair selectors") {
    CHECK(class_a_conditions(ConditionPair::real_vs_fake) ==
          std::set<Condition>{Condition::real, Condition::s1});
    CHECK(class_b_conditions(ConditionPair::real_vs_fake) == std::set<Condition>{Condition::fake});
    CHECK(class_a_conditions(ConditionPair::s1_vs_s2) == std::set<Condition>{Condition::s1});
    CHECK(class_b_conditions(ConditionPair::s1_vs_s2) == std::set<Condition>{Condition::s2});
    CHECK(to_string(ConditionPair::real_vs_fake) == "real_vs_fake");
    CHECK(condition_pair_from_string("s1s2") == ConditionPair::s1_vs_s2);
    CHECK(condition_pair_from_string("real_vs_fake") == ConditionPair::real_vs_fake);
}

TEST_CASE("plan labels match the report vocabulary") {
    ExperimentPlan p;
    p.family = Family::mf;
    p.phoneme = "ʊ";
    CHECK(p.label() == "MF [ʊ]");
    p.family = Family::ltfd;
    CHECK(p.label() == "LTFDs");
    p.family = Family::ltf0;
    CHECK(p.label() == "LTF0");
    p.family = Family::mfcc;
    CHECK(p.label() == "MFCCs");
    p.family = Family::fbank;
    CHECK(p.label() == "FBank");
}

TEST_CASE("identical class distributions give near-chance metrics") {
    TokenStore store;
    add_mf_tokens(store, "sp", Condition::real, 30, {500, 1500, 2500}, 40, 1);
    add_mf_tokens(store, "sp", Condition::s1, 30, {500, 1500, 2500}, 40, 2);
    add_mf_tokens(store, "sp", Condition::fake, 40, {500, 1500, 2500}, 40, 3);
    store.canonicalize();

    AggregateResult r = run_condition(quick_plan("sp", ConditionPair::real_vs_fake), store);
    REQUIRE(r.ok);
    CHECK(r.cllr_mean > 0.9);
    CHECK(r.band == Band::weak);
    CHECK(r.eer_mean_percent > 25.0);
}

TEST_CASE("strong separation gives near-zero cllr and eer") {
    TokenStore store;
    add_mf_tokens(store, "sp", Condition::real, 30, {500, 1500, 2500}, 30, 4);
    add_mf_tokens(store, "sp", Condition::s1, 30, {500, 1500, 2500}, 30, 5);
    // 6 sigma per dimension
    add_mf_tokens(store, "sp", Condition::fake, 40, {680, 1680, 2680}, 30, 6);
    store.canonicalize();

    AggregateResult r = run_condition(quick_plan("sp", ConditionPair::real_vs_fake), store);
    REQUIRE(r.ok);
    CHECK(r.cllr_mean < 0.05);
    CHECK(r.band == Band::good);
    CHECK(r.eer_mean_percent < 5.0);
    CHECK(r.cllr_sd >= 0.0);
    CHECK(r.per_repetition.size() == 6);
    CHECK(r.per_repetition_scores.size() == 6);
    CHECK(r.pretest.chosen_k >= 1);
}

TEST_CASE("rerun with the same seed is bitwise identical") {
    TokenStore store;
    add_mf_tokens(store, "sp", Condition::s1, 35, {520, 1450, 2550}, 35, 7);
    add_mf_tokens(store, "sp", Condition::s2, 35, {545, 1485, 2590}, 35, 8);
    store.canonicalize();

    ExperimentPlan plan = quick_plan("sp", ConditionPair::s1_vs_s2);
    AggregateResult a = run_condition(plan, store);
    AggregateResult b = run_condition(plan, store, 1);  // thread count must not matter
    REQUIRE(a.ok);
    REQUIRE(b.ok);
    CHECK(a.cllr_mean == b.cllr_mean);
    CHECK(a.cllr_sd == b.cllr_sd);
    CHECK(a.eer_mean_percent == b.eer_mean_percent);
    REQUIRE(a.per_repetition.size() == b.per_repetition.size());
    for (size_t i = 0; i < a.per_repetition.size(); ++i) {
        CHECK(a.per_repetition[i].cllr == b.per_repetition[i].cllr);
        CHECK(a.per_repetition[i].eer == b.per_repetition[i].eer);
    }
}

TEST_CASE("other speakers' tokens never leak into a plan") {
    TokenStore lone;
    add_mf_tokens(lone, "sp", Condition::s1, 30, {500, 1500, 2500}, 30, 9);
    add_mf_tokens(lone, "sp", Condition::s2, 30, {560, 1560, 2560}, 30, 10);
    lone.canonicalize();

    TokenStore crowded;
    add_mf_tokens(crowded, "sp", Condition::s1, 30, {500, 1500, 2500}, 30, 9);
    add_mf_tokens(crowded, "sp", Condition::s2, 30, {560, 1560, 2560}, 30, 10);
    add_mf_tokens(crowded, "other", Condition::s1, 40, {900, 1900, 2900}, 10, 11);
    add_mf_tokens(crowded, "other", Condition::s2, 40, {300, 1100, 2100}, 10, 12);
    crowded.canonicalize();

    ExperimentPlan plan = quick_plan("sp", ConditionPair::s1_vs_s2);
    AggregateResult a = run_condition(plan, lone);
    AggregateResult b = run_condition(plan, crowded);
    CHECK(a.cllr_mean == b.cllr_mean);
    CHECK(a.eer_mean_percent == b.eer_mean_percent);
}

TEST_CASE("scarce classes are skipped with a reason") {
    TokenStore store;
    add_mf_tokens(store, "sp", Condition::s1, 19, {500, 1500, 2500}, 30, 13);  // < 20
    add_mf_tokens(store, "sp", Condition::s2, 30, {560, 1560, 2560}, 30, 14);
    store.canonicalize();
    AggregateResult r = run_condition(quick_plan("sp", ConditionPair::s1_vs_s2), store);
    CHECK(!r.ok);
    CHECK(!r.skip_reason.empty());
    CHECK(r.per_repetition.empty());
}

TEST_CASE("compare_conditions forms the rvf/s1s2 ratio") {
    TokenStore store;
    add_mf_tokens(store, "sp", Condition::real, 30, {500, 1500, 2500}, 30, 15);
    add_mf_tokens(store, "sp", Condition::s1, 30, {500, 1500, 2500}, 30, 16);
    add_mf_tokens(store, "sp", Condition::fake, 40, {650, 1650, 2650}, 30, 17);  // 5 sigma
    add_mf_tokens(store, "sp", Condition::s2, 30, {515, 1515, 2515}, 30, 18);    // 0.5 sigma
    store.canonicalize();

    AggregateResult rvf = run_condition(quick_plan("sp", ConditionPair::real_vs_fake), store);
    AggregateResult s1s2 = run_condition(quick_plan("sp", ConditionPair::s1_vs_s2), store);
    REQUIRE(rvf.ok);
    REQUIRE(s1s2.ok);
    ComparisonRecord rec = compare_conditions(rvf, s1s2);
    CHECK(rec.cllr_rvf == rvf.cllr_mean);
    CHECK(rec.cllr_s1s2 == s1s2.cllr_mean);
    CHECK(rec.ratio == doctest::Approx(rvf.cllr_mean / s1s2.cllr_mean));
    CHECK(rec.rvf_lower);

    AggregateResult other = s1s2;
    other.plan.speaker = "someone_else";
    CHECK_THROWS_AS(compare_conditions(rvf, other), ContractError);
}

TEST_CASE("rank_features orders the report table") {
    auto agg = [](Family fam, const char* phon, double cllr_mean, bool ok = true) {
        AggregateResult r;
        r.plan.family = fam;
        r.plan.phoneme = phon;
        r.ok = ok;
        r.cllr_mean = cllr_mean;
        return r;
    };
    std::vector<AggregateResult> results = {
        agg(Family::ltfd, "", 0.661),          agg(Family::mf, "a", 0.35),
        agg(Family::mf, "ʊ", 0.258),      agg(Family::mf, "i", 0.30),
        agg(Family::ltf0, "", 0.73),           agg(Family::mfcc, "", 0.12),
        agg(Family::fbank, "", 0.2),           agg(Family::mf, "e", 0.9, false),
    };
    auto ranked = rank_features(results);
    REQUIRE(ranked.size() == 5);
    CHECK(ranked[0]->plan.phoneme == "ʊ");  // best MF first
    CHECK(ranked[1]->plan.phoneme == "i");       // second-best MF
    CHECK(ranked[2]->plan.family == Family::ltfd);
    CHECK(ranked[3]->plan.family == Family::ltf0);
    CHECK(ranked[4]->plan.family == Family::mfcc);

    CHECK_THROWS_AS(rank_features({}), ContractError);
}
