#include "dfv/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "dfv/errors.hpp"
#include "dfv/util.hpp"

namespace dfv {

std::string to_string(ConditionPair p) {
    return p == ConditionPair::real_vs_fake ? "real_vs_fake" : "s1_vs_s2";
}

ConditionPair condition_pair_from_string(const std::string& s) {
    std::string u = to_lower(s);
    if (u == "real_vs_fake" || u == "rvf") return ConditionPair::real_vs_fake;
    if (u == "s1_vs_s2" || u == "s1s2") return ConditionPair::s1_vs_s2;
    throw ConfigError("unknown condition pair \"" + s + "\"");
}

std::set<Condition> class_a_conditions(ConditionPair p) {
    if (p == ConditionPair::real_vs_fake) return {Condition::real, Condition::s1};
    return {Condition::s1};
}

std::set<Condition> class_b_conditions(ConditionPair p) {
    if (p == ConditionPair::real_vs_fake) return {Condition::fake};
    return {Condition::s2};
}

std::string ExperimentPlan::label() const {
    switch (family) {
        case Family::mf: return "MF [" + phoneme + "]";
        case Family::ltfd: return "LTFDs";
        case Family::ltf0: return "LTF0";
        case Family::mfcc: return "MFCCs";
        case Family::fbank: return "FBank";
    }
    throw ContractError("ExperimentPlan::label: bad family");
}

namespace {

Eigen::MatrixXd tokens_to_matrix(const std::vector<const FeatureToken*>& tokens) {
    if (tokens.empty()) return {};
    Eigen::Index d = static_cast<Eigen::Index>(tokens[0]->values.size());
    Eigen::MatrixXd X(static_cast<Eigen::Index>(tokens.size()), d);
    for (size_t i = 0; i < tokens.size(); ++i) {
        if (static_cast<Eigen::Index>(tokens[i]->values.size()) != d)
            throw ContractError("tokens_to_matrix: inconsistent token dimensions");
        for (Eigen::Index j = 0; j < d; ++j)
            X(static_cast<Eigen::Index>(i), j) = tokens[i]->values[static_cast<size_t>(j)];
    }
    return X;
}

// Seeded disjoint/exhaustive split; checked so a broken refactor cannot leak
// test rows into training.
void split_rows(const Eigen::MatrixXd& X, double split, Rng& rng, Eigen::MatrixXd& train,
                Eigen::MatrixXd& test) {
    Eigen::Index n = X.rows();
    std::vector<Eigen::Index> idx(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    rng.shuffle(idx);
    Eigen::Index n_train = static_cast<Eigen::Index>(std::llround(split * static_cast<double>(n)));
    n_train = std::clamp<Eigen::Index>(n_train, 1, n - 1);

    std::vector<bool> in_train(static_cast<size_t>(n), false);
    train.resize(n_train, X.cols());
    test.resize(n - n_train, X.cols());
    for (Eigen::Index i = 0; i < n_train; ++i) {
        train.row(i) = X.row(idx[static_cast<size_t>(i)]);
        in_train[static_cast<size_t>(idx[static_cast<size_t>(i)])] = true;
    }
    for (Eigen::Index i = n_train; i < n; ++i) {
        if (in_train[static_cast<size_t>(idx[static_cast<size_t>(i)])])
            throw ContractError("split_rows: train/test overlap");
        test.row(i - n_train) = X.row(idx[static_cast<size_t>(i)]);
    }
    size_t covered = 0;
    for (bool b : in_train) covered += b ? 1 : 0;
    if (covered != static_cast<size_t>(n_train))
        throw ContractError("split_rows: split not exhaustive");
}

void check_no_leakage(const std::vector<const FeatureToken*>& tokens,
                      const std::set<Condition>& allowed, const char* side) {
    for (const FeatureToken* t : tokens)
        if (!allowed.count(t->condition))
            throw ContractError(std::string("condition leakage into class ") + side + ": token has condition " +
                                to_string(t->condition));
}

}  // namespace

AggregateResult run_condition(const ExperimentPlan& plan, const TokenStore& store,
                              int max_threads) {
    if (plan.split <= 0.0 || plan.split >= 1.0)
        throw ContractError("run_condition: split must be in (0, 1)");
    if (plan.repetitions < 1) throw ContractError("run_condition: repetitions must be >= 1");

    AggregateResult result;
    result.plan = plan;

    TokenFilter base;
    base.family = plan.family;
    base.speaker = plan.speaker;
    if (plan.family == Family::mf) base.phoneme = plan.phoneme;

    TokenFilter fa = base, fb = base;
    fa.conditions = class_a_conditions(plan.pair);
    fb.conditions = class_b_conditions(plan.pair);
    std::vector<const FeatureToken*> tokens_a = store.select(fa);
    std::vector<const FeatureToken*> tokens_b = store.select(fb);
    check_no_leakage(tokens_a, fa.conditions, "A");
    check_no_leakage(tokens_b, fb.conditions, "B");

    if (tokens_a.size() < kMinTokensPerClass || tokens_b.size() < kMinTokensPerClass) {
        result.skip_reason = "insufficient data: " + plan.label() + " " + to_string(plan.pair) +
                             " has " + std::to_string(tokens_a.size()) + " class-A / " +
                             std::to_string(tokens_b.size()) + " class-B tokens (need >= " +
                             std::to_string(kMinTokensPerClass) + " each)";
        return result;
    }

    Eigen::MatrixXd A = tokens_to_matrix(tokens_a);
    Eigen::MatrixXd B = tokens_to_matrix(tokens_b);
    if (A.cols() != B.cols()) throw ContractError("run_condition: class dimension mismatch");

    // one pretest per plan, on the full class-A pool
    GmmConfig pretest_config = plan.gmm;
    pretest_config.seed = derive_seed(plan.master_seed, 0xFFFF0001ULL);
    result.pretest =
        pretest_components(A, plan.pretest_grid, plan.pretest_folds, pretest_config);
    int k = result.pretest.chosen_k;

    result.per_repetition.resize(static_cast<size_t>(plan.repetitions));
    result.per_repetition_scores.resize(static_cast<size_t>(plan.repetitions));

    parallel_for(
        static_cast<size_t>(plan.repetitions),
        [&](size_t r) {
            uint64_t rep_seed = derive_seed(plan.master_seed, r);
            Eigen::MatrixXd a_train, a_test, b_train, b_test;
            Rng rng_a(derive_seed(rep_seed, 3));
            Rng rng_b(derive_seed(rep_seed, 4));
            split_rows(A, plan.split, rng_a, a_train, a_test);
            split_rows(B, plan.split, rng_b, b_train, b_test);

            GmmConfig cfg_a = plan.gmm;
            cfg_a.seed = derive_seed(rep_seed, 1);
            GmmConfig cfg_b = plan.gmm;
            cfg_b.seed = derive_seed(rep_seed, 2);
            GmmModel model_a = fit_gmm(a_train, k, cfg_a);
            GmmModel model_b = fit_gmm(b_train, k, cfg_b);

            TrialScoreSet scores;
            scores.target_llrs = score_tokens(model_a, model_b, a_test);
            scores.nontarget_llrs = score_tokens(model_a, model_b, b_test);
            result.per_repetition[r] = evaluate_scores(scores);
            result.per_repetition_scores[r] = std::move(scores);
        },
        max_threads);

    std::vector<double> cllrs, eers;
    for (const EvalResult& er : result.per_repetition) {
        cllrs.push_back(er.cllr);
        eers.push_back(er.eer * 100.0);
    }
    result.cllr_mean = mean_of(cllrs);
    result.cllr_sd = sample_sd(cllrs);
    result.eer_mean_percent = mean_of(eers);
    result.band = band(result.cllr_mean);
    result.ok = true;
    return result;
}

ComparisonRecord compare_conditions(const AggregateResult& rvf, const AggregateResult& s1s2) {
    if (rvf.plan.speaker != s1s2.plan.speaker || rvf.plan.family != s1s2.plan.family ||
        rvf.plan.phoneme != s1s2.plan.phoneme)
        throw ContractError("compare_conditions: results are not the same speaker+feature");
    ComparisonRecord rec;
    rec.cllr_rvf = rvf.cllr_mean;
    rec.cllr_s1s2 = s1s2.cllr_mean;
    rec.ratio = s1s2.cllr_mean != 0.0 ? rvf.cllr_mean / s1s2.cllr_mean : 1.0;
    rec.rvf_lower = rvf.cllr_mean < s1s2.cllr_mean;
    return rec;
}

std::vector<const AggregateResult*> rank_features(const std::vector<AggregateResult>& results) {
    if (results.empty()) throw ContractError("rank_features: empty result list");

    std::vector<const AggregateResult*> mf_rows;
    const AggregateResult* ltfd = nullptr;
    const AggregateResult* ltf0 = nullptr;
    const AggregateResult* mfcc = nullptr;
    for (const AggregateResult& r : results) {
        if (!r.ok) continue;
        switch (r.plan.family) {
            case Family::mf: mf_rows.push_back(&r); break;
            case Family::ltfd: ltfd = &r; break;
            case Family::ltf0: ltf0 = &r; break;
            case Family::mfcc: mfcc = &r; break;
            case Family::fbank: break;  // illustrative only, not a table row
        }
    }
    std::sort(mf_rows.begin(), mf_rows.end(),
              [](const AggregateResult* a, const AggregateResult* b) {
                  if (a->cllr_mean != b->cllr_mean) return a->cllr_mean < b->cllr_mean;
                  return a->plan.phoneme < b->plan.phoneme;
              });
    if (mf_rows.size() > 2) mf_rows.resize(2);

    std::vector<const AggregateResult*> table = mf_rows;
    if (ltfd) table.push_back(ltfd);
    if (ltf0) table.push_back(ltf0);
    if (mfcc) table.push_back(mfcc);
    return table;
}

}  // namespace dfv
