#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dfv/features.hpp"
#include "dfv/gmm.hpp"
#include "dfv/scoring.hpp"

namespace dfv {

enum class ConditionPair { real_vs_fake, s1_vs_s2 };

std::string to_string(ConditionPair p);
ConditionPair condition_pair_from_string(const std::string& s);

// Class selectors. The real class unions {real, s1}: the paper's real-vs-fake
// comparison uses session-1 speech as the real side (real GMM = S1 GMM).
std::set<Condition> class_a_conditions(ConditionPair p);
std::set<Condition> class_b_conditions(ConditionPair p);

struct ExperimentPlan {
    std::string speaker;
    Family family = Family::mf;
    std::string phoneme;  // set iff family == mf
    ConditionPair pair = ConditionPair::real_vs_fake;
    int repetitions = 30;
    double split = 0.7;  // train fraction
    std::uint64_t master_seed = 0;
    GmmConfig gmm;
    std::vector<int> pretest_grid = {1, 2, 4, 8, 16};
    int pretest_folds = 5;

    std::string label() const;  // e.g. "MF [ʊ]" / "LTFDs"
};

inline constexpr size_t kMinTokensPerClass = 20;

struct AggregateResult {
    ExperimentPlan plan;
    bool ok = false;
    std::string skip_reason;
    double cllr_mean = 0.0;
    double cllr_sd = 0.0;
    double eer_mean_percent = 0.0;
    Band band = Band::weak;
    std::vector<EvalResult> per_repetition;
    std::vector<TrialScoreSet> per_repetition_scores;
    PretestReport pretest;
};

AggregateResult run_condition(const ExperimentPlan& plan, const TokenStore& store,
                              int max_threads = 0);

struct ComparisonRecord {
    double cllr_rvf = 0.0;
    double cllr_s1s2 = 0.0;
    double ratio = 0.0;  // rvf / s1s2
    bool rvf_lower = false;
};

ComparisonRecord compare_conditions(const AggregateResult& rvf, const AggregateResult& s1s2);

// Report-table ordering: MF rows ascending by Cllr mean (phoneme-label tie
// break), top two kept, then LTFD, LTF0, MFCC. Skipped results excluded.
std::vector<const AggregateResult*> rank_features(const std::vector<AggregateResult>& results);

}  // namespace dfv
