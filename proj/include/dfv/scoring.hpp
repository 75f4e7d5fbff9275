#pragma once

#include <string>
#include <vector>

#include "dfv/gmm.hpp"

namespace dfv {

// Natural-log likelihood ratios; target = numerator-source tokens.
struct TrialScoreSet {
    std::vector<double> target_llrs;
    std::vector<double> nontarget_llrs;
};

inline constexpr double kLlrClamp = 745.0;

// l_t = log P(x | numerator) - log P(x | denominator), flat prior odds,
// clamped to +/-745.
std::vector<double> score_tokens(const GmmModel& numerator, const GmmModel& denominator,
                                 const Eigen::MatrixXd& X);

// Cllr over natural-log scores (the definition's base-2 logs live here).
double cllr(const TrialScoreSet& scores);

// Equal error rate via a pooled threshold sweep, linearly interpolated at the
// sign change of (miss - false alarm).
double eer(const TrialScoreSet& scores);

enum class Band { good, moderate, weak };
std::string to_string(Band b);

// good < 0.4; moderate in [0.4, 0.6]; weak > 0.6.
Band band(double cllr_value);

struct EvalResult {
    double cllr = 0.0;
    double eer = 0.0;  // fraction in [0, 0.5]
    Band band = Band::weak;
};

EvalResult evaluate_scores(const TrialScoreSet& scores);

}  // namespace dfv
