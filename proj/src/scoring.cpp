#include "dfv/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dfv/errors.hpp"

namespace dfv {

std::vector<double> score_tokens(const GmmModel& numerator, const GmmModel& denominator,
                                 const Eigen::MatrixXd& X) {
    if (numerator.dim != denominator.dim)
        throw ContractError("score_tokens: model dimensions differ");
    Eigen::VectorXd num = log_density_rows(numerator, X);
    Eigen::VectorXd den = log_density_rows(denominator, X);
    std::vector<double> out(static_cast<size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        out[static_cast<size_t>(i)] = std::clamp(num(i) - den(i), -kLlrClamp, kLlrClamp);
    return out;
}

namespace {

// log(1 + e^u), stable for large |u|
double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }

void require_nonempty(const TrialScoreSet& scores, const char* who) {
    if (scores.target_llrs.empty() || scores.nontarget_llrs.empty())
        throw ContractError(std::string(who) + ": empty target or non-target score list");
}

}  // namespace

double cllr(const TrialScoreSet& scores) {
    require_nonempty(scores, "cllr");
    const double ln2 = std::log(2.0);
    double t_sum = 0.0;
    for (double l : scores.target_llrs) t_sum += softplus(-l) / ln2;
    double n_sum = 0.0;
    for (double l : scores.nontarget_llrs) n_sum += softplus(l) / ln2;
    return t_sum / (2.0 * static_cast<double>(scores.target_llrs.size())) +
           n_sum / (2.0 * static_cast<double>(scores.nontarget_llrs.size()));
}

double eer(const TrialScoreSet& scores) {
    require_nonempty(scores, "eer");
    std::vector<double> targets = scores.target_llrs;
    std::vector<double> nontargets = scores.nontarget_llrs;
    std::sort(targets.begin(), targets.end());
    std::sort(nontargets.begin(), nontargets.end());

    // candidate thresholds: every distinct score plus +inf as final sentinel
    std::vector<double> thresholds;
    thresholds.reserve(targets.size() + nontargets.size() + 1);
    std::merge(targets.begin(), targets.end(), nontargets.begin(), nontargets.end(),
               std::back_inserter(thresholds));
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
    thresholds.push_back(std::numeric_limits<double>::infinity());

    double nt = static_cast<double>(targets.size());
    double nn = static_cast<double>(nontargets.size());

    double prev_miss = 0.0, prev_fa = 1.0;  // theta = -inf operating point
    double prev_diff = prev_miss - prev_fa;
    for (double theta : thresholds) {
        // miss: targets strictly below theta; false alarm: nontargets >= theta
        double miss =
            static_cast<double>(std::lower_bound(targets.begin(), targets.end(), theta) -
                                targets.begin()) /
            nt;
        double fa = static_cast<double>(nontargets.end() -
                                        std::lower_bound(nontargets.begin(), nontargets.end(),
                                                         theta)) /
                    nn;
        double diff = miss - fa;
        // crossings above 0.5 mean a worse-than-chance scorer; flipping its
        // decisions puts it back at chance, so 0.5 is the ceiling we report
        if (diff == 0.0) return std::min(miss, 0.5);
        if (prev_diff < 0.0 && diff > 0.0) {
            double t = prev_diff / (prev_diff - diff);
            return std::min(prev_miss + t * (miss - prev_miss), 0.5);
        }
        prev_miss = miss;
        prev_fa = fa;
        prev_diff = diff;
    }
    return 0.5;  // unreachable: the +inf sentinel yields diff = +1
}

std::string to_string(Band b) {
    switch (b) {
        case Band::good: return "good";
        case Band::moderate: return "moderate";
        case Band::weak: return "weak";
    }
    throw ContractError("to_string: bad Band");
}

Band band(double cllr_value) {
    if (cllr_value < 0.0) throw ContractError("band: negative Cllr");
    if (cllr_value < 0.4) return Band::good;
    if (cllr_value <= 0.6) return Band::moderate;
    return Band::weak;
}

EvalResult evaluate_scores(const TrialScoreSet& scores) {
    EvalResult r;
    r.cllr = cllr(scores);
    r.eer = eer(scores);
    r.band = band(r.cllr);
    return r;
}

}  // namespace dfv
