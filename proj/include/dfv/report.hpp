#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "dfv/features.hpp"

namespace dfv {

struct EllipseSpec {
    std::string phoneme;
    Condition condition = Condition::real;
    double mean_f2 = 0.0;
    double mean_f1 = 0.0;
    Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();  // (F2, F1) order
    double major = 0.0;  // half-axis lengths
    double minor = 0.0;
    double angle_rad = 0.0;  // major axis vs the F2 axis
    bool degenerate = false;
    size_t n_tokens = 0;
};

// One ellipse per (phoneme, condition) MF group with >= 3 tokens; half-axes
// are sqrt(eigenvalue * chi2) with chi2 = -2 ln(1 - confidence).
std::vector<EllipseSpec> emit_ellipses(const std::vector<const FeatureToken*>& mf_tokens,
                                       double confidence,
                                       std::vector<std::string>* warnings = nullptr);

struct DensityCurve {
    std::vector<double> hz;
    std::vector<double> density;
    double bandwidth = 0.0;
};

// Gaussian KDE of one formant's LTFD values on [0, ceiling]; bandwidth <= 0
// selects Silverman's rule.
DensityCurve emit_ltfd_density(const std::vector<const FeatureToken*>& ltfd_tokens,
                               int formant_index, double bandwidth, double ceiling_hz,
                               int n_grid = 512);

struct FbankProfile {
    std::string speaker;
    Condition condition = Condition::real;
    std::vector<double> mean;   // per band, z-scored
    std::vector<double> ci_lo;  // 95 % CI bounds
    std::vector<double> ci_hi;
    size_t n_frames = 0;
};

// Per-band z-scoring against each speaker's pooled (all conditions) frame
// statistics, then per (speaker, condition) mean with 95 % CI over frames.
std::vector<FbankProfile> emit_fbank_profile(const std::vector<const FeatureToken*>& fbank_tokens,
                                             std::vector<std::string>* warnings = nullptr);

std::string ellipses_to_csv(const std::vector<EllipseSpec>& ellipses);
std::string density_to_csv(const DensityCurve& curve);
std::string fbank_profile_to_csv(const FbankProfile& profile);

}  // namespace dfv
