#include "dfv/report.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <sstream>

#include "dfv/errors.hpp"
#include "dfv/util.hpp"

namespace dfv {

std::vector<EllipseSpec> emit_ellipses(const std::vector<const FeatureToken*>& mf_tokens,
                                       double confidence, std::vector<std::string>* warnings) {
    if (confidence <= 0.0 || confidence >= 1.0)
        throw ContractError("emit_ellipses: confidence must be in (0, 1)");

    std::map<std::pair<std::string, Condition>, std::vector<const FeatureToken*>> groups;
    for (const FeatureToken* t : mf_tokens) {
        if (t->family != Family::mf)
            throw ContractError("emit_ellipses: non-MF token in input");
        groups[{t->phoneme, t->condition}].push_back(t);
    }

    double chi2 = -2.0 * std::log(1.0 - confidence);
    std::vector<EllipseSpec> out;
    for (const auto& [key, toks] : groups) {
        if (toks.size() < 3) {
            if (warnings)
                warnings->push_back("ellipse group [" + key.first + "] " + to_string(key.second) +
                                    " skipped: only " + std::to_string(toks.size()) + " tokens");
            continue;
        }
        EllipseSpec e;
        e.phoneme = key.first;
        e.condition = key.second;
        e.n_tokens = toks.size();

        double n = static_cast<double>(toks.size());
        Eigen::Vector2d mean = Eigen::Vector2d::Zero();
        for (const FeatureToken* t : toks) mean += Eigen::Vector2d(t->values[1], t->values[0]);
        mean /= n;
        e.mean_f2 = mean(0);
        e.mean_f1 = mean(1);

        Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
        for (const FeatureToken* t : toks) {
            Eigen::Vector2d c = Eigen::Vector2d(t->values[1], t->values[0]) - mean;
            cov += c * c.transpose();
        }
        cov /= n - 1.0;
        e.covariance = cov;

        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> solver(cov);
        if (solver.info() != Eigen::Success)
            throw NumericError("emit_ellipses: eigensolver failed");
        double ev_min = solver.eigenvalues()(0);
        double ev_max = solver.eigenvalues()(1);
        Eigen::Vector2d v_max = solver.eigenvectors().col(1);
        e.major = std::sqrt(std::max(ev_max, 0.0) * chi2);
        e.angle_rad = std::atan2(v_max(1), v_max(0));
        if (ev_min <= 1e-12 * std::max(ev_max, 1.0)) {
            e.minor = 0.0;
            e.degenerate = true;
        } else {
            e.minor = std::sqrt(ev_min * chi2);
        }
        out.push_back(std::move(e));
    }
    return out;
}

DensityCurve emit_ltfd_density(const std::vector<const FeatureToken*>& ltfd_tokens,
                               int formant_index, double bandwidth, double ceiling_hz,
                               int n_grid) {
    if (formant_index < 1 || formant_index > 3)
        throw ContractError("emit_ltfd_density: formant_index must be 1..3");
    if (ceiling_hz <= 0.0 || n_grid < 2) throw ContractError("emit_ltfd_density: bad grid");
    if (ltfd_tokens.empty()) throw InsufficientDataError("emit_ltfd_density: no tokens");

    std::vector<double> values;
    values.reserve(ltfd_tokens.size());
    for (const FeatureToken* t : ltfd_tokens) {
        if (t->values.size() < static_cast<size_t>(formant_index))
            throw ContractError("emit_ltfd_density: token lacks requested formant");
        values.push_back(t->values[static_cast<size_t>(formant_index - 1)]);
    }

    double bw = bandwidth;
    if (bw <= 0.0) {
        // Silverman: 0.9 min(sd, IQR/1.34) n^(-1/5)
        double n = static_cast<double>(values.size());
        double sd = sample_sd(values);
        std::vector<double> sorted = values;
        std::sort(sorted.begin(), sorted.end());
        auto quantile = [&](double q) {
            double pos = q * (n - 1.0);
            size_t lo = static_cast<size_t>(pos);
            size_t hi = std::min(lo + 1, sorted.size() - 1);
            double frac = pos - static_cast<double>(lo);
            return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
        };
        double iqr = quantile(0.75) - quantile(0.25);
        double spread = std::min(sd, iqr / 1.34);
        if (spread <= 0.0) spread = std::max(sd, 1.0);
        bw = 0.9 * spread * std::pow(n, -0.2);
        if (bw <= 0.0) bw = 1.0;
    }

    DensityCurve curve;
    curve.bandwidth = bw;
    curve.hz.resize(static_cast<size_t>(n_grid));
    curve.density.resize(static_cast<size_t>(n_grid));
    double inv_norm = 1.0 / (static_cast<double>(values.size()) * bw *
                             std::sqrt(2.0 * std::numbers::pi));
    for (int i = 0; i < n_grid; ++i) {
        double x = ceiling_hz * static_cast<double>(i) / (n_grid - 1);
        double acc = 0.0;
        for (double v : values) {
            double u = (x - v) / bw;
            acc += std::exp(-0.5 * u * u);
        }
        curve.hz[static_cast<size_t>(i)] = x;
        curve.density[static_cast<size_t>(i)] = acc * inv_norm;
    }
    return curve;
}

std::vector<FbankProfile> emit_fbank_profile(const std::vector<const FeatureToken*>& fbank_tokens,
                                             std::vector<std::string>* warnings) {
    if (fbank_tokens.empty()) return {};
    size_t n_bands = fbank_tokens[0]->values.size();

    std::map<std::string, std::vector<const FeatureToken*>> by_speaker;
    for (const FeatureToken* t : fbank_tokens) {
        if (t->family != Family::fbank)
            throw ContractError("emit_fbank_profile: non-FBANK token in input");
        if (t->values.size() != n_bands)
            throw ContractError("emit_fbank_profile: inconsistent band counts");
        by_speaker[t->speaker].push_back(t);
    }

    std::vector<FbankProfile> out;
    for (const auto& [speaker, toks] : by_speaker) {
        // pooled per-band stats over every frame of this speaker
        double n = static_cast<double>(toks.size());
        std::vector<double> mean(n_bands, 0.0), sd(n_bands, 0.0);
        for (const FeatureToken* t : toks)
            for (size_t b = 0; b < n_bands; ++b) mean[b] += t->values[b];
        for (double& m : mean) m /= n;
        if (toks.size() > 1) {
            for (const FeatureToken* t : toks)
                for (size_t b = 0; b < n_bands; ++b) {
                    double c = t->values[b] - mean[b];
                    sd[b] += c * c;
                }
            for (double& s : sd) s = std::sqrt(s / (n - 1.0));
        }

        std::map<Condition, std::vector<const FeatureToken*>> by_condition;
        for (const FeatureToken* t : toks) by_condition[t->condition].push_back(t);

        for (const auto& [condition, group] : by_condition) {
            if (group.size() < 2) {
                if (warnings)
                    warnings->push_back("fbank group " + speaker + "/" + to_string(condition) +
                                        " skipped: fewer than 2 frames");
                continue;
            }
            FbankProfile p;
            p.speaker = speaker;
            p.condition = condition;
            p.n_frames = group.size();
            double gn = static_cast<double>(group.size());

            std::vector<double> zmean(n_bands, 0.0), zsd(n_bands, 0.0);
            auto z = [&](const FeatureToken* t, size_t b) {
                return sd[b] > 0.0 ? (t->values[b] - mean[b]) / sd[b] : 0.0;
            };
            for (const FeatureToken* t : group)
                for (size_t b = 0; b < n_bands; ++b) zmean[b] += z(t, b);
            for (double& m : zmean) m /= gn;
            for (const FeatureToken* t : group)
                for (size_t b = 0; b < n_bands; ++b) {
                    double c = z(t, b) - zmean[b];
                    zsd[b] += c * c;
                }
            for (double& s : zsd) s = std::sqrt(s / (gn - 1.0));

            p.mean = zmean;
            p.ci_lo.resize(n_bands);
            p.ci_hi.resize(n_bands);
            for (size_t b = 0; b < n_bands; ++b) {
                double half = 1.96 * zsd[b] / std::sqrt(gn);
                p.ci_lo[b] = zmean[b] - half;
                p.ci_hi[b] = zmean[b] + half;
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::string ellipses_to_csv(const std::vector<EllipseSpec>& ellipses) {
    std::ostringstream os;
    os << "phoneme,condition,mean_f2,mean_f1,major,minor,angle_rad\n";
    for (const EllipseSpec& e : ellipses) {
        os << e.phoneme << ',' << to_string(e.condition) << ',' << format_double(e.mean_f2) << ','
           << format_double(e.mean_f1) << ',' << format_double(e.major) << ','
           << format_double(e.minor) << ',' << format_double(e.angle_rad) << "\n";
    }
    return os.str();
}

std::string density_to_csv(const DensityCurve& curve) {
    std::ostringstream os;
    os << "hz,density\n";
    for (size_t i = 0; i < curve.hz.size(); ++i)
        os << format_double(curve.hz[i]) << ',' << format_double(curve.density[i]) << "\n";
    return os.str();
}

std::string fbank_profile_to_csv(const FbankProfile& profile) {
    std::ostringstream os;
    os << "band,mean,ci_lo,ci_hi\n";
    for (size_t b = 0; b < profile.mean.size(); ++b)
        os << (b + 1) << ',' << format_double(profile.mean[b]) << ','
           << format_double(profile.ci_lo[b]) << ',' << format_double(profile.ci_hi[b]) << "\n";
    return os.str();
}

}  // namespace dfv
