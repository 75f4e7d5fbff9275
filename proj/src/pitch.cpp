#include "dfv/pitch.hpp"

#include <algorithm>
#include <cmath>

#include "dfv/errors.hpp"

namespace dfv {

namespace {

// NCCF at a single lag over x[0..len) vs x[lag..lag+len).
double nccf_at(const std::vector<double>& x, size_t lag, size_t len) {
    double num = 0.0, e0 = 0.0, e1 = 0.0;
    for (size_t i = 0; i < len; ++i) {
        double a = x[i];
        double b = x[i + lag];
        num += a * b;
        e0 += a * a;
        e1 += b * b;
    }
    double den = std::sqrt(e0 * e1);
    return den > 0.0 ? num / den : 0.0;
}

}  // namespace

std::vector<PitchFrame> estimate_f0(const AudioBuffer& audio, const PitchConfig& config) {
    if (config.f0_min_hz <= 0 || config.f0_max_hz <= config.f0_min_hz)
        throw ContractError("estimate_f0: bad f0 range");
    int rate = audio.sample_rate;
    size_t lag_min = static_cast<size_t>(std::floor(rate / config.f0_max_hz));
    size_t lag_max = static_cast<size_t>(std::ceil(rate / config.f0_min_hz));
    if (lag_min < 2) lag_min = 2;

    FrameSpec spec = config.frame;
    spec.window = WindowShape::rectangular;
    size_t frame_len = static_cast<size_t>(std::lround(spec.length_s * rate));
    if (frame_len <= lag_max)
        throw ContractError("estimate_f0: frame too short for f0_min");
    size_t corr_len = frame_len - lag_max;

    std::vector<Frame> frames = frame_signal(audio.samples, rate, spec);
    std::vector<PitchFrame> out;
    out.reserve(frames.size());

    double max_rms = 0.0;
    for (const Frame& fr : frames) max_rms = std::max(max_rms, fr.rms);
    double silence_floor = max_rms * std::pow(10.0, -config.silence_db / 20.0);

    for (const Frame& fr : frames) {
        PitchFrame pf;
        pf.time_s = fr.center_s;
        if (fr.rms <= silence_floor || max_rms == 0.0) {
            out.push_back(pf);
            continue;
        }

        // remove DC so silence-adjacent frames don't correlate on offset
        double mean = 0.0;
        for (double s : fr.samples) mean += s;
        mean /= static_cast<double>(fr.samples.size());
        std::vector<double> x(fr.samples.size());
        for (size_t i = 0; i < x.size(); ++i) x[i] = fr.samples[i] - mean;

        double best_val = -2.0;
        std::vector<double> corr(lag_max + 1, 0.0);
        for (size_t lag = lag_min; lag <= lag_max; ++lag) {
            corr[lag] = nccf_at(x, lag, corr_len);
            best_val = std::max(best_val, corr[lag]);
        }
        // A periodic signal peaks equally at every multiple of the true
        // period; take the smallest lag within a hair of the max so
        // subharmonics never win.
        size_t best_lag = 0;
        for (size_t lag = lag_min; lag <= lag_max; ++lag) {
            if (corr[lag] >= best_val - 0.01) {
                best_lag = lag;
                break;
            }
        }

        pf.nccf = best_val;
        if (best_val >= config.voicing_threshold && best_lag > 0) {
            double lag_est = static_cast<double>(best_lag);
            if (best_lag > lag_min && best_lag < lag_max) {
                double y0 = corr[best_lag - 1], y1 = corr[best_lag], y2 = corr[best_lag + 1];
                double denom = y0 - 2.0 * y1 + y2;
                if (std::abs(denom) > 1e-12) {
                    double delta = 0.5 * (y0 - y2) / denom;
                    if (std::abs(delta) <= 1.0) lag_est += delta;
                }
            }
            pf.f0_hz = rate / lag_est;
            pf.voiced = pf.f0_hz >= config.f0_min_hz && pf.f0_hz <= config.f0_max_hz;
            if (!pf.voiced) pf.f0_hz = 0.0;
        }
        out.push_back(pf);
    }
    return out;
}

}  // namespace dfv
