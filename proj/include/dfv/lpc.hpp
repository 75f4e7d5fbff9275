#pragma once

#include <vector>

#include "dfv/audio.hpp"
#include "dfv/dsp.hpp"

namespace dfv {

// All-pole model A(z) = 1 + sum_{i=1..p} a[i-1] z^-i.
struct LpcModel {
    std::vector<double> coeffs;  // a_1..a_p
    double gain = 0.0;           // residual power (prediction error)
};

// Burg's method. Requires frame.size() > order. Reflection coefficients stay
// in (-1, 1), so the model is minimum-phase (poles strictly inside the unit
// circle) up to roundoff.
LpcModel burg_lpc(const std::vector<double>& frame, int order);

struct FormantPeak {
    double frequency_hz = 0.0;
    double bandwidth_hz = 0.0;
};

struct FormantFrame {
    double time_s = 0.0;
    std::vector<FormantPeak> formants;  // ascending frequency
    double rms = 0.0;
};

// Candidate resonances of an LPC model: complex pole pairs mapped to
// frequency/bandwidth, filtered to 50 Hz < f < ceiling and bw < max_bw.
std::vector<FormantPeak> lpc_to_formants(const LpcModel& model, int sample_rate,
                                         double ceiling_hz, double max_bandwidth_hz);

struct FormantConfig {
    double ceiling_hz = 5500.0;
    int max_formants = 5;
    double window_s = 0.025;
    double hop_s = 0.010;
    double preemphasis_from_hz = 50.0;
    double max_bandwidth_hz = 700.0;
};

// Praat-equivalent pipeline: resample to 2*ceiling, +6 dB/oct pre-emphasis
// above preemphasis_from_hz, Gaussian-windowed frames, Burg LPC of order
// 2*max_formants, root solving. Frame centers lie on the analysis grid of
// the resampled signal.
std::vector<FormantFrame> formant_track(const AudioBuffer& audio, const FormantConfig& config);

}  // namespace dfv
