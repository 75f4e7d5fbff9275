#pragma once

#include <vector>

#include "dfv/audio.hpp"
#include "dfv/dsp.hpp"

namespace dfv {

struct PitchFrame {
    double time_s = 0.0;
    double f0_hz = 0.0;  // 0 when unvoiced
    double nccf = 0.0;   // peak correlation of the winning lag
    bool voiced = false;
};

struct PitchConfig {
    FrameSpec frame{0.040, 0.010, WindowShape::rectangular};
    double f0_min_hz = 75.0;
    double f0_max_hz = 600.0;
    double voicing_threshold = 0.45;  // min NCCF peak for a voiced call
    double silence_db = 60.0;         // frames this far below peak RMS are silent
};

// Normalized cross-correlation pitch tracker with parabolic peak
// interpolation. Frames are unwindowed; candidates searched over the lag
// range implied by [f0_min, f0_max].
std::vector<PitchFrame> estimate_f0(const AudioBuffer& audio, const PitchConfig& config);

}  // namespace dfv
