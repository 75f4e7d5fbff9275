#pragma once

#include <string>
#include <vector>

namespace dfv {

// Mono audio with samples normalized to [-1, 1].
struct AudioBuffer {
    std::vector<double> samples;
    int sample_rate = 0;
    std::string source_path;

    double duration_seconds() const {
        return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
    }
};

enum class SampleFormat { pcm16, pcm24, pcm32, float32, float64 };

// Reads a RIFF/WAVE file. PCM 16/24/32-bit integer and 32/64-bit float are
// decoded; multichannel input is mixed down to mono by channel mean; integer
// samples are scaled by 1/2^(bits-1).
AudioBuffer read_wav(const std::string& path);

void write_wav(const std::string& path, const AudioBuffer& buf,
               SampleFormat fmt = SampleFormat::pcm16);

// Kaiser-windowed sinc resampler (64 taps per phase, beta 8.6). Identity when
// target_rate equals the source rate.
AudioBuffer resample(const AudioBuffer& buf, int target_rate);

}  // namespace dfv
