#include <cmath>
#include <vector>

#include "doctest.h"
#include "dfv/pitch.hpp"
#include "dfv/synth.hpp"
#include "dfv/util.hpp"

using namespace dfv;

namespace {

AudioBuffer sawtooth(double f0, double seconds, int rate = 16000) {
    AudioBuffer buf;
    buf.sample_rate = rate;
    double phase = 0.0;
    for (int i = 0; i < static_cast<int>(seconds * rate); ++i) {
        buf.samples.push_back(2.0 * phase - 1.0);
        phase += f0 / rate;
        if (phase >= 1.0) phase -= 1.0;
    }
    return buf;
}

}  // namespace

TEST_CASE("120 Hz sawtooth is tracked within 2 Hz") {
    AudioBuffer buf = sawtooth(120.0, 1.0);
    auto frames = estimate_f0(buf, PitchConfig{});
    REQUIRE(!frames.empty());
    size_t voiced = 0;
    for (const PitchFrame& f : frames) {
        if (!f.voiced) continue;
        ++voiced;
        CHECK(f.f0_hz == doctest::Approx(120.0).epsilon(2.0 / 120.0));
        CHECK(f.nccf >= 0.45);
    }
    CHECK(voiced >= frames.size() * 8 / 10);
}

TEST_CASE("320 Hz synthetic vowel is tracked") {
    AudioBuffer buf;
    buf.sample_rate = 16000;
    buf.samples = synth_vowel(16000, 0.6, 320.0, 700.0, 1200.0, 2600.0);
    auto frames = estimate_f0(buf, PitchConfig{});
    size_t hits = 0, voiced = 0;
    for (const PitchFrame& f : frames) {
        if (!f.voiced) continue;
        ++voiced;
        if (std::abs(f.f0_hz - 320.0) < 5.0) ++hits;
    }
    REQUIRE(voiced > 10);
    CHECK(hits >= voiced * 9 / 10);
}

TEST_CASE("white noise is nearly all unvoiced") {
    Rng rng(55);
    AudioBuffer buf;
    buf.sample_rate = 16000;
    for (int i = 0; i < 16000; ++i) buf.samples.push_back(rng.uniform(-0.5, 0.5));
    auto frames = estimate_f0(buf, PitchConfig{});
    REQUIRE(!frames.empty());
    size_t voiced = 0;
    for (const PitchFrame& f : frames)
        if (f.voiced) ++voiced;
    CHECK(voiced * 20 <= frames.size());  // >= 95 % unvoiced
}

TEST_CASE("silence is unvoiced with f0 = 0") {
    AudioBuffer buf;
    buf.sample_rate = 16000;
    buf.samples.assign(16000, 0.0);
    auto frames = estimate_f0(buf, PitchConfig{});
    for (const PitchFrame& f : frames) {
        CHECK(!f.voiced);
        CHECK(f.f0_hz == 0.0);
    }
}

TEST_CASE("quiet tail below the silence floor is suppressed") {
    AudioBuffer buf = sawtooth(150.0, 0.5);
    size_t n = buf.samples.size();
    for (size_t i = n / 2; i < n; ++i) buf.samples[i] *= 1e-5;  // -100 dB
    auto frames = estimate_f0(buf, PitchConfig{});
    for (const PitchFrame& f : frames) {
        if (f.time_s > 0.3) CHECK(!f.voiced);
    }
}

TEST_CASE("out-of-range periodicity stays unvoiced") {
    // 50 Hz is below the default 75 Hz floor
    AudioBuffer buf = sawtooth(50.0, 0.8);
    auto frames = estimate_f0(buf, PitchConfig{});
    size_t called_at_50 = 0;
    for (const PitchFrame& f : frames)
        if (f.voiced && std::abs(f.f0_hz - 50.0) < 2.0) ++called_at_50;
    CHECK(called_at_50 == 0);
}
