#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "dfv/errors.hpp"
#include "dfv/lpc.hpp"
#include "dfv/synth.hpp"
#include "dfv/util.hpp"

using namespace dfv;
constexpr double pi = std::numbers::pi;

TEST_CASE("burg on an AR(1) process recovers the coefficient") {
    // x[n] = 0.8 x[n-1] + e[n]  ->  a_1 = -0.8 in the A(z) convention
    Rng rng(41);
    std::vector<double> x(8000, 0.0);
    for (size_t n = 1; n < x.size(); ++n) x[n] = 0.8 * x[n - 1] + rng.normal();
    LpcModel m = burg_lpc(x, 1);
    REQUIRE(m.coeffs.size() == 1);
    CHECK(m.coeffs[0] == doctest::Approx(-0.8).epsilon(0.02));
    CHECK(m.gain > 0.0);
}

TEST_CASE("burg on a damped cosine recovers the pole pair") {
    // x[n] = r cos(w) 2 x[n-1] - r^2 x[n-2] driven by noise: poles r e^{+-iw}
    double r = 0.98, w = 2.0 * pi * 0.11;
    Rng rng(42);
    std::vector<double> x(16000, 0.0);
    for (size_t n = 2; n < x.size(); ++n)
        x[n] = 2.0 * r * std::cos(w) * x[n - 1] - r * r * x[n - 2] + 0.01 * rng.normal();
    LpcModel m = burg_lpc(x, 2);
    REQUIRE(m.coeffs.size() == 2);
    CHECK(m.coeffs[0] == doctest::Approx(-2.0 * r * std::cos(w)).epsilon(0.005));
    CHECK(m.coeffs[1] == doctest::Approx(r * r).epsilon(0.005));
}

TEST_CASE("burg on white noise leaves small coefficients") {
    Rng rng(43);
    std::vector<double> x(16000);
    for (double& v : x) v = rng.normal();
    LpcModel m = burg_lpc(x, 10);
    for (double a : m.coeffs) CHECK(std::abs(a) < 0.2);
}

TEST_CASE("burg input contracts") {
    CHECK_THROWS_AS(burg_lpc(std::vector<double>(5, 1.0), 10), InsufficientDataError);
    CHECK_THROWS_AS(burg_lpc(std::vector<double>(64, 0.0), 4), DegenerateInputError);
}

TEST_CASE("lpc_to_formants maps a known pole pair") {
    // Place poles at angle w (=> f = w * rate / 2pi) and radius r
    // (=> bw = -ln r * rate / pi).
    double rate = 10000.0, f = 1100.0, bw = 150.0;
    double w = 2.0 * pi * f / rate;
    double r = std::exp(-pi * bw / rate);
    LpcModel m;
    m.coeffs = {-2.0 * r * std::cos(w), r * r};
    m.gain = 1.0;
    auto peaks = lpc_to_formants(m, static_cast<int>(rate), 5000.0, 700.0);
    REQUIRE(peaks.size() == 1);
    CHECK(peaks[0].frequency_hz == doctest::Approx(f).epsilon(1e-9));
    CHECK(peaks[0].bandwidth_hz == doctest::Approx(bw).epsilon(1e-9));

    // widening past the bandwidth cutoff drops the candidate
    double r2 = std::exp(-pi * 900.0 / rate);
    m.coeffs = {-2.0 * r2 * std::cos(w), r2 * r2};
    CHECK(lpc_to_formants(m, static_cast<int>(rate), 5000.0, 700.0).empty());
}

TEST_CASE("formant_track recovers synthetic vowel targets within 30 Hz") {
    std::vector<double> x = synth_vowel(16000, 0.5, 120.0, 700.0, 1200.0, 2600.0);
    AudioBuffer buf;
    buf.sample_rate = 16000;
    buf.samples = x;
    FormantConfig config;
    auto track = formant_track(buf, config);
    REQUIRE(track.size() > 20);

    // median per formant over frames with at least three candidates
    std::vector<double> f1s, f2s, f3s;
    for (const FormantFrame& fr : track) {
        if (fr.formants.size() < 3) continue;
        f1s.push_back(fr.formants[0].frequency_hz);
        f2s.push_back(fr.formants[1].frequency_hz);
        f3s.push_back(fr.formants[2].frequency_hz);
    }
    REQUIRE(f1s.size() > 10);
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    CHECK(median(f1s) == doctest::Approx(700.0).epsilon(30.0 / 700.0));
    CHECK(median(f2s) == doctest::Approx(1200.0).epsilon(30.0 / 1200.0));
    CHECK(median(f3s) == doctest::Approx(2600.0).epsilon(30.0 / 2600.0));
}

TEST_CASE("formant_track output is ascending and inside the ceiling") {
    std::vector<double> x = synth_vowel(16000, 0.3, 150.0, 500.0, 1500.0, 2500.0);
    AudioBuffer buf;
    buf.sample_rate = 16000;
    buf.samples = x;
    auto track = formant_track(buf, FormantConfig{});
    for (const FormantFrame& fr : track) {
        for (size_t i = 0; i < fr.formants.size(); ++i) {
            CHECK(fr.formants[i].frequency_hz > 50.0);
            CHECK(fr.formants[i].frequency_hz < 5500.0);
            if (i > 0)
                CHECK(fr.formants[i].frequency_hz >= fr.formants[i - 1].frequency_hz);
        }
    }
}
