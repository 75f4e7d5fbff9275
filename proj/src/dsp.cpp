#include "dfv/dsp.hpp"

#include <cmath>
#include <numbers>

#include "dfv/errors.hpp"

namespace dfv {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::vector<double> make_window(WindowShape shape, size_t length) {
    if (length == 0) throw ContractError("make_window: zero length");
    std::vector<double> w(length, 1.0);
    if (length == 1) return w;
    double n1 = static_cast<double>(length - 1);
    switch (shape) {
        case WindowShape::rectangular:
            break;
        case WindowShape::hamming:
            for (size_t i = 0; i < length; ++i)
                w[i] = 0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(i) / n1);
            break;
        case WindowShape::hann:
            for (size_t i = 0; i < length; ++i)
                w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / n1);
            break;
        case WindowShape::gaussian:
            // Praat-style Gaussian: sigma = L/6, near-zero at the edges.
            for (size_t i = 0; i < length; ++i) {
                double x = (static_cast<double>(i) - n1 / 2.0) / (n1 / 2.0);
                w[i] = std::exp(-12.5 * x * x);
            }
            break;
    }
    return w;
}

std::vector<Frame> frame_signal(const std::vector<double>& samples, int sample_rate,
                                const FrameSpec& spec) {
    if (sample_rate <= 0) throw ContractError("frame_signal: non-positive sample rate");
    if (spec.length_s <= 0 || spec.hop_s <= 0)
        throw ContractError("frame_signal: non-positive frame length or hop");

    size_t len = static_cast<size_t>(std::lround(spec.length_s * sample_rate));
    size_t hop = static_cast<size_t>(std::lround(spec.hop_s * sample_rate));
    if (len == 0 || hop == 0) throw ContractError("frame_signal: frame shorter than one sample");
    if (samples.size() < len) return {};

    std::vector<double> win = make_window(spec.window, len);
    std::vector<Frame> frames;
    frames.reserve(samples.size() / hop + 1);

    long half = static_cast<long>(len) / 2;
    for (size_t k = 0;; ++k) {
        long center = static_cast<long>(k * hop);
        if (center >= static_cast<long>(samples.size())) break;
        long start = center - half;
        Frame fr;
        fr.center_s = static_cast<double>(center) / sample_rate;
        fr.samples.resize(len, 0.0);
        double sumsq = 0.0;
        for (size_t i = 0; i < len; ++i) {
            long idx = start + static_cast<long>(i);
            double s = (idx >= 0 && idx < static_cast<long>(samples.size()))
                           ? samples[static_cast<size_t>(idx)]
                           : 0.0;
            sumsq += s * s;
            fr.samples[i] = s * win[i];
        }
        fr.rms = std::sqrt(sumsq / static_cast<double>(len));
        frames.push_back(std::move(fr));
    }
    return frames;
}

size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

void fft(std::vector<std::complex<double>>& data, bool inverse) {
    size_t n = data.size();
    if (n == 0 || (n & (n - 1)) != 0) throw ContractError("fft: size must be a power of two");
    // bit reversal
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(data[i], data[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
        std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = data[i + k];
                std::complex<double> v = data[i + k + len / 2] * w;
                data[i + k] = u + v;
                data[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
    if (inverse)
        for (auto& x : data) x /= static_cast<double>(n);
}

std::vector<double> power_spectrum(const std::vector<double>& frame, size_t nfft) {
    if (nfft == 0 || (nfft & (nfft - 1)) != 0)
        throw ContractError("power_spectrum: nfft must be a power of two");
    if (frame.size() > nfft) throw ContractError("power_spectrum: frame longer than nfft");
    std::vector<std::complex<double>> buf(nfft);
    for (size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
    fft(buf);
    std::vector<double> out(nfft / 2 + 1);
    for (size_t k = 0; k <= nfft / 2; ++k) out[k] = std::norm(buf[k]);
    return out;
}

double hz_to_mel(double hz, MelScale scale) {
    if (scale == MelScale::htk) return 2595.0 * std::log10(1.0 + hz / 700.0);
    // slaney: linear below 1 kHz, log above
    constexpr double f_sp = 200.0 / 3.0;
    constexpr double min_log_hz = 1000.0;
    const double min_log_mel = min_log_hz / f_sp;
    const double logstep = std::log(6.4) / 27.0;
    if (hz < min_log_hz) return hz / f_sp;
    return min_log_mel + std::log(hz / min_log_hz) / logstep;
}

double mel_to_hz(double mel, MelScale scale) {
    if (scale == MelScale::htk) return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
    constexpr double f_sp = 200.0 / 3.0;
    constexpr double min_log_hz = 1000.0;
    const double min_log_mel = min_log_hz / f_sp;
    const double logstep = std::log(6.4) / 27.0;
    if (mel < min_log_mel) return mel * f_sp;
    return min_log_hz * std::exp(logstep * (mel - min_log_mel));
}

std::vector<std::vector<double>> mel_filterbank(int n_filters, size_t nfft, int sample_rate,
                                                double f_lo, double f_hi, MelScale scale) {
    if (n_filters <= 0) throw ConfigError("mel_filterbank: n_filters must be positive");
    if (f_lo < 0 || f_hi <= f_lo) throw ConfigError("mel_filterbank: bad band edges");
    if (f_hi > sample_rate / 2.0 + 1e-9)
        throw ConfigError("mel_filterbank: f_hi above Nyquist");

    double m_lo = hz_to_mel(f_lo, scale);
    double m_hi = hz_to_mel(f_hi, scale);
    std::vector<double> edges(static_cast<size_t>(n_filters) + 2);
    for (size_t i = 0; i < edges.size(); ++i)
        edges[i] = mel_to_hz(m_lo + (m_hi - m_lo) * static_cast<double>(i) / (n_filters + 1), scale);

    size_t n_bins = nfft / 2 + 1;
    double bin_hz = static_cast<double>(sample_rate) / static_cast<double>(nfft);
    std::vector<std::vector<double>> fb(static_cast<size_t>(n_filters),
                                        std::vector<double>(n_bins, 0.0));
    for (int f = 0; f < n_filters; ++f) {
        double left = edges[static_cast<size_t>(f)];
        double center = edges[static_cast<size_t>(f) + 1];
        double right = edges[static_cast<size_t>(f) + 2];
        double norm = (scale == MelScale::slaney) ? 2.0 / (right - left) : 1.0;
        for (size_t k = 0; k < n_bins; ++k) {
            double hz = bin_hz * static_cast<double>(k);
            double w = 0.0;
            if (hz > left && hz < center)
                w = (hz - left) / (center - left);
            else if (hz >= center && hz < right)
                w = (right - hz) / (right - center);
            fb[static_cast<size_t>(f)][k] = w * norm;
        }
    }
    return fb;
}

std::vector<double> dct_ii(const std::vector<double>& x, size_t n_out) {
    size_t n = x.size();
    if (n == 0) throw ContractError("dct_ii: empty input");
    if (n_out > n) throw ContractError("dct_ii: n_out exceeds input size");
    std::vector<double> out(n_out);
    double s0 = std::sqrt(1.0 / static_cast<double>(n));
    double s = std::sqrt(2.0 / static_cast<double>(n));
    for (size_t k = 0; k < n_out; ++k) {
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i)
            acc += x[i] * std::cos(kPi / static_cast<double>(n) *
                                   (static_cast<double>(i) + 0.5) * static_cast<double>(k));
        out[k] = acc * (k == 0 ? s0 : s);
    }
    return out;
}

std::vector<double> dct_iii(const std::vector<double>& x, size_t n_out) {
    size_t n = x.size();
    if (n == 0) throw ContractError("dct_iii: empty input");
    std::vector<double> out(n_out);
    double s0 = std::sqrt(1.0 / static_cast<double>(n_out));
    double s = std::sqrt(2.0 / static_cast<double>(n_out));
    for (size_t i = 0; i < n_out; ++i) {
        double acc = x[0] * s0;
        for (size_t k = 1; k < n; ++k)
            acc += x[k] * s *
                   std::cos(kPi / static_cast<double>(n_out) *
                            (static_cast<double>(i) + 0.5) * static_cast<double>(k));
        out[i] = acc;
    }
    return out;
}

}  // namespace dfv
