#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace dfv {

enum class WindowShape { rectangular, hamming, hann, gaussian };

// Analysis grid. Frame k covers [k*hop - len/2, k*hop + len/2) around its
// center k*hop; edge frames are zero-padded.
struct FrameSpec {
    double length_s = 0.020;
    double hop_s = 0.010;
    WindowShape window = WindowShape::hann;
};

struct Frame {
    std::vector<double> samples;  // windowed
    double center_s = 0.0;
    double rms = 0.0;  // pre-window RMS
};

std::vector<double> make_window(WindowShape shape, size_t length);

std::vector<Frame> frame_signal(const std::vector<double>& samples, int sample_rate,
                                const FrameSpec& spec);

size_t next_pow2(size_t n);

// In-place radix-2 Cooley-Tukey; size must be a power of two.
void fft(std::vector<std::complex<double>>& data, bool inverse = false);

// |X[k]|^2 for k = 0..nfft/2 (real input zero-padded to nfft).
std::vector<double> power_spectrum(const std::vector<double>& frame, size_t nfft);

enum class MelScale { slaney, htk };

double hz_to_mel(double hz, MelScale scale);
double mel_to_hz(double mel, MelScale scale);

// Triangular filters on an FFT power-spectrum grid. Row f holds the weights
// for filter f over bins 0..nfft/2. Slaney filters are area-normalized.
std::vector<std::vector<double>> mel_filterbank(int n_filters, size_t nfft, int sample_rate,
                                                double f_lo, double f_hi, MelScale scale);

// Orthonormal DCT-II / DCT-III (inverse of each other).
std::vector<double> dct_ii(const std::vector<double>& x, size_t n_out);
std::vector<double> dct_iii(const std::vector<double>& x, size_t n_out);

}  // namespace dfv
