#include "dfv/lpc.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "dfv/errors.hpp"

namespace dfv {

namespace {
constexpr double kPi = std::numbers::pi;
}

LpcModel burg_lpc(const std::vector<double>& frame, int order) {
    size_t n = frame.size();
    if (order <= 0) throw ContractError("burg_lpc: order must be positive");
    if (n <= static_cast<size_t>(order))
        throw InsufficientDataError("burg_lpc: frame no longer than order");

    std::vector<double> f(frame), b(frame);
    std::vector<double> a(static_cast<size_t>(order), 0.0);
    double e = 0.0;
    for (double s : frame) e += s * s;
    e /= static_cast<double>(n);
    if (e <= 0.0) throw DegenerateInputError("burg_lpc: all-zero frame");

    for (int m = 0; m < order; ++m) {
        double num = 0.0, den = 0.0;
        for (size_t i = static_cast<size_t>(m) + 1; i < n; ++i) {
            num += f[i] * b[i - 1];
            den += f[i] * f[i] + b[i - 1] * b[i - 1];
        }
        if (den <= 0.0) throw DegenerateInputError("burg_lpc: zero energy in recursion");
        double k = -2.0 * num / den;
        if (!(std::abs(k) < 1.0))
            throw NumericError("burg_lpc: reflection coefficient left (-1, 1)");

        a[static_cast<size_t>(m)] = k;
        for (int i = 0; i < m / 2 + m % 2; ++i) {
            double ai = a[static_cast<size_t>(i)];
            double aj = a[static_cast<size_t>(m - 1 - i)];
            a[static_cast<size_t>(i)] = ai + k * aj;
            if (i < m - 1 - i) a[static_cast<size_t>(m - 1 - i)] = aj + k * ai;
        }
        e *= 1.0 - k * k;

        for (size_t i = n - 1; i > static_cast<size_t>(m); --i) {
            double fi = f[i];
            f[i] = fi + k * b[i - 1];
            b[i] = b[i - 1] + k * fi;
        }
    }

    LpcModel model;
    model.coeffs = std::move(a);
    model.gain = e;
    return model;
}

std::vector<FormantPeak> lpc_to_formants(const LpcModel& model, int sample_rate,
                                         double ceiling_hz, double max_bandwidth_hz) {
    size_t p = model.coeffs.size();
    if (p == 0) return {};

    // companion matrix of z^p + a_1 z^(p-1) + ... + a_p
    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p),
                                                 static_cast<Eigen::Index>(p));
    for (size_t i = 0; i < p; ++i)
        comp(0, static_cast<Eigen::Index>(i)) = -model.coeffs[i];
    for (size_t i = 1; i < p; ++i)
        comp(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;

    Eigen::EigenSolver<Eigen::MatrixXd> solver(comp, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw NumericError("lpc_to_formants: eigensolver failed to converge");

    std::vector<FormantPeak> peaks;
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
        std::complex<double> z = solver.eigenvalues()(i);
        if (z.imag() <= 0.0) continue;  // one pole per conjugate pair
        double r = std::abs(z);
        if (r >= 1.0 || r <= 0.0) continue;
        double freq = std::atan2(z.imag(), z.real()) * sample_rate / (2.0 * kPi);
        double bw = -std::log(r) * sample_rate / kPi;
        if (freq > 50.0 && freq < ceiling_hz && bw < max_bandwidth_hz)
            peaks.push_back({freq, bw});
    }
    std::sort(peaks.begin(), peaks.end(),
              [](const FormantPeak& a, const FormantPeak& b) {
                  return a.frequency_hz < b.frequency_hz;
              });
    return peaks;
}

std::vector<FormantFrame> formant_track(const AudioBuffer& audio, const FormantConfig& config) {
    if (config.ceiling_hz <= 0 || config.max_formants <= 0)
        throw ContractError("formant_track: bad config");

    int target_rate = static_cast<int>(std::lround(2.0 * config.ceiling_hz));
    AudioBuffer work = resample(audio, target_rate);

    // +6 dB/oct pre-emphasis above preemphasis_from_hz
    double alpha = std::exp(-2.0 * kPi * config.preemphasis_from_hz / target_rate);
    std::vector<double> emph(work.samples.size());
    if (!work.samples.empty()) {
        emph[0] = work.samples[0];
        for (size_t i = 1; i < work.samples.size(); ++i)
            emph[i] = work.samples[i] - alpha * work.samples[i - 1];
    }

    FrameSpec spec;
    spec.length_s = config.window_s;
    spec.hop_s = config.hop_s;
    spec.window = WindowShape::gaussian;
    std::vector<Frame> frames = frame_signal(emph, target_rate, spec);

    int order = 2 * config.max_formants;
    std::vector<FormantFrame> track;
    track.reserve(frames.size());
    for (const Frame& fr : frames) {
        FormantFrame out;
        out.time_s = fr.center_s;
        out.rms = fr.rms;
        try {
            LpcModel model = burg_lpc(fr.samples, order);
            out.formants =
                lpc_to_formants(model, target_rate, config.ceiling_hz, config.max_bandwidth_hz);
        } catch (const DegenerateInputError&) {
            // silent frame: no formants
        } catch (const NumericError&) {
            // unstable fit: treat as unmeasurable rather than abort the file
        }
        track.push_back(std::move(out));
    }
    return track;
}

}  // namespace dfv
