#include "dfv/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dfv/errors.hpp"
#include "dfv/util.hpp"

namespace dfv {

namespace {

uint32_t read_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

uint16_t read_u16(const unsigned char* p) {
    return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& s, uint32_t v) {
    s += static_cast<char>(v & 0xff);
    s += static_cast<char>((v >> 8) & 0xff);
    s += static_cast<char>((v >> 16) & 0xff);
    s += static_cast<char>((v >> 24) & 0xff);
}

void put_u16(std::string& s, uint16_t v) {
    s += static_cast<char>(v & 0xff);
    s += static_cast<char>((v >> 8) & 0xff);
}

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xfffe;

// zeroth-order modified Bessel function, for the Kaiser window
double bessel_i0(double x) {
    double sum = 1.0, term = 1.0;
    double half = x / 2.0;
    for (int k = 1; k < 40; ++k) {
        term *= (half / k) * (half / k);
        sum += term;
        if (term < sum * 1e-16) break;
    }
    return sum;
}

double sinc(double x) {
    if (std::abs(x) < 1e-12) return 1.0;
    double px = M_PI * x;
    return std::sin(px) / px;
}

constexpr int kTapsPerPhase = 64;
constexpr double kKaiserBeta = 8.6;

}  // namespace

AudioBuffer read_wav(const std::string& path) {
    std::string raw = read_file(path);
    const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
    size_t size = raw.size();

    if (size < 12 || std::memcmp(p, "RIFF", 4) != 0)
        throw FormatError(path + ": missing RIFF chunk");
    if (std::memcmp(p + 8, "WAVE", 4) != 0)
        throw FormatError(path + ": RIFF form type is not WAVE");

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    bool have_fmt = false;
    const unsigned char* data = nullptr;
    size_t data_size = 0;

    size_t pos = 12;
    while (pos + 8 <= size) {
        const unsigned char* chunk_id = p + pos;
        uint32_t chunk_size = read_u32(p + pos + 4);
        pos += 8;
        if (pos + chunk_size > size) {
            char id[5] = {0};
            std::memcpy(id, chunk_id, 4);
            throw FormatError(path + ": truncated '" + id + "' chunk");
        }
        if (std::memcmp(chunk_id, "fmt ", 4) == 0) {
            if (chunk_size < 16) throw FormatError(path + ": 'fmt ' chunk too small");
            format = read_u16(p + pos);
            channels = read_u16(p + pos + 2);
            rate = read_u32(p + pos + 4);
            bits = read_u16(p + pos + 14);
            if (format == kFormatExtensible) {
                if (chunk_size < 40)
                    throw FormatError(path + ": extensible 'fmt ' chunk too small");
                // first two bytes of the subformat GUID carry the actual format tag
                format = read_u16(p + pos + 24);
            }
            have_fmt = true;
        } else if (std::memcmp(chunk_id, "data", 4) == 0) {
            data = p + pos;
            data_size = chunk_size;
        }
        pos += chunk_size + (chunk_size & 1);  // chunks are word-aligned
    }

    if (!have_fmt) throw FormatError(path + ": missing 'fmt ' chunk");
    if (data == nullptr) throw FormatError(path + ": missing 'data' chunk");
    if (channels == 0) throw FormatError(path + ": 'fmt ' declares zero channels");
    if (rate == 0) throw FormatError(path + ": 'fmt ' declares zero sample rate");

    int bytes_per_sample;
    if (format == kFormatPcm) {
        if (bits != 16 && bits != 24 && bits != 32)
            throw UnsupportedFormatError(path + ": unsupported PCM bit depth " +
                                         std::to_string(bits) + " (need 16/24/32)");
        bytes_per_sample = bits / 8;
    } else if (format == kFormatFloat) {
        if (bits != 32 && bits != 64)
            throw UnsupportedFormatError(path + ": unsupported float bit depth " +
                                         std::to_string(bits));
        bytes_per_sample = bits / 8;
    } else {
        throw UnsupportedFormatError(path + ": unsupported encoding tag " +
                                     std::to_string(format) + " (need PCM=1 or float=3)");
    }

    size_t frame_bytes = static_cast<size_t>(bytes_per_sample) * channels;
    size_t n_frames = data_size / frame_bytes;

    AudioBuffer buf;
    buf.sample_rate = static_cast<int>(rate);
    buf.source_path = path;
    buf.samples.resize(n_frames);

    double int_scale = 1.0 / std::ldexp(1.0, bits - 1);  // 1/2^(bits-1)
    for (size_t f = 0; f < n_frames; ++f) {
        double acc = 0.0;
        const unsigned char* fp = data + f * frame_bytes;
        for (int c = 0; c < channels; ++c) {
            const unsigned char* sp = fp + c * bytes_per_sample;
            double v;
            if (format == kFormatPcm) {
                int32_t s = 0;
                if (bits == 16) {
                    s = static_cast<int16_t>(sp[0] | (sp[1] << 8));
                } else if (bits == 24) {
                    s = static_cast<int32_t>(sp[0] | (sp[1] << 8) | (sp[2] << 16));
                    if (s & 0x800000) s |= 0xff000000;
                } else {
                    s = static_cast<int32_t>(read_u32(sp));
                }
                v = s * int_scale;
            } else if (bits == 32) {
                float fv;
                std::memcpy(&fv, sp, 4);
                v = fv;
            } else {
                double dv;
                std::memcpy(&dv, sp, 8);
                v = dv;
            }
            acc += v;
        }
        buf.samples[f] = std::clamp(acc / channels, -1.0, 1.0);
    }
    return buf;
}

void write_wav(const std::string& path, const AudioBuffer& buf, SampleFormat fmt) {
    if (buf.sample_rate <= 0) throw ContractError("write_wav: sample_rate must be positive");

    uint16_t tag, bits;
    switch (fmt) {
        case SampleFormat::pcm16: tag = kFormatPcm; bits = 16; break;
        case SampleFormat::pcm24: tag = kFormatPcm; bits = 24; break;
        case SampleFormat::pcm32: tag = kFormatPcm; bits = 32; break;
        case SampleFormat::float32: tag = kFormatFloat; bits = 32; break;
        case SampleFormat::float64: tag = kFormatFloat; bits = 64; break;
        default: throw ContractError("write_wav: unknown sample format");
    }
    uint32_t n = static_cast<uint32_t>(buf.samples.size());
    uint32_t data_size = n * bits / 8;

    std::string out;
    out.reserve(44 + data_size);
    out += "RIFF";
    put_u32(out, 36 + data_size);
    out += "WAVEfmt ";
    put_u32(out, 16);
    put_u16(out, tag);
    put_u16(out, 1);  // mono
    put_u32(out, static_cast<uint32_t>(buf.sample_rate));
    put_u32(out, static_cast<uint32_t>(buf.sample_rate) * bits / 8);
    put_u16(out, static_cast<uint16_t>(bits / 8));
    put_u16(out, bits);
    out += "data";
    put_u32(out, data_size);

    double full_scale = std::ldexp(1.0, bits - 1);
    for (double v : buf.samples) {
        if (tag == kFormatPcm) {
            double scaled = std::clamp(v, -1.0, 1.0) * full_scale;
            int64_t max_val = static_cast<int64_t>(full_scale) - 1;
            int64_t s = std::clamp(static_cast<int64_t>(std::llround(scaled)),
                                   -static_cast<int64_t>(full_scale), max_val);
            for (int b = 0; b < bits / 8; ++b)
                out += static_cast<char>((s >> (8 * b)) & 0xff);
        } else if (bits == 32) {
            float fv = static_cast<float>(v);
            char r[4];
            std::memcpy(r, &fv, 4);
            out.append(r, 4);
        } else {
            char r[8];
            std::memcpy(r, &v, 8);
            out.append(r, 8);
        }
    }
    write_file_atomic(path, out);
}

AudioBuffer resample(const AudioBuffer& buf, int target_rate) {
    if (target_rate <= 0) throw ContractError("resample: target_rate must be positive");
    if (buf.sample_rate <= 0) throw ContractError("resample: source rate must be positive");
    if (target_rate == buf.sample_rate) return buf;

    const int64_t src = buf.sample_rate, dst = target_rate;
    const int64_t g = std::gcd(src, dst);
    const int64_t up = dst / g;    // number of distinct filter phases
    const int64_t down = src / g;  // input advance per up output samples

    const double ratio = static_cast<double>(dst) / static_cast<double>(src);
    const double scale = std::min(1.0, ratio);  // anti-alias cutoff
    const double half_width = (kTapsPerPhase / 2) / scale;
    const int taps = static_cast<int>(std::floor(2.0 * half_width)) + 1;
    const double i0_beta = bessel_i0(kKaiserBeta);

    // per-phase tap tables; phase p covers fractional offset p/up
    std::vector<std::vector<double>> phase_taps(static_cast<size_t>(up));
    std::vector<int64_t> phase_k0(static_cast<size_t>(up));
    for (int64_t p = 0; p < up; ++p) {
        double frac = static_cast<double>(p) / static_cast<double>(up);
        int64_t k0 = static_cast<int64_t>(std::ceil(frac - half_width));
        auto& t = phase_taps[static_cast<size_t>(p)];
        t.resize(static_cast<size_t>(taps));
        for (int j = 0; j < taps; ++j) {
            double x = (static_cast<double>(k0 + j) - frac) * scale;
            double u = x / (kTapsPerPhase / 2);
            double w = 0.0;
            if (std::abs(u) <= 1.0)
                w = bessel_i0(kKaiserBeta * std::sqrt(1.0 - u * u)) / i0_beta;
            t[static_cast<size_t>(j)] = scale * sinc(x) * w;
        }
        phase_k0[static_cast<size_t>(p)] = k0;
    }

    const int64_t in_len = static_cast<int64_t>(buf.samples.size());
    const int64_t out_len = std::llround(static_cast<double>(in_len) * ratio);

    AudioBuffer out;
    out.sample_rate = target_rate;
    out.source_path = buf.source_path;
    out.samples.resize(static_cast<size_t>(out_len));

    for (int64_t n = 0; n < out_len; ++n) {
        int64_t num = n * down;
        int64_t base = num / up;
        int64_t p = num % up;
        const auto& t = phase_taps[static_cast<size_t>(p)];
        int64_t k0 = phase_k0[static_cast<size_t>(p)];
        double acc = 0.0;
        int64_t lo = base + k0;
        for (int j = 0; j < taps; ++j) {
            int64_t idx = lo + j;
            if (idx >= 0 && idx < in_len)
                acc += buf.samples[static_cast<size_t>(idx)] * t[static_cast<size_t>(j)];
        }
        out.samples[static_cast<size_t>(n)] = acc;
    }
    return out;
}

}  // namespace dfv
