#include "dfv/features.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "dfv/errors.hpp"
#include "dfv/util.hpp"

namespace dfv {

namespace fs = std::filesystem;

std::string to_string(Family f) {
    switch (f) {
        case Family::mf: return "MF";
        case Family::ltfd: return "LTFD";
        case Family::ltf0: return "LTF0";
        case Family::mfcc: return "MFCC";
        case Family::fbank: return "FBANK";
    }
    throw ContractError("to_string: bad Family");
}

std::string to_string(Condition c) {
    switch (c) {
        case Condition::real: return "real";
        case Condition::fake: return "fake";
        case Condition::s1: return "s1";
        case Condition::s2: return "s2";
    }
    throw ContractError("to_string: bad Condition");
}

Family family_from_string(const std::string& s) {
    std::string u = to_lower(s);
    if (u == "mf") return Family::mf;
    if (u == "ltfd") return Family::ltfd;
    if (u == "ltf0") return Family::ltf0;
    if (u == "mfcc") return Family::mfcc;
    if (u == "fbank") return Family::fbank;
    throw ConfigError("unknown feature family \"" + s + "\"");
}

Condition condition_from_string(const std::string& s) {
    std::string u = to_lower(s);
    if (u == "real") return Condition::real;
    if (u == "fake") return Condition::fake;
    if (u == "s1") return Condition::s1;
    if (u == "s2") return Condition::s2;
    throw ConfigError("unknown condition \"" + s + "\" (want real|fake|s1|s2)");
}

void TokenStore::add_all(std::vector<FeatureToken> tokens) {
    for (auto& t : tokens) tokens_.push_back(std::move(t));
}

void TokenStore::canonicalize() {
    std::stable_sort(tokens_.begin(), tokens_.end(),
                     [](const FeatureToken& a, const FeatureToken& b) {
                         if (a.source_file != b.source_file) return a.source_file < b.source_file;
                         if (a.family != b.family) return a.family < b.family;
                         if (a.time_s != b.time_s) return a.time_s < b.time_s;
                         return a.phoneme < b.phoneme;
                     });
}

std::vector<const FeatureToken*> TokenStore::select(const TokenFilter& filter) const {
    std::vector<const FeatureToken*> out;
    for (const FeatureToken& t : tokens_) {
        if (filter.family && t.family != *filter.family) continue;
        if (filter.speaker && t.speaker != *filter.speaker) continue;
        if (filter.phoneme && t.phoneme != *filter.phoneme) continue;
        if (!filter.conditions.empty() && !filter.conditions.count(t.condition)) continue;
        out.push_back(&t);
    }
    return out;
}

std::set<std::string> TokenStore::speakers() const {
    std::set<std::string> out;
    for (const FeatureToken& t : tokens_) out.insert(t.speaker);
    return out;
}

std::set<std::string> TokenStore::phonemes(Family family) const {
    std::set<std::string> out;
    for (const FeatureToken& t : tokens_)
        if (t.family == family && !t.phoneme.empty()) out.insert(t.phoneme);
    return out;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::string text = read_file(path);
    fs::path base = fs::path(path).parent_path();
    std::vector<ManifestEntry> out;
    std::istringstream is(text);
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        std::vector<std::string> cols = split_csv_line(line);
        if (!saw_header) {
            if (cols.size() < 4 || to_lower(trim(cols[0])) != "file_path")
                throw ParseError(
                    "manifest header must be file_path,textgrid_path,speaker,condition", line_no);
            saw_header = true;
            continue;
        }
        if (cols.size() != 4)
            throw ParseError("manifest row needs 4 columns, got " + std::to_string(cols.size()),
                             line_no);
        ManifestEntry e;
        auto resolve = [&](const std::string& p) {
            fs::path fp(trim(p));
            return fp.is_absolute() ? fp.string() : (base / fp).string();
        };
        e.file_path = resolve(cols[0]);
        e.textgrid_path = resolve(cols[1]);
        e.speaker = trim(cols[2]);
        if (e.speaker.empty()) throw ParseError("empty speaker id", line_no);
        try {
            e.condition = condition_from_string(trim(cols[3]));
        } catch (const ConfigError& ex) {
            throw ParseError(ex.what(), line_no);
        }
        out.push_back(std::move(e));
    }
    if (!saw_header) throw ParseError("manifest has no header row", line_no);
    return out;
}

std::vector<SampledPoint> sample_track(const std::vector<double>& frame_times,
                                       const std::vector<std::vector<double>>& frame_values,
                                       const PhoneInterval& interval, int n_points, double hop_s) {
    if (n_points < 1) throw ContractError("sample_track: n_points must be >= 1");
    if (frame_times.size() != frame_values.size())
        throw ContractError("sample_track: times/values size mismatch");

    double dur = interval.end_s - interval.start_s;
    std::vector<SampledPoint> out(static_cast<size_t>(n_points));
    for (int i = 0; i < n_points; ++i) {
        SampledPoint& p = out[static_cast<size_t>(i)];
        p.time_s = interval.start_s + (i + 0.5) * dur / n_points;
        if (frame_times.empty()) continue;
        auto it = std::lower_bound(frame_times.begin(), frame_times.end(), p.time_s);
        size_t idx;
        if (it == frame_times.begin()) {
            idx = 0;
        } else if (it == frame_times.end()) {
            idx = frame_times.size() - 1;
        } else {
            size_t hi = static_cast<size_t>(it - frame_times.begin());
            idx = (p.time_s - frame_times[hi - 1] <= frame_times[hi] - p.time_s) ? hi - 1 : hi;
        }
        if (std::abs(frame_times[idx] - p.time_s) > hop_s) continue;
        if (frame_values[idx].empty()) continue;
        p.present = true;
        p.values = frame_values[idx];
    }
    return out;
}

namespace {

struct FileAnalyses {
    std::vector<double> formant_times;
    std::vector<std::vector<double>> formant_f123;  // empty vector = fewer than 3 formants
    std::vector<double> pitch_times;
    std::vector<std::vector<double>> pitch_f0;  // empty vector = unvoiced
    std::vector<double> cepstral_times;
    std::vector<std::vector<double>> fbank_frames;  // n_mels log energies
    bool resampled_for_cepstra = false;
};

const std::set<std::string>& effective_vowels(const ExtractConfig& config,
                                              std::set<std::string>& storage) {
    if (!config.vowel_set.empty()) return config.vowel_set;
    storage = default_vowel_set();
    return storage;
}

void run_formants(const AudioBuffer& audio, const ExtractConfig& config, FileAnalyses& fa) {
    std::vector<FormantFrame> track = formant_track(audio, config.formant);
    fa.formant_times.reserve(track.size());
    fa.formant_f123.reserve(track.size());
    for (const FormantFrame& fr : track) {
        fa.formant_times.push_back(fr.time_s);
        if (fr.formants.size() >= 3)
            fa.formant_f123.push_back({fr.formants[0].frequency_hz, fr.formants[1].frequency_hz,
                                       fr.formants[2].frequency_hz});
        else
            fa.formant_f123.emplace_back();
    }
}

void run_pitch(const AudioBuffer& audio, const ExtractConfig& config, FileAnalyses& fa) {
    std::vector<PitchFrame> track = estimate_f0(audio, config.pitch);
    fa.pitch_times.reserve(track.size());
    fa.pitch_f0.reserve(track.size());
    for (const PitchFrame& fr : track) {
        fa.pitch_times.push_back(fr.time_s);
        if (fr.voiced)
            fa.pitch_f0.push_back({fr.f0_hz});
        else
            fa.pitch_f0.emplace_back();
    }
}

void run_cepstra(const AudioBuffer& audio, const SegmentInventory& inv,
                 const ExtractConfig& config, FileAnalyses& fa, ExtractStats* stats) {
    const AudioBuffer* src = &audio;
    AudioBuffer resampled;
    if (audio.sample_rate < 2 * static_cast<int>(config.mel_f_hi)) {
        resampled = resample(audio, 2 * static_cast<int>(config.mel_f_hi));
        src = &resampled;
        fa.resampled_for_cepstra = true;
        if (stats) stats->resampled_for_cepstra = true;
    }

    std::vector<Frame> frames = frame_signal(src->samples, src->sample_rate, config.cepstral_frame);
    if (frames.empty()) return;

    size_t nfft = next_pow2(frames[0].samples.size());
    std::vector<std::vector<double>> fb = mel_filterbank(config.n_mels, nfft, src->sample_rate,
                                                         config.mel_f_lo, config.mel_f_hi,
                                                         config.mel_scale);

    for (const Frame& fr : frames) {
        if (!config.include_nonspeech_frames && !inv.words.empty()) {
            bool in_speech = false;
            for (const PhoneInterval& w : inv.words) {
                if (w.is_silence()) continue;
                if (fr.center_s >= w.start_s && fr.center_s < w.end_s) {
                    in_speech = true;
                    break;
                }
            }
            if (!in_speech) {
                if (stats) ++stats->nonspeech_frames_skipped;
                continue;
            }
        }
        std::vector<double> spec = power_spectrum(fr.samples, nfft);
        std::vector<double> energies(static_cast<size_t>(config.n_mels));
        for (int b = 0; b < config.n_mels; ++b) {
            double acc = 0.0;
            const std::vector<double>& row = fb[static_cast<size_t>(b)];
            for (size_t k = 0; k < spec.size(); ++k) acc += row[k] * spec[k];
            energies[static_cast<size_t>(b)] = std::log(std::max(acc, 1e-10));
        }
        fa.cepstral_times.push_back(fr.center_s);
        fa.fbank_frames.push_back(std::move(energies));
        if (stats) ++stats->cepstral_frames;
    }
}

FeatureToken make_token(Family family, const ManifestEntry& entry, double time_s,
                        std::vector<double> values, std::string phoneme = {}) {
    FeatureToken t;
    t.family = family;
    t.speaker = entry.speaker;
    t.condition = entry.condition;
    t.time_s = time_s;
    t.values = std::move(values);
    t.phoneme = std::move(phoneme);
    t.source_file = entry.file_path;
    return t;
}

std::vector<FeatureToken> mf_from_analyses(const FileAnalyses& fa, const SegmentInventory& inv,
                                           const ManifestEntry& entry,
                                           const ExtractConfig& config, ExtractStats* stats) {
    std::set<std::string> storage;
    const std::set<std::string>& vowels = effective_vowels(config, storage);
    const std::map<std::string, std::string>& ipa =
        config.ipa_map.empty() ? default_arpabet_ipa() : config.ipa_map;

    std::vector<FeatureToken> out;
    int mid = config.n_sample_points / 2;  // center of an odd-sized grid
    for (const PhoneInterval& seg : vocalic_segments(inv, vowels)) {
        if (stats) ++stats->vocalic_segments;
        auto points = sample_track(fa.formant_times, fa.formant_f123, seg,
                                   config.n_sample_points, config.formant.hop_s);
        const SampledPoint& p = points[static_cast<size_t>(mid)];
        if (!p.present) {
            if (stats) ++stats->mf_dropped;
            continue;
        }
        out.push_back(make_token(Family::mf, entry, p.time_s, p.values,
                                 to_ipa(strip_stress(seg.label), ipa)));
        if (stats) ++stats->mf_tokens;
    }
    return out;
}

std::vector<FeatureToken> ltfd_from_analyses(const FileAnalyses& fa, const SegmentInventory& inv,
                                             const ManifestEntry& entry,
                                             const ExtractConfig& config, ExtractStats* stats) {
    std::set<std::string> storage;
    const std::set<std::string>& vowels = effective_vowels(config, storage);
    std::vector<FeatureToken> out;
    for (const PhoneInterval& seg : vocalic_segments(inv, vowels)) {
        auto points = sample_track(fa.formant_times, fa.formant_f123, seg,
                                   config.n_sample_points, config.formant.hop_s);
        for (const SampledPoint& p : points) {
            if (!p.present) {
                if (stats) ++stats->ltfd_points_dropped;
                continue;
            }
            out.push_back(make_token(Family::ltfd, entry, p.time_s, p.values));
            if (stats) ++stats->ltfd_tokens;
        }
    }
    return out;
}

std::vector<FeatureToken> ltf0_from_analyses(const FileAnalyses& fa, const SegmentInventory& inv,
                                             const ManifestEntry& entry,
                                             const ExtractConfig& config, ExtractStats* stats) {
    std::set<std::string> storage;
    const std::set<std::string>& vowels = effective_vowels(config, storage);
    std::vector<FeatureToken> out;
    for (const PhoneInterval& seg : vocalic_segments(inv, vowels)) {
        auto points = sample_track(fa.pitch_times, fa.pitch_f0, seg, config.n_sample_points,
                                   config.pitch.frame.hop_s);
        for (const SampledPoint& p : points) {
            if (!p.present) {
                if (stats) ++stats->ltf0_points_unvoiced;
                continue;
            }
            out.push_back(make_token(Family::ltf0, entry, p.time_s, p.values));
            if (stats) ++stats->ltf0_tokens;
        }
    }
    return out;
}

std::vector<FeatureToken> fbank_from_analyses(const FileAnalyses& fa, const ManifestEntry& entry) {
    std::vector<FeatureToken> out;
    out.reserve(fa.fbank_frames.size());
    for (size_t i = 0; i < fa.fbank_frames.size(); ++i)
        out.push_back(
            make_token(Family::fbank, entry, fa.cepstral_times[i], fa.fbank_frames[i]));
    return out;
}

std::vector<FeatureToken> mfcc_from_analyses(const FileAnalyses& fa, const ManifestEntry& entry,
                                             const ExtractConfig& config) {
    std::vector<std::vector<double>> statics;
    statics.reserve(fa.fbank_frames.size());
    for (const auto& fbank : fa.fbank_frames)
        statics.push_back(dct_ii(fbank, static_cast<size_t>(config.n_mfcc)));

    std::vector<std::vector<double>> deltas = delta_sequence(statics, config.delta_width);
    std::vector<std::vector<double>> ddeltas = delta_sequence(deltas, config.delta_width);

    std::vector<FeatureToken> out;
    out.reserve(statics.size());
    for (size_t i = 0; i < statics.size(); ++i) {
        std::vector<double> v;
        v.reserve(3 * static_cast<size_t>(config.n_mfcc));
        v.insert(v.end(), statics[i].begin(), statics[i].end());
        v.insert(v.end(), deltas[i].begin(), deltas[i].end());
        v.insert(v.end(), ddeltas[i].begin(), ddeltas[i].end());
        out.push_back(make_token(Family::mfcc, entry, fa.cepstral_times[i], std::move(v)));
    }
    return out;
}

void check_cepstral_rate(const AudioBuffer& audio, const ExtractConfig& config) {
    if (audio.sample_rate < 2 * static_cast<int>(config.mel_f_hi))
        throw ConfigError("sample rate " + std::to_string(audio.sample_rate) +
                          " Hz cannot cover the 0-" + std::to_string((int)config.mel_f_hi) +
                          " Hz band; resample to >= " +
                          std::to_string(2 * static_cast<int>(config.mel_f_hi)) + " Hz first");
}

}  // namespace

void ExtractStats::accumulate(const ExtractStats& other) {
    vocalic_segments += other.vocalic_segments;
    mf_tokens += other.mf_tokens;
    mf_dropped += other.mf_dropped;
    ltfd_tokens += other.ltfd_tokens;
    ltfd_points_dropped += other.ltfd_points_dropped;
    ltf0_tokens += other.ltf0_tokens;
    ltf0_points_unvoiced += other.ltf0_points_unvoiced;
    cepstral_frames += other.cepstral_frames;
    nonspeech_frames_skipped += other.nonspeech_frames_skipped;
    resampled_for_cepstra = resampled_for_cepstra || other.resampled_for_cepstra;
}

std::vector<FeatureToken> extract_mf(const AudioBuffer& audio, const SegmentInventory& inv,
                                     const ManifestEntry& entry, const ExtractConfig& config,
                                     ExtractStats* stats) {
    FileAnalyses fa;
    run_formants(audio, config, fa);
    return mf_from_analyses(fa, inv, entry, config, stats);
}

std::vector<FeatureToken> extract_ltfd(const AudioBuffer& audio, const SegmentInventory& inv,
                                       const ManifestEntry& entry, const ExtractConfig& config,
                                       ExtractStats* stats) {
    FileAnalyses fa;
    run_formants(audio, config, fa);
    return ltfd_from_analyses(fa, inv, entry, config, stats);
}

std::vector<FeatureToken> extract_ltf0(const AudioBuffer& audio, const SegmentInventory& inv,
                                       const ManifestEntry& entry, const ExtractConfig& config,
                                       ExtractStats* stats) {
    FileAnalyses fa;
    run_pitch(audio, config, fa);
    return ltf0_from_analyses(fa, inv, entry, config, stats);
}

std::vector<FeatureToken> extract_mfcc(const AudioBuffer& audio, const SegmentInventory& inv,
                                       const ManifestEntry& entry, const ExtractConfig& config,
                                       ExtractStats* stats) {
    check_cepstral_rate(audio, config);
    FileAnalyses fa;
    run_cepstra(audio, inv, config, fa, stats);
    return mfcc_from_analyses(fa, entry, config);
}

std::vector<FeatureToken> extract_fbank(const AudioBuffer& audio, const SegmentInventory& inv,
                                        const ManifestEntry& entry, const ExtractConfig& config,
                                        ExtractStats* stats) {
    check_cepstral_rate(audio, config);
    FileAnalyses fa;
    run_cepstra(audio, inv, config, fa, stats);
    return fbank_from_analyses(fa, entry);
}

std::vector<FeatureToken> extract_file(const AudioBuffer& audio, const SegmentInventory& inv,
                                       const ManifestEntry& entry, const ExtractConfig& config,
                                       ExtractStats* stats) {
    bool want_formants = config.families.count(Family::mf) || config.families.count(Family::ltfd);
    bool want_pitch = config.families.count(Family::ltf0);
    bool want_cepstra =
        config.families.count(Family::mfcc) || config.families.count(Family::fbank);

    FileAnalyses fa;
    if (want_formants) run_formants(audio, config, fa);
    if (want_pitch) run_pitch(audio, config, fa);
    if (want_cepstra) run_cepstra(audio, inv, config, fa, stats);

    std::vector<FeatureToken> out;
    auto absorb = [&](std::vector<FeatureToken> v) {
        for (auto& t : v) out.push_back(std::move(t));
    };
    if (config.families.count(Family::mf)) absorb(mf_from_analyses(fa, inv, entry, config, stats));
    if (config.families.count(Family::ltfd))
        absorb(ltfd_from_analyses(fa, inv, entry, config, stats));
    if (config.families.count(Family::ltf0))
        absorb(ltf0_from_analyses(fa, inv, entry, config, stats));
    if (config.families.count(Family::mfcc)) absorb(mfcc_from_analyses(fa, entry, config));
    if (config.families.count(Family::fbank)) absorb(fbank_from_analyses(fa, entry));
    return out;
}

std::vector<std::vector<double>> delta_sequence(const std::vector<std::vector<double>>& frames,
                                                int width) {
    if (width < 1) throw ContractError("delta_sequence: width must be >= 1");
    size_t n = frames.size();
    std::vector<std::vector<double>> out(n);
    if (n == 0) return out;
    size_t d = frames[0].size();

    double denom = 0.0;
    for (int k = 1; k <= width; ++k) denom += 2.0 * k * k;

    auto at = [&](long i) -> const std::vector<double>& {
        if (i < 0) return frames[0];
        if (i >= static_cast<long>(n)) return frames[n - 1];
        return frames[static_cast<size_t>(i)];
    };

    for (size_t t = 0; t < n; ++t) {
        out[t].assign(d, 0.0);
        for (int k = 1; k <= width; ++k) {
            const std::vector<double>& fwd = at(static_cast<long>(t) + k);
            const std::vector<double>& bwd = at(static_cast<long>(t) - k);
            for (size_t j = 0; j < d; ++j) out[t][j] += k * (fwd[j] - bwd[j]);
        }
        for (size_t j = 0; j < d; ++j) out[t][j] /= denom;
    }
    return out;
}

std::string tokens_to_csv(const std::vector<FeatureToken>& tokens, uint64_t seed,
                          const std::string& config_hash) {
    std::ostringstream os;
    os << "# dfvoice " << kToolkitVersion << " seed=" << seed << " config=" << config_hash << "\n";
    os << "speaker,family,phoneme,condition,time_s";
    for (size_t i = 1; i <= kMaxTokenDim; ++i) os << ",v" << i;
    os << "\n";
    for (const FeatureToken& t : tokens) {
        os << csv_field(t.speaker) << ',' << to_string(t.family) << ',' << csv_field(t.phoneme)
           << ',' << to_string(t.condition) << ',' << format_double(t.time_s);
        for (size_t i = 0; i < kMaxTokenDim; ++i) {
            os << ',';
            if (i < t.values.size()) os << format_double(t.values[i]);
        }
        os << "\n";
    }
    return os.str();
}

std::vector<FeatureToken> tokens_from_csv(std::string_view text) {
    std::vector<FeatureToken> out;
    std::istringstream is(std::string{text});
    std::string line;
    int line_no = 0;
    bool saw_header = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cols = split_csv_line(line);
        if (!saw_header) {
            if (cols.size() < 5 || cols[0] != "speaker")
                throw ParseError("token CSV header missing", line_no);
            saw_header = true;
            continue;
        }
        if (cols.size() != 5 + kMaxTokenDim)
            throw ParseError("token row needs " + std::to_string(5 + kMaxTokenDim) +
                                 " columns, got " + std::to_string(cols.size()),
                             line_no);
        FeatureToken t;
        t.speaker = cols[0];
        t.family = family_from_string(cols[1]);
        t.phoneme = cols[2];
        t.condition = condition_from_string(cols[3]);
        try {
            t.time_s = std::stod(cols[4]);
            for (size_t i = 0; i < kMaxTokenDim; ++i) {
                const std::string& cell = cols[5 + i];
                if (cell.empty()) break;
                t.values.push_back(std::stod(cell));
            }
        } catch (const std::exception&) {
            throw ParseError("bad numeric cell", line_no);
        }
        if (!std::all_of(t.values.begin(), t.values.end(),
                         [](double v) { return std::isfinite(v); }))
            throw ParseError("non-finite token value", line_no);
        out.push_back(std::move(t));
    }
    if (!saw_header) throw ParseError("token CSV header missing", line_no);
    return out;
}

void save_tokens(const TokenStore& store, const std::string& path, uint64_t seed,
                 const std::string& config_hash) {
    write_file_atomic(path, tokens_to_csv(store.tokens(), seed, config_hash));
}

TokenStore load_tokens(const std::string& path) {
    TokenStore store;
    store.add_all(tokens_from_csv(read_file(path)));
    return store;
}

}  // namespace dfv
