#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dfv/audio.hpp"
#include "dfv/dsp.hpp"
#include "dfv/lpc.hpp"
#include "dfv/pitch.hpp"
#include "dfv/textgrid.hpp"

namespace dfv {

enum class Family { mf, ltfd, ltf0, mfcc, fbank };
enum class Condition { real, fake, s1, s2 };

std::string to_string(Family f);
std::string to_string(Condition c);
Family family_from_string(const std::string& s);
Condition condition_from_string(const std::string& s);

constexpr size_t kMaxTokenDim = 39;

struct FeatureToken {
    std::vector<double> values;
    Family family = Family::mf;
    std::string speaker;
    std::string phoneme;  // IPA; set iff family == mf
    Condition condition = Condition::real;
    double time_s = 0.0;
    std::string source_file;  // provenance, not serialized in the token dump
};

struct TokenFilter {
    std::optional<Family> family;
    std::optional<std::string> speaker;
    std::optional<std::string> phoneme;
    std::set<Condition> conditions;  // empty = any
};

class TokenStore {
public:
    void add(FeatureToken token) { tokens_.push_back(std::move(token)); }
    void add_all(std::vector<FeatureToken> tokens);

    // Deterministic ordering: (source_file, family, time, phoneme).
    void canonicalize();

    const std::vector<FeatureToken>& tokens() const { return tokens_; }
    size_t size() const { return tokens_.size(); }

    std::vector<const FeatureToken*> select(const TokenFilter& filter) const;
    std::set<std::string> speakers() const;
    std::set<std::string> phonemes(Family family) const;

private:
    std::vector<FeatureToken> tokens_;
};

struct ManifestEntry {
    std::string file_path;
    std::string textgrid_path;
    std::string speaker;
    Condition condition = Condition::real;
};

// CSV with header file_path,textgrid_path,speaker,condition. Relative paths
// resolve against the manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::string& path);

struct SampledPoint {
    double time_s = 0.0;
    bool present = false;
    std::vector<double> values;
};

// t_i = start + (i + 0.5) * dur / n_points; each point takes the nearest
// frame's value column, missing when no frame lies within one hop or the
// frame itself has no value.
std::vector<SampledPoint> sample_track(const std::vector<double>& frame_times,
                                       const std::vector<std::vector<double>>& frame_values,
                                       const PhoneInterval& interval, int n_points, double hop_s);

struct ExtractConfig {
    std::set<Family> families = {Family::mf, Family::ltfd, Family::ltf0, Family::mfcc,
                                 Family::fbank};
    FormantConfig formant;
    PitchConfig pitch;
    FrameSpec cepstral_frame{0.020, 0.010, WindowShape::hann};
    int n_mels = 26;
    int n_mfcc = 13;
    double mel_f_lo = 0.0;
    double mel_f_hi = 8000.0;
    MelScale mel_scale = MelScale::slaney;
    int delta_width = 2;
    bool include_nonspeech_frames = false;  // MFCC/FBank frames outside word intervals
    int n_sample_points = 15;
    std::set<std::string> vowel_set;                 // empty -> default_vowel_set()
    std::map<std::string, std::string> ipa_map;     // empty -> default_arpabet_ipa()
};

struct ExtractStats {
    size_t vocalic_segments = 0;
    size_t mf_tokens = 0;
    size_t mf_dropped = 0;
    size_t ltfd_tokens = 0;
    size_t ltfd_points_dropped = 0;
    size_t ltf0_tokens = 0;
    size_t ltf0_points_unvoiced = 0;
    size_t cepstral_frames = 0;
    size_t nonspeech_frames_skipped = 0;
    bool resampled_for_cepstra = false;

    void accumulate(const ExtractStats& other);
};

std::vector<FeatureToken> extract_mf(const AudioBuffer& audio, const SegmentInventory& inv,
                                     const ManifestEntry& entry, const ExtractConfig& config,
                                     ExtractStats* stats = nullptr);
std::vector<FeatureToken> extract_ltfd(const AudioBuffer& audio, const SegmentInventory& inv,
                                       const ManifestEntry& entry, const ExtractConfig& config,
                                       ExtractStats* stats = nullptr);
std::vector<FeatureToken> extract_ltf0(const AudioBuffer& audio, const SegmentInventory& inv,
                                       const ManifestEntry& entry, const ExtractConfig& config,
                                       ExtractStats* stats = nullptr);
std::vector<FeatureToken> extract_mfcc(const AudioBuffer& audio, const SegmentInventory& inv,
                                       const ManifestEntry& entry, const ExtractConfig& config,
                                       ExtractStats* stats = nullptr);
std::vector<FeatureToken> extract_fbank(const AudioBuffer& audio, const SegmentInventory& inv,
                                        const ManifestEntry& entry, const ExtractConfig& config,
                                        ExtractStats* stats = nullptr);

// All enabled families for one manifest entry; formant/pitch/cepstral
// analyses each run once and are shared across families.
std::vector<FeatureToken> extract_file(const AudioBuffer& audio, const SegmentInventory& inv,
                                       const ManifestEntry& entry, const ExtractConfig& config,
                                       ExtractStats* stats = nullptr);

// HTK-style delta regression over +/-width frames with replicate padding at
// the sequence edges.
std::vector<std::vector<double>> delta_sequence(const std::vector<std::vector<double>>& frames,
                                                int width);

// Token dump CSV: "# dfvoice <version> seed=<seed> config=<hash>" metadata
// line, then speaker,family,phoneme,condition,time_s,v1..v39.
std::string tokens_to_csv(const std::vector<FeatureToken>& tokens, uint64_t seed,
                          const std::string& config_hash);
std::vector<FeatureToken> tokens_from_csv(std::string_view text);
void save_tokens(const TokenStore& store, const std::string& path, uint64_t seed,
                 const std::string& config_hash);
TokenStore load_tokens(const std::string& path);

}  // namespace dfv
