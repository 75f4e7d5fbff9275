#include "dfv/synth.hpp"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "dfv/audio.hpp"
#include "dfv/errors.hpp"
#include "dfv/util.hpp"

namespace dfv {

namespace fs = std::filesystem;

std::vector<double> synth_vowel(int sample_rate, double duration_s, double f0_hz, double f1,
                                double f2, double f3, double b1, double b2, double b3) {
    if (sample_rate <= 0 || duration_s <= 0 || f0_hz <= 0)
        throw ContractError("synth_vowel: bad parameters");
    size_t n = static_cast<size_t>(std::lround(duration_s * sample_rate));
    std::vector<double> x(n, 0.0);

    // glottal pulse train with fractional period accumulation
    double period = sample_rate / f0_hz;
    for (double pos = 0.0; pos < static_cast<double>(n); pos += period) {
        size_t i = static_cast<size_t>(std::lround(pos));
        if (i < n) x[i] += 1.0;
    }

    // -12 dB/oct source tilt: two one-pole lowpasses
    for (int pass = 0; pass < 2; ++pass) {
        double prev = 0.0;
        for (size_t i = 0; i < n; ++i) {
            x[i] += 0.95 * prev;
            prev = x[i];
        }
    }
    // +6 dB/oct lip radiation (first difference); net -6 dB/oct matches the
    // slope the formant tracker's pre-emphasis is built to flatten
    double prev_raw = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double cur = x[i];
        x[i] = cur - prev_raw;
        prev_raw = cur;
    }

    // resonator cascade: y[i] = x[i] + 2 r cos(th) y[i-1] - r^2 y[i-2]
    const double fb[3][2] = {{f1, b1}, {f2, b2}, {f3, b3}};
    for (const auto& [f, b] : fb) {
        double r = std::exp(-std::numbers::pi * b / sample_rate);
        double c1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * f / sample_rate);
        double c2 = -r * r;
        double y1 = 0.0, y2 = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double y = x[i] + c1 * y1 + c2 * y2;
            y2 = y1;
            y1 = y;
            x[i] = y;
        }
    }

    // 5 ms raised-cosine fades, then peak-normalize to 0.25
    size_t fade = std::min(n / 2, static_cast<size_t>(std::lround(0.005 * sample_rate)));
    for (size_t i = 0; i < fade; ++i) {
        double g = 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(i) /
                                        static_cast<double>(fade));
        x[i] *= g;
        x[n - 1 - i] *= g;
    }
    double peak = 0.0;
    for (double v : x) peak = std::max(peak, std::abs(v));
    if (peak > 0.0)
        for (double& v : x) v *= 0.25 / peak;
    return x;
}

namespace {

struct TokenTruth {
    std::string label;
    double f1, f2, f3, f0;
    double start_s, end_s;
};

}  // namespace

CorpusOutput synth_corpus(const CorpusSpec& spec, const std::string& out_dir) {
    if (spec.sample_rate <= 0 || spec.vowel_s <= 0 || spec.gap_s <= 0)
        throw ContractError("synth_corpus: bad timing spec");
    for (const GroupSpec& g : spec.groups)
        if (g.n_files < 0 || g.tokens_per_file < 0)
            throw ContractError("synth_corpus: negative counts");

    fs::create_directories(fs::path(out_dir) / "audio");
    fs::create_directories(fs::path(out_dir) / "grids");

    std::ostringstream manifest;
    manifest << "file_path,textgrid_path,speaker,condition\n";

    nlohmann::json truth;
    truth["format"] = "dfvoice-corpus-truth";
    truth["version"] = 1;
    truth["seed"] = spec.seed;
    truth["sample_rate"] = spec.sample_rate;
    nlohmann::json files_json = nlohmann::json::array();

    CorpusOutput out;
    for (size_t si = 0; si < spec.speakers.size(); ++si) {
        const SpeakerSpec& speaker = spec.speakers[si];
        for (size_t gi = 0; gi < spec.groups.size(); ++gi) {
            const GroupSpec& group = spec.groups[gi];
            for (int fi = 0; fi < group.n_files; ++fi) {
                Rng rng(derive_seed(derive_seed(derive_seed(spec.seed, si), gi),
                                    static_cast<uint64_t>(fi)));

                std::string stem = speaker.id + "_" + to_string(group.condition) + "_" +
                                   std::to_string(fi);
                std::string wav_rel = "audio/" + stem + ".wav";
                std::string grid_rel = "grids/" + stem + ".TextGrid";

                int n_tokens = speaker.vowels.empty() ? 0 : group.tokens_per_file;
                double total_s =
                    spec.gap_s + n_tokens * (spec.vowel_s + spec.gap_s);
                size_t total_n =
                    static_cast<size_t>(std::lround(total_s * spec.sample_rate));
                std::vector<double> samples(total_n, 0.0);

                SegmentInventory inv;
                inv.total_duration_s = total_s;
                std::vector<TokenTruth> tokens;

                double cursor = spec.gap_s;
                if (n_tokens > 0) inv.phones.push_back({"", 0.0, spec.gap_s});
                for (int ti = 0; ti < n_tokens; ++ti) {
                    const VowelClassSpec& vc =
                        speaker.vowels[static_cast<size_t>(ti) % speaker.vowels.size()];
                    bool shifted = group.shifted_classes.empty() ||
                                   group.shifted_classes.count(vc.label) > 0;
                    double shift = shifted ? group.formant_shift_sds : 0.0;

                    TokenTruth tt;
                    tt.label = vc.label;
                    tt.f1 = vc.f1 + shift * vc.scatter_f1 + rng.normal() * vc.scatter_f1;
                    tt.f2 = vc.f2 + shift * vc.scatter_f2 + rng.normal() * vc.scatter_f2;
                    tt.f3 = vc.f3 + shift * vc.scatter_f3 + rng.normal() * vc.scatter_f3;
                    tt.f0 = speaker.f0_hz + group.f0_shift_hz +
                            rng.normal() * speaker.f0_scatter_hz;
                    tt.f0 = std::max(tt.f0, 60.0);
                    tt.start_s = cursor;
                    tt.end_s = cursor + spec.vowel_s;

                    std::vector<double> v =
                        synth_vowel(spec.sample_rate, spec.vowel_s, tt.f0, tt.f1, tt.f2, tt.f3,
                                    vc.b1, vc.b2, vc.b3);
                    size_t offset =
                        static_cast<size_t>(std::lround(cursor * spec.sample_rate));
                    for (size_t i = 0; i < v.size() && offset + i < total_n; ++i)
                        samples[offset + i] = v[i];

                    inv.phones.push_back({vc.label + "1", tt.start_s, tt.end_s});
                    inv.words.push_back({to_lower(vc.label), tt.start_s, tt.end_s});
                    cursor = tt.end_s;
                    inv.phones.push_back({"", cursor, cursor + spec.gap_s});
                    cursor += spec.gap_s;

                    std::string key = speaker.id + "/" + to_string(group.condition) + "/" +
                                      vc.label;
                    ++out.vowel_counts[key];
                    tokens.push_back(tt);
                }
                if (n_tokens == 0) inv.phones.push_back({"", 0.0, total_s});

                AudioBuffer buf;
                buf.samples = std::move(samples);
                buf.sample_rate = spec.sample_rate;
                write_wav((fs::path(out_dir) / wav_rel).string(), buf, SampleFormat::pcm16);
                write_file_atomic((fs::path(out_dir) / grid_rel).string(),
                                  serialize_textgrid(inv));

                manifest << wav_rel << ',' << grid_rel << ',' << speaker.id << ','
                         << to_string(group.condition) << "\n";

                nlohmann::json fj;
                fj["file"] = wav_rel;
                fj["speaker"] = speaker.id;
                fj["condition"] = to_string(group.condition);
                nlohmann::json toks = nlohmann::json::array();
                for (const TokenTruth& tt : tokens) {
                    toks.push_back({{"label", tt.label},
                                    {"f1", tt.f1},
                                    {"f2", tt.f2},
                                    {"f3", tt.f3},
                                    {"f0", tt.f0},
                                    {"start_s", tt.start_s},
                                    {"end_s", tt.end_s}});
                }
                fj["tokens"] = toks;
                files_json.push_back(std::move(fj));
                ++out.n_files;
            }
        }
    }

    nlohmann::json counts;
    for (const auto& [key, count] : out.vowel_counts) counts[key] = count;
    truth["vowel_counts"] = counts;
    truth["files"] = files_json;

    out.manifest_path = (fs::path(out_dir) / "manifest.csv").string();
    out.ground_truth_path = (fs::path(out_dir) / "ground_truth.json").string();
    write_file_atomic(out.manifest_path, manifest.str());
    write_file_atomic(out.ground_truth_path, truth.dump(2) + "\n");
    return out;
}

CorpusSpec acceptance_corpus_spec(std::uint64_t seed) {
    CorpusSpec spec;
    spec.seed = seed;

    VowelClassSpec uh{"UH", 470.0, 1160.0, 2680.0};
    VowelClassSpec iy{"IY", 300.0, 2250.0, 3050.0};
    VowelClassSpec aa{"AA", 730.0, 1090.0, 2440.0};

    SpeakerSpec a;
    a.id = "spkA";
    a.f0_hz = 118.0;
    a.vowels = {uh, iy, aa};
    SpeakerSpec b;
    b.id = "spkB";
    b.f0_hz = 205.0;
    b.vowels = {uh, iy, aa};
    spec.speakers = {a, b};

    GroupSpec s1;
    s1.condition = Condition::s1;
    s1.n_files = 6;
    s1.tokens_per_file = 12;

    GroupSpec s2 = s1;
    s2.condition = Condition::s2;
    s2.formant_shift_sds = 0.5;  // session drift on every class

    GroupSpec fake = s1;
    fake.condition = Condition::fake;
    fake.formant_shift_sds = 1.5;
    fake.shifted_classes = {"UH"};  // deepfake artifact concentrated on one vowel

    spec.groups = {s1, s2, fake};
    return spec;
}

CorpusSpec tiny_corpus_spec(std::uint64_t seed) {
    CorpusSpec spec;
    spec.seed = seed;

    VowelClassSpec uh{"UH", 470.0, 1160.0, 2680.0};
    VowelClassSpec aa{"AA", 730.0, 1090.0, 2440.0};

    SpeakerSpec a;
    a.id = "spkA";
    a.f0_hz = 120.0;
    a.vowels = {uh, aa};
    spec.speakers = {a};

    GroupSpec s1;
    s1.condition = Condition::s1;
    s1.n_files = 1;
    s1.tokens_per_file = 6;
    GroupSpec fake = s1;
    fake.condition = Condition::fake;
    fake.formant_shift_sds = 1.5;
    spec.groups = {s1, fake};
    return spec;
}

}  // namespace dfv
