#include "dfv/config.hpp"

#include <filesystem>

#include "json.hpp"

#include "dfv/errors.hpp"
#include "dfv/util.hpp"

namespace dfv {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::vector<std::string>& known,
                    const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown config key \"" + (where.empty() ? key : where + "." + key) +
                              "\"");
    }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key \"" + std::string(key) + "\": " + e.what());
    }
}

MelScale mel_scale_from_string(const std::string& s) {
    std::string u = to_lower(s);
    if (u == "slaney") return MelScale::slaney;
    if (u == "htk") return MelScale::htk;
    throw ConfigError("unknown mel scale \"" + s + "\" (want slaney|htk)");
}

WindowShape window_from_string(const std::string& s) {
    std::string u = to_lower(s);
    if (u == "rectangular") return WindowShape::rectangular;
    if (u == "hamming") return WindowShape::hamming;
    if (u == "hann") return WindowShape::hann;
    if (u == "gaussian") return WindowShape::gaussian;
    throw ConfigError("unknown window shape \"" + s + "\"");
}

std::string window_to_string(WindowShape w) {
    switch (w) {
        case WindowShape::rectangular: return "rectangular";
        case WindowShape::hamming: return "hamming";
        case WindowShape::hann: return "hann";
        case WindowShape::gaussian: return "gaussian";
    }
    throw ContractError("window_to_string: bad shape");
}

CovarianceChoice covariance_from_string(const std::string& s) {
    std::string u = to_lower(s);
    if (u == "automatic" || u == "auto") return CovarianceChoice::automatic;
    if (u == "diagonal") return CovarianceChoice::diagonal;
    if (u == "full") return CovarianceChoice::full;
    throw ConfigError("unknown covariance \"" + s + "\" (want automatic|diagonal|full)");
}

std::string covariance_to_string(CovarianceChoice c) {
    switch (c) {
        case CovarianceChoice::automatic: return "automatic";
        case CovarianceChoice::diagonal: return "diagonal";
        case CovarianceChoice::full: return "full";
    }
    throw ContractError("covariance_to_string: bad choice");
}

}  // namespace

RunConfig run_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    RunConfig c;
    reject_unknown(j,
                   {"manifest", "output_dir", "families", "vowel_set", "ipa_map", "formant",
                    "pitch", "cepstra", "experiment", "gmm", "report", "max_threads"},
                   "");

    read_field(j, "manifest", c.manifest_path);
    read_field(j, "output_dir", c.output_dir);
    read_field(j, "max_threads", c.max_threads);

    if (j.contains("families")) {
        c.extract.families.clear();
        for (const auto& f : j.at("families"))
            c.extract.families.insert(family_from_string(f.get<std::string>()));
        if (c.extract.families.empty()) throw ConfigError("families list is empty");
    }
    if (j.contains("vowel_set")) {
        for (const auto& v : j.at("vowel_set"))
            c.extract.vowel_set.insert(v.get<std::string>());
        if (c.extract.vowel_set.empty()) throw ConfigError("vowel_set list is empty");
    }
    if (j.contains("ipa_map")) {
        for (const auto& [key, value] : j.at("ipa_map").items())
            c.extract.ipa_map[key] = value.get<std::string>();
    }

    if (j.contains("formant")) {
        const json& f = j.at("formant");
        reject_unknown(f,
                       {"ceiling_hz", "max_formants", "window_s", "hop_s", "preemphasis_from_hz",
                        "max_bandwidth_hz"},
                       "formant");
        read_field(f, "ceiling_hz", c.extract.formant.ceiling_hz);
        read_field(f, "max_formants", c.extract.formant.max_formants);
        read_field(f, "window_s", c.extract.formant.window_s);
        read_field(f, "hop_s", c.extract.formant.hop_s);
        read_field(f, "preemphasis_from_hz", c.extract.formant.preemphasis_from_hz);
        read_field(f, "max_bandwidth_hz", c.extract.formant.max_bandwidth_hz);
    }
    if (j.contains("pitch")) {
        const json& p = j.at("pitch");
        reject_unknown(
            p, {"f0_min_hz", "f0_max_hz", "voicing_threshold", "silence_db", "window_s", "hop_s"},
            "pitch");
        read_field(p, "f0_min_hz", c.extract.pitch.f0_min_hz);
        read_field(p, "f0_max_hz", c.extract.pitch.f0_max_hz);
        read_field(p, "voicing_threshold", c.extract.pitch.voicing_threshold);
        read_field(p, "silence_db", c.extract.pitch.silence_db);
        read_field(p, "window_s", c.extract.pitch.frame.length_s);
        read_field(p, "hop_s", c.extract.pitch.frame.hop_s);
    }
    if (j.contains("cepstra")) {
        const json& m = j.at("cepstra");
        reject_unknown(m,
                       {"window_s", "hop_s", "window", "n_mels", "n_mfcc", "f_lo", "f_hi",
                        "mel_scale", "delta_width", "include_nonspeech_frames"},
                       "cepstra");
        read_field(m, "window_s", c.extract.cepstral_frame.length_s);
        read_field(m, "hop_s", c.extract.cepstral_frame.hop_s);
        if (m.contains("window"))
            c.extract.cepstral_frame.window = window_from_string(m.at("window").get<std::string>());
        read_field(m, "n_mels", c.extract.n_mels);
        read_field(m, "n_mfcc", c.extract.n_mfcc);
        read_field(m, "f_lo", c.extract.mel_f_lo);
        read_field(m, "f_hi", c.extract.mel_f_hi);
        if (m.contains("mel_scale"))
            c.extract.mel_scale = mel_scale_from_string(m.at("mel_scale").get<std::string>());
        read_field(m, "delta_width", c.extract.delta_width);
        read_field(m, "include_nonspeech_frames", c.extract.include_nonspeech_frames);
    }
    if (j.contains("experiment")) {
        const json& e = j.at("experiment");
        reject_unknown(e, {"repetitions", "split", "master_seed", "pretest_grid", "pretest_folds"},
                       "experiment");
        read_field(e, "repetitions", c.repetitions);
        read_field(e, "split", c.split);
        read_field(e, "master_seed", c.master_seed);
        read_field(e, "pretest_grid", c.pretest_grid);
        read_field(e, "pretest_folds", c.pretest_folds);
    }
    if (j.contains("gmm")) {
        const json& g = j.at("gmm");
        reject_unknown(g, {"covariance", "max_iter", "tol", "restarts"}, "gmm");
        if (g.contains("covariance"))
            c.gmm.covariance = covariance_from_string(g.at("covariance").get<std::string>());
        read_field(g, "max_iter", c.gmm.max_iter);
        read_field(g, "tol", c.gmm.tol);
        read_field(g, "restarts", c.gmm.restarts);
    }
    if (j.contains("report")) {
        const json& r = j.at("report");
        reject_unknown(r, {"confidence", "density_bandwidth", "density_grid"}, "report");
        read_field(r, "confidence", c.report.confidence);
        read_field(r, "density_bandwidth", c.report.density_bandwidth);
        read_field(r, "density_grid", c.report.density_grid);
    }

    if (c.split <= 0.0 || c.split >= 1.0) throw ConfigError("experiment.split must be in (0, 1)");
    if (c.repetitions < 1) throw ConfigError("experiment.repetitions must be >= 1");
    if (c.pretest_grid.empty()) throw ConfigError("experiment.pretest_grid is empty");
    // relative manifest paths are resolved (and checked) by load_run_config
    if (std::filesystem::path(c.manifest_path).is_absolute() &&
        !std::filesystem::exists(c.manifest_path))
        throw ConfigError("manifest path does not exist: " + c.manifest_path);
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::string text = read_file(path);
    std::filesystem::path base = std::filesystem::path(path).parent_path();
    RunConfig c = run_config_from_json(text);
    // the manifest path resolves against the config file's directory
    if (!c.manifest_path.empty() && std::filesystem::path(c.manifest_path).is_relative()) {
        std::filesystem::path resolved = base / c.manifest_path;
        if (!std::filesystem::exists(resolved))
            throw ConfigError("manifest path does not exist: " + resolved.string());
        c.manifest_path = resolved.string();
    }
    return c;
}

std::string run_config_to_json(const RunConfig& c) {
    json j;
    j["manifest"] = c.manifest_path;
    j["output_dir"] = c.output_dir;
    std::vector<std::string> families;
    for (Family f : c.extract.families) families.push_back(to_string(f));
    j["families"] = families;
    std::set<std::string> vowels =
        c.extract.vowel_set.empty() ? default_vowel_set() : c.extract.vowel_set;
    j["vowel_set"] = std::vector<std::string>(vowels.begin(), vowels.end());
    j["ipa_map"] = c.extract.ipa_map.empty() ? default_arpabet_ipa() : c.extract.ipa_map;
    j["formant"] = {{"ceiling_hz", c.extract.formant.ceiling_hz},
                    {"max_formants", c.extract.formant.max_formants},
                    {"window_s", c.extract.formant.window_s},
                    {"hop_s", c.extract.formant.hop_s},
                    {"preemphasis_from_hz", c.extract.formant.preemphasis_from_hz},
                    {"max_bandwidth_hz", c.extract.formant.max_bandwidth_hz}};
    j["pitch"] = {{"f0_min_hz", c.extract.pitch.f0_min_hz},
                  {"f0_max_hz", c.extract.pitch.f0_max_hz},
                  {"voicing_threshold", c.extract.pitch.voicing_threshold},
                  {"silence_db", c.extract.pitch.silence_db},
                  {"window_s", c.extract.pitch.frame.length_s},
                  {"hop_s", c.extract.pitch.frame.hop_s}};
    j["cepstra"] = {{"window_s", c.extract.cepstral_frame.length_s},
                    {"hop_s", c.extract.cepstral_frame.hop_s},
                    {"window", window_to_string(c.extract.cepstral_frame.window)},
                    {"n_mels", c.extract.n_mels},
                    {"n_mfcc", c.extract.n_mfcc},
                    {"f_lo", c.extract.mel_f_lo},
                    {"f_hi", c.extract.mel_f_hi},
                    {"mel_scale", c.extract.mel_scale == MelScale::slaney ? "slaney" : "htk"},
                    {"delta_width", c.extract.delta_width},
                    {"include_nonspeech_frames", c.extract.include_nonspeech_frames}};
    j["experiment"] = {{"repetitions", c.repetitions},
                       {"split", c.split},
                       {"master_seed", c.master_seed},
                       {"pretest_grid", c.pretest_grid},
                       {"pretest_folds", c.pretest_folds}};
    j["gmm"] = {{"covariance", covariance_to_string(c.gmm.covariance)},
                {"max_iter", c.gmm.max_iter},
                {"tol", c.gmm.tol},
                {"restarts", c.gmm.restarts}};
    j["report"] = {{"confidence", c.report.confidence},
                   {"density_bandwidth", c.report.density_bandwidth},
                   {"density_grid", c.report.density_grid}};
    j["max_threads"] = c.max_threads;
    return j.dump(2) + "\n";
}

std::string config_hash(const RunConfig& config) {
    // The hash fingerprints the parameters that shape results; where the
    // files live and how many workers ran do not belong in it.
    RunConfig c = config;
    c.manifest_path.clear();
    c.output_dir.clear();
    c.max_threads = 0;
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(run_config_to_json(c))));
    return buf;
}

}  // namespace dfv
