#include <algorithm>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dfv/audio.hpp"
#include "dfv/config.hpp"
#include "dfv/errors.hpp"
#include "dfv/experiment.hpp"
#include "dfv/features.hpp"
#include "dfv/gmm.hpp"
#include "dfv/report.hpp"
#include "dfv/scoring.hpp"
#include "dfv/synth.hpp"
#include "dfv/textgrid.hpp"
#include "dfv/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitFailure = 2;

std::string metadata_header(const dfv::RunConfig& config) {
    std::ostringstream os;
    os << "# dfvoice " << dfv::kToolkitVersion << " seed=" << config.master_seed
       << " config=" << dfv::config_hash(config) << "\n";
    return os.str();
}

json meta_json(const dfv::RunConfig& config) {
    return {{"tool", "dfvoice"},
            {"version", dfv::kToolkitVersion},
            {"seed", config.master_seed},
            {"config", dfv::config_hash(config)},
            {"eer_estimator", "pooled-threshold sweep, linear interpolation at the crossing"}};
}

// CLI override plumbing: every config key has a flag; only flags the user
// passed overwrite the loaded config.
struct Overrides {
    std::optional<std::string> manifest, output_dir, families, vowel_set, mel_scale, covariance,
        cepstral_window;
    std::optional<double> formant_ceiling, formant_window, formant_hop, preemphasis_from,
        max_bandwidth, f0_min, f0_max, voicing_threshold, silence_db, pitch_window, pitch_hop,
        cepstral_window_s, cepstral_hop, mel_flo, mel_fhi, split, tol, confidence,
        density_bandwidth;
    std::optional<int> max_formants, n_mels, n_mfcc, delta_width, repetitions, pretest_folds,
        max_iter, restarts, density_grid, threads;
    std::optional<std::uint64_t> seed;
    std::vector<int> pretest_grid;
    bool include_nonspeech = false;

    void add_flags(CLI::App* cmd) {
        cmd->add_option("--manifest", manifest, "corpus manifest CSV");
        cmd->add_option("--out", output_dir, "output directory");
        cmd->add_option("--families", families, "comma list: mf,ltfd,ltf0,mfcc,fbank");
        cmd->add_option("--vowel-set", vowel_set, "comma list of ARPABET vowels");
        cmd->add_option("--formant-ceiling", formant_ceiling, "formant ceiling Hz");
        cmd->add_option("--max-formants", max_formants, "LPC formant count");
        cmd->add_option("--formant-window", formant_window, "formant window s");
        cmd->add_option("--formant-hop", formant_hop, "formant hop s");
        cmd->add_option("--preemphasis-from", preemphasis_from, "pre-emphasis corner Hz");
        cmd->add_option("--max-bandwidth", max_bandwidth, "formant bandwidth cutoff Hz");
        cmd->add_option("--f0-min", f0_min, "pitch floor Hz");
        cmd->add_option("--f0-max", f0_max, "pitch ceiling Hz");
        cmd->add_option("--voicing-threshold", voicing_threshold, "NCCF voicing threshold");
        cmd->add_option("--silence-db", silence_db, "silence floor dB below max");
        cmd->add_option("--pitch-window", pitch_window, "pitch window s");
        cmd->add_option("--pitch-hop", pitch_hop, "pitch hop s");
        cmd->add_option("--cepstral-window", cepstral_window_s, "MFCC/FBank window s");
        cmd->add_option("--cepstral-hop", cepstral_hop, "MFCC/FBank hop s");
        cmd->add_option("--cepstral-shape", cepstral_window, "MFCC window shape");
        cmd->add_option("--n-mels", n_mels, "mel filter count");
        cmd->add_option("--n-mfcc", n_mfcc, "static MFCC count");
        cmd->add_option("--mel-flo", mel_flo, "mel band low edge Hz");
        cmd->add_option("--mel-fhi", mel_fhi, "mel band high edge Hz");
        cmd->add_option("--mel-scale", mel_scale, "slaney|htk");
        cmd->add_option("--delta-width", delta_width, "delta regression half-width");
        cmd->add_flag("--include-nonspeech", include_nonspeech,
                      "keep MFCC/FBank frames outside word intervals");
        cmd->add_option("--repetitions", repetitions, "experiment repetitions");
        cmd->add_option("--split", split, "train fraction");
        cmd->add_option("--seed", seed, "master seed");
        cmd->add_option("--pretest-grid", pretest_grid, "component grid");
        cmd->add_option("--pretest-folds", pretest_folds, "cross-validation folds");
        cmd->add_option("--covariance", covariance, "automatic|diagonal|full");
        cmd->add_option("--max-iter", max_iter, "EM iteration cap");
        cmd->add_option("--tol", tol, "EM relative tolerance");
        cmd->add_option("--restarts", restarts, "EM restarts");
        cmd->add_option("--confidence", confidence, "ellipse confidence");
        cmd->add_option("--density-bandwidth", density_bandwidth, "KDE bandwidth Hz (0=auto)");
        cmd->add_option("--density-grid", density_grid, "KDE grid points");
        cmd->add_option("--threads", threads, "worker threads (0=auto)");
    }

    void apply(dfv::RunConfig& c) const {
        auto set = [](auto& field, const auto& opt) {
            if (opt) field = *opt;
        };
        set(c.manifest_path, manifest);
        set(c.output_dir, output_dir);
        if (families) {
            c.extract.families.clear();
            for (const std::string& f : dfv::split(*families, ','))
                c.extract.families.insert(dfv::family_from_string(dfv::trim(f)));
        }
        if (vowel_set) {
            c.extract.vowel_set.clear();
            for (const std::string& v : dfv::split(*vowel_set, ','))
                c.extract.vowel_set.insert(dfv::trim(v));
        }
        set(c.extract.formant.ceiling_hz, formant_ceiling);
        set(c.extract.formant.max_formants, max_formants);
        set(c.extract.formant.window_s, formant_window);
        set(c.extract.formant.hop_s, formant_hop);
        set(c.extract.formant.preemphasis_from_hz, preemphasis_from);
        set(c.extract.formant.max_bandwidth_hz, max_bandwidth);
        set(c.extract.pitch.f0_min_hz, f0_min);
        set(c.extract.pitch.f0_max_hz, f0_max);
        set(c.extract.pitch.voicing_threshold, voicing_threshold);
        set(c.extract.pitch.silence_db, silence_db);
        set(c.extract.pitch.frame.length_s, pitch_window);
        set(c.extract.pitch.frame.hop_s, pitch_hop);
        set(c.extract.cepstral_frame.length_s, cepstral_window_s);
        set(c.extract.cepstral_frame.hop_s, cepstral_hop);
        set(c.extract.n_mels, n_mels);
        set(c.extract.n_mfcc, n_mfcc);
        set(c.extract.mel_f_lo, mel_flo);
        set(c.extract.mel_f_hi, mel_fhi);
        set(c.extract.delta_width, delta_width);
        if (include_nonspeech) c.extract.include_nonspeech_frames = true;
        if (mel_scale)
            c.extract.mel_scale = dfv::to_lower(*mel_scale) == "htk" ? dfv::MelScale::htk
                                                                     : dfv::MelScale::slaney;
        set(c.repetitions, repetitions);
        set(c.split, split);
        set(c.master_seed, seed);
        if (!pretest_grid.empty()) c.pretest_grid = pretest_grid;
        set(c.pretest_folds, pretest_folds);
        if (covariance) {
            std::string u = dfv::to_lower(*covariance);
            c.gmm.covariance = u == "diagonal" ? dfv::CovarianceChoice::diagonal
                               : u == "full"   ? dfv::CovarianceChoice::full
                                               : dfv::CovarianceChoice::automatic;
        }
        set(c.gmm.max_iter, max_iter);
        set(c.gmm.tol, tol);
        set(c.gmm.restarts, restarts);
        set(c.report.confidence, confidence);
        set(c.report.density_bandwidth, density_bandwidth);
        set(c.report.density_grid, density_grid);
        set(c.max_threads, threads);
    }
};

dfv::RunConfig make_config(const std::optional<std::string>& config_path, const Overrides& ov) {
    dfv::RunConfig c;
    if (config_path) c = dfv::load_run_config(*config_path);
    ov.apply(c);
    return c;
}

int cmd_extract(const dfv::RunConfig& config) {
    if (config.manifest_path.empty())
        throw dfv::ConfigError("extract needs a manifest (--manifest or config)");
    if (!fs::exists(config.manifest_path))
        throw dfv::ConfigError("manifest path does not exist: " + config.manifest_path);
    std::vector<dfv::ManifestEntry> entries = dfv::read_manifest(config.manifest_path);
    fs::create_directories(config.output_dir);

    struct FileOutcome {
        std::vector<dfv::FeatureToken> tokens;
        dfv::ExtractStats stats;
        std::vector<std::string> warnings;
        std::string error;
    };
    std::vector<FileOutcome> outcomes(entries.size());

    dfv::parallel_for(
        entries.size(),
        [&](size_t i) {
            FileOutcome& oc = outcomes[i];
            try {
                dfv::AudioBuffer audio = dfv::read_wav(entries[i].file_path);
                dfv::SegmentInventory inv = dfv::parse_textgrid(entries[i].textgrid_path);
                oc.warnings = inv.warnings;
                oc.tokens = dfv::extract_file(audio, inv, entries[i], config.extract, &oc.stats);
            } catch (const std::exception& e) {
                oc.error = e.what();
            }
        },
        config.max_threads);

    dfv::TokenStore store;
    dfv::ExtractStats totals;
    size_t failed = 0;
    json log_files = json::array();
    for (size_t i = 0; i < entries.size(); ++i) {
        FileOutcome& oc = outcomes[i];
        json fj;
        fj["file"] = entries[i].file_path;
        if (!oc.error.empty()) {
            ++failed;
            fj["status"] = "failed";
            fj["error"] = oc.error;
            std::cerr << "extract: skipping " << entries[i].file_path << ": " << oc.error << "\n";
        } else {
            fj["status"] = "ok";
            fj["tokens"] = oc.tokens.size();
            fj["warnings"] = oc.warnings;
            totals.accumulate(oc.stats);
            store.add_all(std::move(oc.tokens));
        }
        log_files.push_back(std::move(fj));
    }
    store.canonicalize();

    std::string tokens_path = (fs::path(config.output_dir) / "tokens.csv").string();
    dfv::save_tokens(store, tokens_path, config.master_seed, dfv::config_hash(config));

    size_t ltf0_total = totals.ltf0_tokens + totals.ltf0_points_unvoiced;
    json log;
    log["meta"] = meta_json(config);
    log["files"] = log_files;
    log["totals"] = {
        {"vocalic_segments", totals.vocalic_segments},
        {"mf_tokens", totals.mf_tokens},
        {"mf_dropped", totals.mf_dropped},
        {"ltfd_tokens", totals.ltfd_tokens},
        {"ltfd_points_dropped", totals.ltfd_points_dropped},
        {"ltf0_tokens", totals.ltf0_tokens},
        {"ltf0_points_unvoiced", totals.ltf0_points_unvoiced},
        {"voicing_rate", ltf0_total > 0
                             ? static_cast<double>(totals.ltf0_tokens) /
                                   static_cast<double>(ltf0_total)
                             : 0.0},
        {"cepstral_frames", totals.cepstral_frames},
        {"nonspeech_frames_skipped", totals.nonspeech_frames_skipped},
        {"resampled_for_cepstra", totals.resampled_for_cepstra}};
    dfv::write_file_atomic((fs::path(config.output_dir) / "extract_log.json").string(),
                           log.dump(2) + "\n");

    if (entries.empty())
        std::cerr << "extract: warning: manifest has no entries; token CSV is empty\n";
    std::cout << "extract: " << store.size() << " tokens from " << (entries.size() - failed) << "/"
              << entries.size() << " files -> " << tokens_path << "\n";
    if (!entries.empty() && failed == entries.size()) {
        std::cerr << "extract: every file failed\n";
        return kExitFailure;
    }
    return kExitOk;
}

Eigen::MatrixXd matrix_of(const std::vector<const dfv::FeatureToken*>& tokens) {
    if (tokens.empty()) return {};
    Eigen::MatrixXd X(static_cast<Eigen::Index>(tokens.size()),
                      static_cast<Eigen::Index>(tokens[0]->values.size()));
    for (size_t i = 0; i < tokens.size(); ++i)
        for (size_t j = 0; j < tokens[i]->values.size(); ++j)
            X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = tokens[i]->values[j];
    return X;
}

int cmd_pretest(const dfv::RunConfig& config, const std::string& tokens_path,
                const std::string& family_str, const std::string& speaker,
                const std::string& phoneme, const std::string& conditions_str) {
    dfv::TokenStore store = dfv::load_tokens(tokens_path);
    dfv::TokenFilter filter;
    filter.family = dfv::family_from_string(family_str);
    filter.speaker = speaker;
    if (!phoneme.empty()) filter.phoneme = phoneme;
    for (const std::string& c : dfv::split(conditions_str, ','))
        filter.conditions.insert(dfv::condition_from_string(dfv::trim(c)));

    auto tokens = store.select(filter);
    if (tokens.empty()) throw dfv::InsufficientDataError("pretest: no tokens match the selector");

    dfv::GmmConfig gmm = config.gmm;
    gmm.seed = dfv::derive_seed(config.master_seed, 0xFFFF0001ULL);
    dfv::PretestReport report =
        dfv::pretest_components(matrix_of(tokens), config.pretest_grid, config.pretest_folds, gmm);

    std::cout << "pretest: " << tokens.size() << " tokens, family " << family_str << "\n";
    for (size_t i = 0; i < report.grid.size(); ++i) {
        std::cout << "  K=" << report.grid[i] << "  held-out LL/token = ";
        if (std::isnan(report.heldout_ll[i]))
            std::cout << "failed";
        else
            std::cout << dfv::format_double(report.heldout_ll[i]);
        std::cout << (report.grid[i] == report.chosen_k ? "  <- chosen" : "") << "\n";
    }

    fs::create_directories(config.output_dir);
    json j;
    j["meta"] = meta_json(config);
    j["family"] = family_str;
    j["speaker"] = speaker;
    j["phoneme"] = phoneme;
    j["conditions"] = conditions_str;
    j["grid"] = report.grid;
    j["heldout_ll"] = report.heldout_ll;
    j["chosen_k"] = report.chosen_k;
    std::string name = "pretest_" + speaker + "_" + dfv::to_lower(family_str) +
                       (phoneme.empty() ? "" : "_" + phoneme) + ".json";
    dfv::write_file_atomic((fs::path(config.output_dir) / name).string(), j.dump(2) + "\n");
    return kExitOk;
}

std::vector<dfv::ExperimentPlan> auto_plans(const dfv::TokenStore& store,
                                            const dfv::RunConfig& config) {
    std::vector<dfv::ExperimentPlan> plans;
    for (const std::string& speaker : store.speakers()) {
        std::set<std::string> phonemes;
        for (const dfv::FeatureToken& t : store.tokens())
            if (t.speaker == speaker && t.family == dfv::Family::mf) phonemes.insert(t.phoneme);
        for (dfv::ConditionPair pair :
             {dfv::ConditionPair::real_vs_fake, dfv::ConditionPair::s1_vs_s2}) {
            auto base = [&](dfv::Family family, const std::string& phoneme) {
                dfv::ExperimentPlan p;
                p.speaker = speaker;
                p.family = family;
                p.phoneme = phoneme;
                p.pair = pair;
                p.repetitions = config.repetitions;
                p.split = config.split;
                p.master_seed = config.master_seed;
                p.gmm = config.gmm;
                p.pretest_grid = config.pretest_grid;
                p.pretest_folds = config.pretest_folds;
                plans.push_back(std::move(p));
            };
            for (const std::string& ph : phonemes) base(dfv::Family::mf, ph);
            base(dfv::Family::ltfd, "");
            base(dfv::Family::ltf0, "");
            base(dfv::Family::mfcc, "");
        }
    }
    return plans;
}

std::vector<dfv::ExperimentPlan> plans_from_json(const std::string& text,
                                                 const dfv::RunConfig& config) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw dfv::ConfigError(std::string("plan JSON: ") + e.what());
    }
    if (!j.is_array()) throw dfv::ConfigError("plan JSON must be an array");
    std::vector<dfv::ExperimentPlan> plans;
    for (const json& pj : j) {
        dfv::ExperimentPlan p;
        p.repetitions = config.repetitions;
        p.split = config.split;
        p.master_seed = config.master_seed;
        p.gmm = config.gmm;
        p.pretest_grid = config.pretest_grid;
        p.pretest_folds = config.pretest_folds;
        if (!pj.contains("speaker") || !pj.contains("family") || !pj.contains("pair"))
            throw dfv::ConfigError("plan entry needs speaker, family, pair");
        p.speaker = pj.at("speaker").get<std::string>();
        p.family = dfv::family_from_string(pj.at("family").get<std::string>());
        p.pair = dfv::condition_pair_from_string(pj.at("pair").get<std::string>());
        if (pj.contains("phoneme")) p.phoneme = pj.at("phoneme").get<std::string>();
        if (pj.contains("repetitions")) p.repetitions = pj.at("repetitions").get<int>();
        if (pj.contains("split")) p.split = pj.at("split").get<double>();
        if (pj.contains("master_seed")) p.master_seed = pj.at("master_seed").get<std::uint64_t>();
        if (p.family == dfv::Family::mf && p.phoneme.empty())
            throw dfv::ConfigError("MF plan needs a phoneme");
        plans.push_back(std::move(p));
    }
    return plans;
}

int cmd_evaluate(const dfv::RunConfig& config, const std::string& tokens_path,
                 const std::string& plans_path) {
    dfv::TokenStore store = dfv::load_tokens(tokens_path);
    std::vector<dfv::ExperimentPlan> plans =
        plans_path.empty() ? auto_plans(store, config)
                           : plans_from_json(dfv::read_file(plans_path), config);
    fs::create_directories(config.output_dir);

    std::vector<dfv::AggregateResult> results;
    results.reserve(plans.size());
    for (const dfv::ExperimentPlan& plan : plans)
        results.push_back(dfv::run_condition(plan, store, config.max_threads));

    // per-speaker, per-pair result tables
    std::map<std::pair<std::string, dfv::ConditionPair>, std::vector<dfv::AggregateResult>>
        by_table;
    for (const dfv::AggregateResult& r : results)
        by_table[{r.plan.speaker, r.plan.pair}].push_back(r);

    for (const auto& [key, rows] : by_table) {
        std::ostringstream os;
        os << metadata_header(config);
        os << "Feature,Cllr mean,SD,EER % mean\n";
        for (const dfv::AggregateResult* r : dfv::rank_features(rows)) {
            os << r->plan.label() << ',' << dfv::format_double(r->cllr_mean) << ','
               << dfv::format_double(r->cllr_sd) << ','
               << dfv::format_double(r->eer_mean_percent) << "\n";
        }
        std::string name = "results_" + key.first + "_" + to_string(key.second) + ".csv";
        dfv::write_file_atomic((fs::path(config.output_dir) / name).string(), os.str());
    }

    // score dump
    std::ostringstream scores;
    scores << metadata_header(config);
    scores << "speaker,family,phoneme,condition_pair,repetition,label,llr\n";
    for (const dfv::AggregateResult& r : results) {
        for (size_t rep = 0; rep < r.per_repetition_scores.size(); ++rep) {
            const dfv::TrialScoreSet& s = r.per_repetition_scores[rep];
            auto emit = [&](const std::vector<double>& llrs, const char* label) {
                for (double l : llrs)
                    scores << r.plan.speaker << ',' << to_string(r.plan.family) << ','
                           << r.plan.phoneme << ',' << to_string(r.plan.pair) << ',' << rep << ','
                           << label << ',' << dfv::format_double(l) << "\n";
            };
            emit(s.target_llrs, "target");
            emit(s.nontarget_llrs, "nontarget");
        }
    }
    dfv::write_file_atomic((fs::path(config.output_dir) / "scores.csv").string(), scores.str());

    // machine-readable detail
    json results_json = json::array();
    json skipped_json = json::array();
    for (const dfv::AggregateResult& r : results) {
        json rj;
        rj["speaker"] = r.plan.speaker;
        rj["family"] = to_string(r.plan.family);
        rj["phoneme"] = r.plan.phoneme;
        rj["pair"] = to_string(r.plan.pair);
        rj["label"] = r.plan.label();
        if (!r.ok) {
            rj["reason"] = r.skip_reason;
            skipped_json.push_back(std::move(rj));
            continue;
        }
        rj["cllr_mean"] = r.cllr_mean;
        rj["cllr_sd"] = r.cllr_sd;
        rj["eer_mean_percent"] = r.eer_mean_percent;
        rj["band"] = to_string(r.band);
        rj["pretest"] = {{"grid", r.pretest.grid},
                         {"heldout_ll", r.pretest.heldout_ll},
                         {"chosen_k", r.pretest.chosen_k}};
        json reps = json::array();
        for (const dfv::EvalResult& er : r.per_repetition)
            reps.push_back({{"cllr", er.cllr}, {"eer", er.eer}, {"band", to_string(er.band)}});
        rj["per_repetition"] = reps;
        results_json.push_back(std::move(rj));
    }

    json comparisons = json::array();
    for (const dfv::AggregateResult& rvf : results) {
        if (!rvf.ok || rvf.plan.pair != dfv::ConditionPair::real_vs_fake) continue;
        for (const dfv::AggregateResult& s1s2 : results) {
            if (!s1s2.ok || s1s2.plan.pair != dfv::ConditionPair::s1_vs_s2) continue;
            if (s1s2.plan.speaker != rvf.plan.speaker || s1s2.plan.family != rvf.plan.family ||
                s1s2.plan.phoneme != rvf.plan.phoneme)
                continue;
            dfv::ComparisonRecord rec = dfv::compare_conditions(rvf, s1s2);
            comparisons.push_back({{"speaker", rvf.plan.speaker},
                                   {"label", rvf.plan.label()},
                                   {"cllr_rvf", rec.cllr_rvf},
                                   {"cllr_s1s2", rec.cllr_s1s2},
                                   {"ratio", rec.ratio},
                                   {"rvf_lower", rec.rvf_lower}});
        }
    }

    json out;
    out["meta"] = meta_json(config);
    out["results"] = results_json;
    out["comparisons"] = comparisons;
    out["skipped"] = skipped_json;
    dfv::write_file_atomic((fs::path(config.output_dir) / "results.json").string(),
                           out.dump(2) + "\n");

    size_t n_ok = results_json.size();
    std::cout << "evaluate: " << n_ok << " result(s), " << skipped_json.size()
              << " skipped -> " << config.output_dir << "\n";
    return kExitOk;
}

int cmd_report(const dfv::RunConfig& config, const std::string& tokens_path) {
    dfv::TokenStore store = dfv::load_tokens(tokens_path);
    fs::create_directories(config.output_dir);
    std::vector<std::string> warnings;
    std::string header = metadata_header(config);

    for (const std::string& speaker : store.speakers()) {
        dfv::TokenFilter mf_filter;
        mf_filter.family = dfv::Family::mf;
        mf_filter.speaker = speaker;
        auto mf_tokens = store.select(mf_filter);
        if (!mf_tokens.empty()) {
            auto ellipses = dfv::emit_ellipses(mf_tokens, config.report.confidence, &warnings);
            dfv::write_file_atomic(
                (fs::path(config.output_dir) / ("ellipses_" + speaker + ".csv")).string(),
                header + dfv::ellipses_to_csv(ellipses));
        }

        for (dfv::Condition cond : {dfv::Condition::real, dfv::Condition::fake, dfv::Condition::s1,
                                    dfv::Condition::s2}) {
            dfv::TokenFilter f;
            f.family = dfv::Family::ltfd;
            f.speaker = speaker;
            f.conditions = {cond};
            auto ltfd = store.select(f);
            if (ltfd.empty()) continue;
            for (int fi = 1; fi <= 3; ++fi) {
                dfv::DensityCurve curve = dfv::emit_ltfd_density(
                    ltfd, fi, config.report.density_bandwidth, config.extract.formant.ceiling_hz,
                    config.report.density_grid);
                std::string name = "density_" + speaker + "_" + to_string(cond) + "_f" +
                                   std::to_string(fi) + ".csv";
                dfv::write_file_atomic((fs::path(config.output_dir) / name).string(),
                                       header + dfv::density_to_csv(curve));
            }
        }
    }

    dfv::TokenFilter fbank_filter;
    fbank_filter.family = dfv::Family::fbank;
    auto fbank_tokens = store.select(fbank_filter);
    for (const dfv::FbankProfile& profile :
         dfv::emit_fbank_profile(fbank_tokens, &warnings)) {
        std::string name = "fbank_" + profile.speaker + "_" + to_string(profile.condition) + ".csv";
        dfv::write_file_atomic((fs::path(config.output_dir) / name).string(),
                               header + dfv::fbank_profile_to_csv(profile));
    }

    for (const std::string& w : warnings) std::cerr << "report: " << w << "\n";
    std::cout << "report: plot data written to " << config.output_dir << "\n";
    return kExitOk;
}

int cmd_synth(const std::string& out_dir, const std::string& preset, std::uint64_t seed,
              std::optional<int> n_files, std::optional<int> tokens_per_file) {
    dfv::CorpusSpec spec;
    if (preset == "acceptance")
        spec = dfv::acceptance_corpus_spec(seed);
    else if (preset == "tiny")
        spec = dfv::tiny_corpus_spec(seed);
    else
        throw dfv::ConfigError("unknown preset \"" + preset + "\" (want acceptance|tiny)");
    spec.seed = seed;
    for (dfv::GroupSpec& g : spec.groups) {
        if (n_files) g.n_files = *n_files;
        if (tokens_per_file) g.tokens_per_file = *tokens_per_file;
    }
    dfv::CorpusOutput out = dfv::synth_corpus(spec, out_dir);
    std::cout << "synth-corpus: " << out.n_files << " files -> " << out.manifest_path << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dfvoice: interpretable acoustic analysis of deepfake speech"};
    app.set_version_flag("--version", std::string("dfvoice ") + dfv::kToolkitVersion);
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    Overrides ov;

    CLI::App* extract = app.add_subcommand("extract", "extract feature tokens from a corpus");
    extract->add_option("--config", config_path, "run config JSON");
    ov.add_flags(extract);

    std::string tokens_path = "out/tokens.csv";
    std::string family_str, speaker, phoneme, conditions_str = "real,s1";
    CLI::App* pretest = app.add_subcommand("pretest", "cross-validated GMM component pre-test");
    pretest->add_option("--config", config_path, "run config JSON");
    pretest->add_option("--tokens", tokens_path, "token CSV from extract");
    pretest->add_option("--family", family_str, "feature family")->required();
    pretest->add_option("--speaker", speaker, "speaker id")->required();
    pretest->add_option("--phoneme", phoneme, "IPA phoneme (MF only)");
    pretest->add_option("--conditions", conditions_str, "comma list of conditions");
    ov.add_flags(pretest);

    std::string plans_path;
    CLI::App* evaluate = app.add_subcommand("evaluate", "run the Cllr/EER experiment grid");
    evaluate->add_option("--config", config_path, "run config JSON");
    evaluate->add_option("--tokens", tokens_path, "token CSV from extract");
    evaluate->add_option("--plans", plans_path, "plan JSON (default: all plans)");
    ov.add_flags(evaluate);

    CLI::App* report = app.add_subcommand("report", "emit ellipse/density/fbank plot data");
    report->add_option("--config", config_path, "run config JSON");
    report->add_option("--tokens", tokens_path, "token CSV from extract");
    ov.add_flags(report);

    std::string synth_out = "corpus", preset = "acceptance";
    std::uint64_t synth_seed = 20260823;
    std::optional<int> synth_files, synth_tokens;
    CLI::App* synth = app.add_subcommand("synth-corpus", "generate a synthetic test corpus");
    synth->add_option("--out", synth_out, "corpus output directory");
    synth->add_option("--preset", preset, "acceptance|tiny");
    synth->add_option("--seed", synth_seed, "corpus seed");
    synth->add_option("--files", synth_files, "files per speaker+condition");
    synth->add_option("--tokens-per-file", synth_tokens, "vowel tokens per file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (synth->parsed())
            return cmd_synth(synth_out, preset, synth_seed, synth_files, synth_tokens);
        dfv::RunConfig config = make_config(config_path, ov);
        if (extract->parsed()) return cmd_extract(config);
        if (pretest->parsed())
            return cmd_pretest(config, tokens_path, family_str, speaker, phoneme, conditions_str);
        if (evaluate->parsed()) return cmd_evaluate(config, tokens_path, plans_path);
        if (report->parsed()) return cmd_report(config, tokens_path);
        return kExitUsage;
    } catch (const dfv::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}
