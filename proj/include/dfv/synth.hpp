#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "dfv/features.hpp"

namespace dfv {

struct VowelClassSpec {
    std::string label;  // ARPABET without stress digit
    double f1 = 700.0, f2 = 1200.0, f3 = 2600.0;
    double b1 = 80.0, b2 = 90.0, b3 = 120.0;       // bandwidths
    double scatter_f1 = 30.0, scatter_f2 = 50.0, scatter_f3 = 80.0;
};

struct SpeakerSpec {
    std::string id;
    double f0_hz = 120.0;
    double f0_scatter_hz = 5.0;
    std::vector<VowelClassSpec> vowels;
};

struct GroupSpec {
    Condition condition = Condition::s1;
    int n_files = 4;
    int tokens_per_file = 12;
    double formant_shift_sds = 0.0;         // target shift in per-class scatter-SD units
    std::set<std::string> shifted_classes;  // empty = shift every class
    double f0_shift_hz = 0.0;
};

struct CorpusSpec {
    int sample_rate = 16000;
    double vowel_s = 0.18;
    double gap_s = 0.12;
    std::uint64_t seed = 1;
    std::vector<SpeakerSpec> speakers;
    std::vector<GroupSpec> groups;  // applied to every speaker
};

struct CorpusOutput {
    std::string manifest_path;
    std::string ground_truth_path;
    size_t n_files = 0;
    // "speaker/condition/label" -> declared vowel token count
    std::map<std::string, size_t> vowel_counts;
};

// Pulse-train-excited resonator-cascade vowels with declared targets;
// writes WAVs, TextGrids, manifest.csv and ground_truth.json under out_dir.
// Same spec + seed => bit-identical fixture set.
CorpusOutput synth_corpus(const CorpusSpec& spec, const std::string& out_dir);

// One vowel token in isolation (shared by dsp oracle tests).
std::vector<double> synth_vowel(int sample_rate, double duration_s, double f0_hz, double f1,
                                double f2, double f3, double b1 = 80.0, double b2 = 90.0,
                                double b3 = 120.0);

// 2-speaker corpus backing the end-to-end acceptance run: fake shifts the
// UH class by 1.5 scatter SDs, s2 drifts every class by 0.5.
CorpusSpec acceptance_corpus_spec(std::uint64_t seed = 20260823);

// 2-file single-speaker corpus for fast CLI tests.
CorpusSpec tiny_corpus_spec(std::uint64_t seed = 7);

}  // namespace dfv
