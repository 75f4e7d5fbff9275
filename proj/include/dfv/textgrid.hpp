#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace dfv {

// One labeled interval from a TextGrid tier. An empty label (after trimming)
// marks silence.
struct PhoneInterval {
    std::string label;
    double start_s = 0.0;
    double end_s = 0.0;

    bool is_silence() const { return label.empty(); }
};

struct SegmentInventory {
    std::vector<PhoneInterval> phones;
    std::vector<PhoneInterval> words;
    double total_duration_s = 0.0;
    std::vector<std::string> warnings;  // skipped tiers and similar non-fatal notes
};

// Parses a Praat TextGrid (long or short text form, UTF-8 or UTF-16).
// Tiers named "phones"/"words" (case-insensitive) populate the inventory;
// point tiers are skipped with a warning.
SegmentInventory parse_textgrid(const std::string& path);
SegmentInventory parse_textgrid_text(std::string_view text);

// Long-form text serialization; parse(serialize(inv)) reproduces inv exactly.
std::string serialize_textgrid(const SegmentInventory& inv);

// Drops trailing ARPABET stress digits ("AH0" -> "AH").
std::string strip_stress(std::string_view label);

// Phone intervals whose stress-stripped label is in vowel_set, in order.
std::vector<PhoneInterval> vocalic_segments(const SegmentInventory& inv,
                                            const std::set<std::string>& vowel_set);

// ARPABET vowel -> IPA rendering used in reports; unknown labels pass through.
const std::map<std::string, std::string>& default_arpabet_ipa();
std::set<std::string> default_vowel_set();
std::string to_ipa(const std::string& stripped_label,
                   const std::map<std::string, std::string>& ipa_map);

}  // namespace dfv
