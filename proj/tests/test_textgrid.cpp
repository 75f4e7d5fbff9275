#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "dfv/errors.hpp"
#include "dfv/textgrid.hpp"
#include "dfv/util.hpp"

using namespace dfv;

namespace {

const char* kMinimalLong = R"(File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 0.5
tiers? <exists>
size = 1
item []:
    item [1]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = 0.5
        intervals: size = 1
        intervals [1]:
            xmin = 0
            xmax = 0.5
            text = "AH0"
)";

std::string short_form_two_tier() {
    return "File type = \"ooTextFile\"\n"
           "Object class = \"TextGrid\"\n"
           "\n"
           "0\n1.2\n<exists>\n2\n"
           "\"IntervalTier\"\n\"words\"\n0\n1.2\n2\n"
           "0\n0.6\n\"hat\"\n0.6\n1.2\n\"\"\n"
           "\"IntervalTier\"\n\"phones\"\n0\n1.2\n3\n"
           "0\n0.3\n\"HH\"\n0.3\n0.9\n\"AE1\"\n0.9\n1.2\n\"T\"\n";
}

// Deterministic synthetic inventory: n phones alternating vowels and
// consonants with occasional silence gaps.
SegmentInventory make_inventory(int n_phones) {
    static const std::vector<std::string> labels = {"AA1", "T",   "IY0", "S",  "UH1",
                                                    "",    "EH2", "K",   "OW1", "N"};
    SegmentInventory inv;
    double t = 0.0;
    for (int i = 0; i < n_phones; ++i) {
        PhoneInterval p;
        p.label = labels[static_cast<size_t>(i) % labels.size()];
        p.start_s = t;
        t += 0.08 + 0.01 * (i % 3);
        p.end_s = t;
        inv.phones.push_back(p);
    }
    inv.words.push_back({"word", 0.0, t});
    inv.total_duration_s = t;
    return inv;
}

bool same_inventory(const SegmentInventory& a, const SegmentInventory& b) {
    auto same_tier = [](const std::vector<PhoneInterval>& x, const std::vector<PhoneInterval>& y) {
        if (x.size() != y.size()) return false;
        for (size_t i = 0; i < x.size(); ++i) {
            if (x[i].label != y[i].label) return false;
            if (x[i].start_s != y[i].start_s) return false;
            if (x[i].end_s != y[i].end_s) return false;
        }
        return true;
    };
    return same_tier(a.phones, b.phones) && same_tier(a.words, b.words) &&
           a.total_duration_s == b.total_duration_s;
}

std::string to_utf16(std::string_view utf8, bool big_endian) {
    // Fixture content is ASCII, so code units map 1:1.
    std::string out;
    out.push_back(static_cast<char>(big_endian ? 0xFE : 0xFF));
    out.push_back(static_cast<char>(big_endian ? 0xFF : 0xFE));
    for (char c : utf8) {
        if (big_endian) {
            out.push_back('\0');
            out.push_back(c);
        } else {
            out.push_back(c);
            out.push_back('\0');
        }
    }
    return out;
}

}  // namespace

TEST_CASE("minimal long form parses") {
    SegmentInventory inv = parse_textgrid_text(kMinimalLong);
    REQUIRE(inv.phones.size() == 1);
    CHECK(inv.phones[0].label == "AH0");
    CHECK(inv.phones[0].start_s == 0.0);
    CHECK(inv.phones[0].end_s == 0.5);
    CHECK(inv.total_duration_s == 0.5);
    CHECK(inv.words.empty());
}

TEST_CASE("short form parses identically to its long form") {
    SegmentInventory inv = parse_textgrid_text(short_form_two_tier());
    REQUIRE(inv.phones.size() == 3);
    REQUIRE(inv.words.size() == 2);
    CHECK(inv.phones[1].label == "AE1");
    CHECK(inv.words[1].is_silence());
    SegmentInventory again = parse_textgrid_text(serialize_textgrid(inv));
    CHECK(same_inventory(inv, again));
}

TEST_CASE("utf-16 re-encoding yields the identical inventory") {
    SegmentInventory ref = parse_textgrid_text(kMinimalLong);
    for (bool be : {false, true}) {
        SegmentInventory inv = parse_textgrid_text(to_utf16(kMinimalLong, be));
        CHECK(same_inventory(ref, inv));
    }
}

TEST_CASE("100-interval fixture round-trips exactly") {
    SegmentInventory inv = make_inventory(100);
    SegmentInventory back = parse_textgrid_text(serialize_textgrid(inv));
    CHECK(same_inventory(inv, back));
    SegmentInventory back2 = parse_textgrid_text(serialize_textgrid(back));
    CHECK(same_inventory(back, back2));
}

TEST_CASE("parse_textgrid reads from disk") {
    auto path = (std::filesystem::temp_directory_path() / "dfv_tg_test.TextGrid").string();
    write_file_atomic(path, serialize_textgrid(make_inventory(10)));
    SegmentInventory inv = parse_textgrid(path);
    CHECK(inv.phones.size() == 10);
    std::remove(path.c_str());
}

TEST_CASE("corrupted mutants are rejected with line info") {
    std::string good = serialize_textgrid(make_inventory(20));

    SUBCASE("truncation") {
        std::string cut = good.substr(0, good.size() / 2);
        CHECK_THROWS_AS(parse_textgrid_text(cut), ParseError);
    }
    SUBCASE("inflated interval count") {
        auto pos = good.find("intervals: size = 20");
        REQUIRE(pos != std::string::npos);
        std::string bad = good;
        bad.replace(pos, 20, "intervals: size = 22");
        CHECK_THROWS_AS(parse_textgrid_text(bad), ParseError);
    }
    SUBCASE("xmin >= xmax") {
        std::string bad = kMinimalLong;
        auto pos = bad.find("xmax = 0.5\n            text");
        REQUIRE(pos != std::string::npos);
        bad.replace(pos, 10, "xmax = 0.0");
        try {
            parse_textgrid_text(bad);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(std::string(e.what()).find("line") != std::string::npos);
        }
    }
    SUBCASE("wrong object class") {
        std::string bad = good;
        auto pos = bad.find("\"TextGrid\"");
        bad.replace(pos, 10, "\"Pitch\"");
        CHECK_THROWS_AS(parse_textgrid_text(bad), ParseError);
    }
}

TEST_CASE("point tiers are skipped with a warning") {
    std::string text = R"(File type = "ooTextFile"
Object class = "TextGrid"

xmin = 0
xmax = 1
tiers? <exists>
size = 2
item []:
    item [1]:
        class = "TextTier"
        name = "points"
        xmin = 0
        xmax = 1
        points: size = 2
        points [1]:
            number = 0.25
            mark = "a"
        points [2]:
            number = 0.5
            mark = "b"
    item [2]:
        class = "IntervalTier"
        name = "phones"
        xmin = 0
        xmax = 1
        intervals: size = 1
        intervals [1]:
            xmin = 0
            xmax = 1
            text = "IY1"
)";
    SegmentInventory inv = parse_textgrid_text(text);
    REQUIRE(inv.phones.size() == 1);
    CHECK(inv.phones[0].label == "IY1");
    REQUIRE(!inv.warnings.empty());
}

TEST_CASE("strip_stress removes trailing digits only") {
    CHECK(strip_stress("AH0") == "AH");
    CHECK(strip_stress("IY1") == "IY");
    CHECK(strip_stress("UH2") == "UH");
    CHECK(strip_stress("T") == "T");
    CHECK(strip_stress("") == "");
}

TEST_CASE("vocalic segments: direct membership") {
    SegmentInventory inv;
    inv.phones = {{"AH0", 0.0, 0.1}, {"T", 0.1, 0.2}, {"IY1", 0.2, 0.3}};
    inv.total_duration_s = 0.3;
    auto segs = vocalic_segments(inv, {"AH", "IY"});
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].label == "AH0");
    CHECK(segs[1].label == "IY1");

    CHECK(vocalic_segments(inv, {"UW"}).empty());
    CHECK_THROWS_AS(vocalic_segments(inv, {}), ContractError);
}

TEST_CASE("40-phone fixture matches a brute-force label scan") {
    SegmentInventory inv = make_inventory(40);
    auto vowels = default_vowel_set();
    auto segs = vocalic_segments(inv, vowels);

    size_t expect = 0;
    size_t cursor = 0;
    for (const PhoneInterval& p : inv.phones) {
        if (p.is_silence()) continue;
        if (vowels.count(strip_stress(p.label))) {
            ++expect;
            // subsequence check: each hit appears later in inv.phones order
            while (cursor < segs.size() && segs[cursor].start_s < p.start_s) ++cursor;
            REQUIRE(cursor < segs.size());
            CHECK(segs[cursor].label == p.label);
        }
    }
    CHECK(segs.size() == expect);
    CHECK(expect > 0);
}

TEST_CASE("arpabet-to-ipa table") {
    const auto& map = default_arpabet_ipa();
    CHECK(to_ipa("UH", map) == "ʊ");  // ʊ
    CHECK(to_ipa("IY", map) == "i");
    CHECK(to_ipa("AA", map) == "ɑ");  // ɑ
    CHECK(to_ipa("ZZZ", map) == "ZZZ");    // unknown labels pass through
    CHECK(default_vowel_set().count("UH") == 1);
    CHECK(map.size() == 15);
}
