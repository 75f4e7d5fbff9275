#include "dfv/textgrid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include "dfv/errors.hpp"
#include "dfv/util.hpp"

namespace dfv {

namespace {

// Decodes UTF-16 (either endianness, BOM required) to UTF-8; passes UTF-8
// through (with BOM stripped).
std::string decode_text(std::string_view raw) {
    if (raw.size() >= 3 && static_cast<unsigned char>(raw[0]) == 0xef &&
        static_cast<unsigned char>(raw[1]) == 0xbb && static_cast<unsigned char>(raw[2]) == 0xbf)
        return std::string(raw.substr(3));
    if (raw.size() < 2) return std::string(raw);

    unsigned char b0 = static_cast<unsigned char>(raw[0]);
    unsigned char b1 = static_cast<unsigned char>(raw[1]);
    bool le = (b0 == 0xff && b1 == 0xfe);
    bool be = (b0 == 0xfe && b1 == 0xff);
    if (!le && !be) return std::string(raw);

    if (raw.size() % 2 != 0)
        throw FormatError("UTF-16 content has odd byte count");

    std::string out;
    out.reserve(raw.size() / 2);
    auto unit = [&](size_t i) -> uint32_t {
        unsigned char a = static_cast<unsigned char>(raw[i]);
        unsigned char b = static_cast<unsigned char>(raw[i + 1]);
        return le ? static_cast<uint32_t>(a | (b << 8)) : static_cast<uint32_t>((a << 8) | b);
    };
    auto append_utf8 = [&](uint32_t cp) {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xc0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3f));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xe0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
            out += static_cast<char>(0x80 | (cp & 0x3f));
        } else {
            out += static_cast<char>(0xf0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
            out += static_cast<char>(0x80 | (cp & 0x3f));
        }
    };
    for (size_t i = 2; i < raw.size(); i += 2) {
        uint32_t u = unit(i);
        if (u >= 0xd800 && u < 0xdc00) {
            if (i + 2 >= raw.size()) throw FormatError("UTF-16 content ends mid surrogate pair");
            uint32_t lo = unit(i + 2);
            if (lo < 0xdc00 || lo >= 0xe000)
                throw FormatError("UTF-16 content has unpaired surrogate");
            append_utf8(0x10000 + ((u - 0xd800) << 10) + (lo - 0xdc00));
            i += 2;
        } else {
            append_utf8(u);
        }
    }
    return out;
}

// Token scanner shared by the long and short TextGrid forms. Keys,
// '=' signs, bracket indices and ':' are decoration in the long form; the
// value sequence underneath is identical in both forms, so the parser only
// ever asks for the next number, string or <flag>.
class TgScanner {
public:
    explicit TgScanner(std::string_view text) : text_(text) {}

    int line() const { return line_; }

    bool at_end() {
        size_t save = pos_;
        int save_line = line_;
        bool end = !skip_to_token();
        pos_ = save;
        line_ = save_line;
        return end;
    }

    double next_number(const char* what) {
        if (!skip_to_token()) throw ParseError(std::string("unexpected end of file: expected ") + what, line_);
        char c = text_[pos_];
        if (c == '"')
            throw ParseError(std::string("expected ") + what + ", found a string", line_);
        if (c == '<')
            throw ParseError(std::string("expected ") + what + ", found a flag", line_);
        const char* start = text_.data() + pos_;
        char* endp = nullptr;
        double v = std::strtod(start, &endp);
        if (endp == start)
            throw ParseError(std::string("expected ") + what, line_);
        pos_ += static_cast<size_t>(endp - start);
        return v;
    }

    std::string next_string(const char* what) {
        if (!skip_to_token()) throw ParseError(std::string("unexpected end of file: expected ") + what, line_);
        if (text_[pos_] != '"')
            throw ParseError(std::string("expected ") + what + " (quoted string)", line_);
        ++pos_;
        std::string out;
        while (true) {
            if (pos_ >= text_.size())
                throw ParseError(std::string("unterminated string for ") + what, line_);
            char c = text_[pos_++];
            if (c == '"') {
                if (pos_ < text_.size() && text_[pos_] == '"') {
                    out += '"';
                    ++pos_;
                } else {
                    break;
                }
            } else {
                if (c == '\n') ++line_;
                out += c;
            }
        }
        return out;
    }

    // Reads "<exists>"-style flags; returns the word inside the brackets.
    std::string next_flag(const char* what) {
        if (!skip_to_token()) throw ParseError(std::string("unexpected end of file: expected ") + what, line_);
        if (text_[pos_] != '<')
            throw ParseError(std::string("expected ") + what + " flag", line_);
        size_t close = text_.find('>', pos_);
        if (close == std::string_view::npos)
            throw ParseError("unterminated flag", line_);
        std::string out(text_.substr(pos_ + 1, close - pos_ - 1));
        pos_ = close + 1;
        return out;
    }

    bool peek_is_flag() {
        size_t save = pos_;
        int save_line = line_;
        bool is = skip_to_token() && text_[pos_] == '<';
        pos_ = save;
        line_ = save_line;
        return is;
    }

private:
    // Advances to the next token start: a digit/sign starting a number, a
    // quote, or '<'. Everything alphabetic, '=', ':', '?', '!' and bracketed
    // indices is decoration.
    bool skip_to_token() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '\n') {
                ++line_;
                ++pos_;
            } else if (c == '[') {
                size_t close = text_.find(']', pos_);
                if (close == std::string_view::npos)
                    throw ParseError("unterminated '['", line_);
                for (size_t i = pos_; i < close; ++i)
                    if (text_[i] == '\n') ++line_;
                pos_ = close + 1;
            } else if (c == '"' || c == '<') {
                return true;
            } else if ((c >= '0' && c <= '9') || c == '-' || c == '+' || c == '.') {
                return true;
            } else {
                ++pos_;
            }
        }
        return false;
    }

    std::string_view text_;
    size_t pos_ = 0;
    int line_ = 1;
};

void check_tier_intervals(std::vector<PhoneInterval>& tier, double total, int line) {
    for (size_t i = 0; i < tier.size(); ++i) {
        if (tier[i].start_s < -1e-9)
            throw ParseError("interval starts before time 0", line);
        if (tier[i].end_s > total + 1e-6)
            throw ParseError("interval extends past the TextGrid end", line);
        tier[i].start_s = std::max(tier[i].start_s, 0.0);
        tier[i].end_s = std::min(tier[i].end_s, total);
        if (i > 0 && tier[i].start_s < tier[i - 1].end_s - 1e-9)
            throw ParseError("overlapping or unsorted intervals", line);
    }
}

}  // namespace

SegmentInventory parse_textgrid(const std::string& path) {
    try {
        return parse_textgrid_text(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

SegmentInventory parse_textgrid_text(std::string_view raw) {
    std::string text = decode_text(raw);
    TgScanner sc(text);

    std::string file_type = sc.next_string("File type");
    if (file_type != "ooTextFile")
        throw ParseError("not an ooTextFile (File type = \"" + file_type + "\")", sc.line());
    std::string object_class = sc.next_string("Object class");
    if (object_class != "TextGrid")
        throw ParseError("not a TextGrid (Object class = \"" + object_class + "\")", sc.line());

    double xmin = sc.next_number("xmin");
    double xmax = sc.next_number("xmax");
    if (xmin >= xmax) throw ParseError("TextGrid xmin >= xmax", sc.line());
    if (xmin < -1e-9) throw ParseError("TextGrid xmin is negative", sc.line());

    SegmentInventory inv;
    inv.total_duration_s = xmax;

    if (sc.peek_is_flag()) {
        std::string flag = sc.next_flag("tiers?");
        if (flag == "absent") return inv;
        if (flag != "exists")
            throw ParseError("unexpected flag <" + flag + ">", sc.line());
    }

    int n_tiers = static_cast<int>(sc.next_number("tier count"));
    if (n_tiers < 0) throw ParseError("negative tier count", sc.line());

    for (int t = 0; t < n_tiers; ++t) {
        std::string tier_class = sc.next_string("tier class");
        std::string name = sc.next_string("tier name");
        sc.next_number("tier xmin");
        sc.next_number("tier xmax");

        if (tier_class == "TextTier") {
            // point tier: the pipeline only consumes interval tiers
            inv.warnings.push_back("skipping point tier \"" + name + "\"");
            int n = static_cast<int>(sc.next_number("point count"));
            for (int i = 0; i < n; ++i) {
                sc.next_number("point time");
                sc.next_string("point mark");
            }
            continue;
        }
        if (tier_class != "IntervalTier")
            throw ParseError("unknown tier class \"" + tier_class + "\"", sc.line());

        int n = static_cast<int>(sc.next_number("interval count"));
        if (n < 0) throw ParseError("negative interval count", sc.line());
        std::vector<PhoneInterval> intervals;
        intervals.reserve(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) {
            PhoneInterval iv;
            iv.start_s = sc.next_number("interval xmin");
            iv.end_s = sc.next_number("interval xmax");
            if (iv.start_s >= iv.end_s)
                throw ParseError("interval xmin >= xmax", sc.line());
            iv.label = trim(sc.next_string("interval text"));
            intervals.push_back(std::move(iv));
        }
        check_tier_intervals(intervals, inv.total_duration_s, sc.line());

        std::string lname = to_lower(name);
        if (lname == "phones") {
            if (!inv.phones.empty())
                inv.warnings.push_back("duplicate phones tier \"" + name + "\" ignored");
            else
                inv.phones = std::move(intervals);
        } else if (lname == "words") {
            if (!inv.words.empty())
                inv.warnings.push_back("duplicate words tier \"" + name + "\" ignored");
            else
                inv.words = std::move(intervals);
        } else {
            inv.warnings.push_back("ignoring interval tier \"" + name + "\"");
        }
    }
    return inv;
}

namespace {

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        out += c;
        if (c == '"') out += '"';
    }
    out += '"';
    return out;
}

void serialize_tier(std::ostringstream& os, const char* name,
                    const std::vector<PhoneInterval>& tier, double total, int index) {
    os << "    item [" << index << "]:\n";
    os << "        class = \"IntervalTier\"\n";
    os << "        name = \"" << name << "\"\n";
    os << "        xmin = 0\n";
    os << "        xmax = " << format_double(total) << "\n";
    os << "        intervals: size = " << tier.size() << "\n";
    for (size_t i = 0; i < tier.size(); ++i) {
        os << "        intervals [" << (i + 1) << "]:\n";
        os << "            xmin = " << format_double(tier[i].start_s) << "\n";
        os << "            xmax = " << format_double(tier[i].end_s) << "\n";
        os << "            text = " << quote(tier[i].label) << "\n";
    }
}

}  // namespace

std::string serialize_textgrid(const SegmentInventory& inv) {
    std::ostringstream os;
    os << "File type = \"ooTextFile\"\n";
    os << "Object class = \"TextGrid\"\n\n";
    os << "xmin = 0\n";
    os << "xmax = " << format_double(inv.total_duration_s) << "\n";
    os << "tiers? <exists>\n";
    os << "size = 2\n";
    os << "item []:\n";
    serialize_tier(os, "words", inv.words, inv.total_duration_s, 1);
    serialize_tier(os, "phones", inv.phones, inv.total_duration_s, 2);
    return os.str();
}

std::string strip_stress(std::string_view label) {
    size_t e = label.size();
    while (e > 0 && label[e - 1] >= '0' && label[e - 1] <= '9') --e;
    return std::string(label.substr(0, e));
}

std::vector<PhoneInterval> vocalic_segments(const SegmentInventory& inv,
                                            const std::set<std::string>& vowel_set) {
    if (vowel_set.empty()) throw ContractError("vocalic_segments: vowel_set is empty");
    std::vector<PhoneInterval> out;
    for (const auto& p : inv.phones) {
        if (p.is_silence()) continue;
        if (vowel_set.count(strip_stress(p.label))) out.push_back(p);
    }
    return out;
}

const std::map<std::string, std::string>& default_arpabet_ipa() {
    static const std::map<std::string, std::string> table = {
        {"AA", "ɑ"},  {"AE", "æ"},  {"AH", "ʌ"},  {"AO", "ɔ"},  {"AW", "aʊ"},
        {"AY", "aɪ"}, {"EH", "ɛ"},  {"ER", "ɝ"},  {"EY", "eɪ"}, {"IH", "ɪ"},
        {"IY", "i"},  {"OW", "oʊ"}, {"OY", "ɔɪ"}, {"UH", "ʊ"},  {"UW", "u"},
    };
    return table;
}

std::set<std::string> default_vowel_set() {
    std::set<std::string> s;
    for (const auto& [arpa, ipa] : default_arpabet_ipa()) s.insert(arpa);
    return s;
}

std::string to_ipa(const std::string& stripped_label,
                   const std::map<std::string, std::string>& ipa_map) {
    auto it = ipa_map.find(stripped_label);
    return it != ipa_map.end() ? it->second : stripped_label;
}

}  // namespace dfv
