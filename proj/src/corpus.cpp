#include "cbaudit/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <istream>
#include <numeric>
#include <unordered_set>

#include <json.hpp>

namespace cbaudit {

namespace {

struct CodeRange {
    char32_t first;
    char32_t last;
};

struct CaseMapping {
    char32_t from;
    char32_t to;
};

#include "unicode_tables.inc"

bool in_ranges(std::span<const CodeRange> table, char32_t cp) noexcept {
    auto it = std::upper_bound(table.begin(), table.end(), cp,
                               [](char32_t v, const CodeRange& r) { return v < r.first; });
    if (it == table.begin()) return false;
    --it;
    return cp <= it->last;
}

constexpr char32_t kReplacement = 0xFFFD;

}  // namespace

bool is_punctuation(char32_t cp) noexcept { return in_ranges(kPunctuation, cp); }

bool is_white_space(char32_t cp) noexcept { return in_ranges(kWhiteSpace, cp); }

char32_t to_lower(char32_t cp) noexcept {
    if (cp < 0x80) return (cp >= 'A' && cp <= 'Z') ? cp + 32 : cp;
    auto it = std::lower_bound(std::begin(kLowercase), std::end(kLowercase), cp,
                               [](const CaseMapping& m, char32_t v) { return m.from < v; });
    if (it != std::end(kLowercase) && it->from == cp) return it->to;
    return cp;
}

std::u32string decode_utf8(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    const auto* p = reinterpret_cast<const unsigned char*>(text.data());
    const auto* end = p + text.size();
    while (p < end) {
        unsigned char b = *p;
        if (b < 0x80) {
            out.push_back(b);
            ++p;
            continue;
        }
        int len;
        char32_t cp;
        char32_t min;
        if ((b & 0xE0) == 0xC0) {
            len = 2, cp = b & 0x1F, min = 0x80;
        } else if ((b & 0xF0) == 0xE0) {
            len = 3, cp = b & 0x0F, min = 0x800;
        } else if ((b & 0xF8) == 0xF0) {
            len = 4, cp = b & 0x07, min = 0x10000;
        } else {
            out.push_back(kReplacement);
            ++p;
            continue;
        }
        int i = 1;
        for (; i < len && p + i < end && (p[i] & 0xC0) == 0x80; ++i) cp = (cp << 6) | (p[i] & 0x3F);
        if (i < len || cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
            out.push_back(kReplacement);
            p += i;
            continue;
        }
        out.push_back(cp);
        p += len;
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string normalize(std::string_view raw_text) {
    std::string out;
    out.reserve(raw_text.size());
    bool pending_space = false;
    for (char32_t cp : decode_utf8(raw_text)) {
        if (is_white_space(cp)) {
            pending_space = !out.empty();
            continue;
        }
        if (is_punctuation(cp)) continue;
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        append_utf8(out, to_lower(cp));
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

bool is_deletion_sentinel(std::string_view body) { return body == "[deleted]" || body == "[removed]"; }

// Accepts integers, integral floats and digit strings ("1514764800").
bool read_timestamp(const nlohmann::json& v, std::int64_t& out) {
    if (v.is_null()) return true;
    if (v.is_number_integer()) {
        out = v.get<std::int64_t>();
        return true;
    }
    if (v.is_number_float()) {
        double d = v.get<double>();
        if (d != static_cast<double>(static_cast<std::int64_t>(d))) return false;
        out = static_cast<std::int64_t>(d);
        return true;
    }
    if (v.is_string()) {
        const auto& s = v.get_ref<const std::string&>();
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc() && ptr == s.data() + s.size();
    }
    return false;
}

void parse_into(std::istream& in, std::string_view file_label, ParsedCorpus& result,
                std::unordered_set<std::string>& seen_ids) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        ++result.stats.lines;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) {
            --result.stats.lines;
            continue;
        }
        auto rec = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (!rec.is_object()) {
            ++result.stats.malformed;
            continue;
        }
        auto body = rec.find("body");
        if (body == rec.end() || !body->is_string()) {
            ++result.stats.malformed;
            continue;
        }
        Utterance u;
        u.raw_text = body->get<std::string>();
        if (auto it = rec.find("subreddit"); it != rec.end() && !it->is_null()) {
            if (!it->is_string()) {
                ++result.stats.malformed;
                continue;
            }
            u.source = it->get<std::string>();
        }
        if (auto it = rec.find("created_utc"); it != rec.end() && !read_timestamp(*it, u.created_utc)) {
            ++result.stats.malformed;
            continue;
        }
        if (auto it = rec.find("id"); it != rec.end() && !it->is_null()) {
            if (!it->is_string()) {
                ++result.stats.malformed;
                continue;
            }
            u.id = it->get<std::string>();
        } else {
            u.id = std::string(file_label) + ":" + std::to_string(lineno);
        }
        if (is_deletion_sentinel(u.raw_text)) {
            ++result.stats.deleted;
            continue;
        }
        u.norm_text = normalize(u.raw_text);
        if (u.norm_text.empty()) {
            ++result.stats.empty;
            continue;
        }
        if (!seen_ids.insert(u.id).second) {
            ++result.stats.duplicate_ids;
            continue;
        }
        result.corpus.utterances.push_back(std::move(u));
        ++result.stats.kept;
    }
    if (in.bad()) throw FatalInputError("I/O failure while reading corpus " + std::string(file_label));
}

}  // namespace

ParsedCorpus parse_corpus(std::istream& in, std::string community_id, std::string_view file_label) {
    if (community_id.empty()) throw std::invalid_argument("community_id must be nonempty");
    ParsedCorpus result;
    result.corpus.community_id = std::move(community_id);
    std::unordered_set<std::string> seen;
    parse_into(in, file_label, result, seen);
    return result;
}

ParsedCorpus load_corpus_files(std::span<const std::filesystem::path> paths, std::string community_id) {
    if (community_id.empty()) throw std::invalid_argument("community_id must be nonempty");
    ParsedCorpus result;
    result.corpus.community_id = std::move(community_id);
    std::unordered_set<std::string> seen;
    for (const auto& path : paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw FatalInputError("cannot open corpus file " + path.string());
        parse_into(in, path.filename().string(), result, seen);
    }
    return result;
}

// ---------------------------------------------------------------------------

YearMonth month_of(std::int64_t utc_seconds) noexcept {
    using namespace std::chrono;
    const auto day = floor<days>(sys_seconds{seconds{utc_seconds}});
    const year_month_day ymd{day};
    return {static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month()))};
}

namespace {

YearMonth parse_one_month(std::string_view s) {
    auto fail = [&] { return std::invalid_argument("bad month '" + std::string(s) + "', expected YYYY-MM"); };
    auto dash = s.find('-');
    if (dash == std::string_view::npos) throw fail();
    YearMonth ym;
    auto [p1, e1] = std::from_chars(s.data(), s.data() + dash, ym.year);
    auto [p2, e2] = std::from_chars(s.data() + dash + 1, s.data() + s.size(), ym.month);
    if (e1 != std::errc() || e2 != std::errc() || p1 != s.data() + dash || p2 != s.data() + s.size() ||
        ym.month < 1 || ym.month > 12)
        throw fail();
    return ym;
}

}  // namespace

std::set<YearMonth> parse_months(std::string_view spec) {
    std::set<YearMonth> out;
    auto sep = spec.find("..");
    if (sep == std::string_view::npos) {
        out.insert(parse_one_month(spec));
        return out;
    }
    YearMonth first = parse_one_month(spec.substr(0, sep));
    YearMonth last = parse_one_month(spec.substr(sep + 2));
    if (last < first) throw std::invalid_argument("empty month range '" + std::string(spec) + "'");
    for (YearMonth ym = first; ym <= last;) {
        out.insert(ym);
        if (++ym.month > 12) ym.month = 1, ++ym.year;
    }
    return out;
}

MonthSplit split_by_month(const CommunityCorpus& corpus, const std::set<YearMonth>& train_months,
                          const std::set<YearMonth>& val_months) {
    for (const auto& ym : train_months)
        if (val_months.count(ym))
            throw std::invalid_argument("train and validation month sets overlap at " + std::to_string(ym.year) +
                                        "-" + std::to_string(ym.month));
    MonthSplit split;
    split.train.community_id = corpus.community_id;
    split.val.community_id = corpus.community_id;
    for (const auto& u : corpus.utterances) {
        if (u.created_utc == 0) {
            ++split.dropped_unknown;
            continue;
        }
        const YearMonth ym = month_of(u.created_utc);
        if (train_months.count(ym))
            split.train.utterances.push_back(u);
        else if (val_months.count(ym))
            split.val.utterances.push_back(u);
        else
            ++split.dropped_outside;
    }
    return split;
}

// ---------------------------------------------------------------------------

InsufficientNegatives::InsufficientNegatives(std::size_t needed, std::size_t available)
    : Error("insufficient negatives: need " + std::to_string(needed) + ", other communities hold " +
            std::to_string(available) + " (shortfall " + std::to_string(needed - available) + ")"),
      shortfall_(needed - available) {}

std::vector<std::size_t> negative_quotas(std::size_t needed, std::span<const std::size_t> capacities) {
    const std::size_t available = std::accumulate(capacities.begin(), capacities.end(), std::size_t{0});
    if (available < needed) throw InsufficientNegatives(needed, available);

    std::vector<std::size_t> quota(capacities.size(), 0);
    std::vector<std::size_t> active(capacities.size());
    std::iota(active.begin(), active.end(), std::size_t{0});
    std::size_t remaining = needed;
    while (remaining > 0) {
        const std::size_t share = remaining / active.size();
        // Saturate every community that cannot meet the equal share, then retry.
        std::vector<std::size_t> still_active;
        for (std::size_t i : active) {
            if (capacities[i] <= share) {
                quota[i] = capacities[i];
                remaining -= capacities[i];
            } else {
                still_active.push_back(i);
            }
        }
        if (still_active.size() == active.size()) {
            std::size_t extra = remaining % active.size();
            for (std::size_t i : active) {
                quota[i] = share + (extra > 0 ? 1 : 0);
                if (extra > 0) --extra;
            }
            break;
        }
        active = std::move(still_active);
    }
    return quota;
}

TrainingSet build_training_set(const CommunityCorpus& target, std::span<const CommunityCorpus> others,
                               std::uint64_t seed) {
    if (target.empty()) throw std::invalid_argument("target community '" + target.community_id + "' is empty");
    if (others.empty()) throw std::invalid_argument("at least one other community is required");
    for (const auto& o : others)
        if (o.community_id == target.community_id)
            throw std::invalid_argument("other communities must differ from the target '" + target.community_id + "'");

    std::vector<std::size_t> capacities;
    capacities.reserve(others.size());
    for (const auto& o : others) capacities.push_back(o.size());
    const auto quota = negative_quotas(target.size(), capacities);

    TrainingSet ts;
    ts.community_id = target.community_id;
    ts.seed = seed;
    ts.positives = target.utterances;
    ts.negatives.reserve(target.size());

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> idx;
    for (std::size_t c = 0; c < others.size(); ++c) {
        const auto& pool = others[c].utterances;
        idx.resize(pool.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        // Partial Fisher-Yates: the first quota[c] slots become the sample.
        for (std::size_t k = 0; k < quota[c]; ++k) {
            std::size_t j = k + static_cast<std::size_t>(uniform_below(rng, pool.size() - k));
            std::swap(idx[k], idx[j]);
            ts.negatives.push_back({pool[idx[k]], others[c].community_id});
        }
    }
    return ts;
}

}  // namespace cbaudit
