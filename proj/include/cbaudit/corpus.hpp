#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cbaudit/common.hpp"

namespace cbaudit {

// ---------------------------------------------------------------------------
// Text normalization
// ---------------------------------------------------------------------------

/// Lowercases, removes every Unicode punctuation character (categories
/// Pc Pd Pe Pf Pi Po Ps), collapses whitespace runs to one ASCII space and
/// trims. Invalid UTF-8 sequences decode to U+FFFD.
std::string normalize(std::string_view raw_text);

bool is_punctuation(char32_t cp) noexcept;
bool is_white_space(char32_t cp) noexcept;
char32_t to_lower(char32_t cp) noexcept;

std::u32string decode_utf8(std::string_view text);
void append_utf8(std::string& out, char32_t cp);

// ---------------------------------------------------------------------------
// Corpus types
// ---------------------------------------------------------------------------

struct Utterance {
    std::string id;
    std::string raw_text;
    std::string norm_text;
    std::string source;
    std::int64_t created_utc = 0;  // 0 when unknown

    bool operator==(const Utterance&) const = default;
};

struct CommunityCorpus {
    std::string community_id;
    std::vector<Utterance> utterances;

    std::size_t size() const noexcept { return utterances.size(); }
    bool empty() const noexcept { return utterances.empty(); }
};

struct ParseStats {
    std::size_t lines = 0;
    std::size_t kept = 0;
    std::size_t malformed = 0;
    std::size_t deleted = 0;  // "[deleted]" / "[removed]" sentinels
    std::size_t empty = 0;    // empty after normalization
    std::size_t duplicate_ids = 0;
};

struct ParsedCorpus {
    CommunityCorpus corpus;
    ParseStats stats;
};

/// Reads newline-delimited JSON comment records ("body" required; "subreddit",
/// "created_utc", "id" optional). Records without an id get "<file_label>:<lineno>".
/// Malformed records are skipped and counted; a stream failure throws FatalInputError.
ParsedCorpus parse_corpus(std::istream& in, std::string community_id,
                          std::string_view file_label = "stdin");

/// Concatenates several files into one corpus, in the order given.
ParsedCorpus load_corpus_files(std::span<const std::filesystem::path> paths,
                               std::string community_id);

// ---------------------------------------------------------------------------
// Month split
// ---------------------------------------------------------------------------

struct YearMonth {
    int year = 0;
    int month = 0;  // 1..12

    auto operator<=>(const YearMonth&) const = default;
};

/// UTC calendar month of a unix timestamp.
YearMonth month_of(std::int64_t utc_seconds) noexcept;

/// Parses "2018-03" or an inclusive range "2018-01..2018-11".
std::set<YearMonth> parse_months(std::string_view spec);

struct MonthSplit {
    CommunityCorpus train;
    CommunityCorpus val;
    std::size_t dropped_unknown = 0;  // created_utc == 0
    std::size_t dropped_outside = 0;  // month in neither set
};

/// Throws std::invalid_argument when the month sets overlap.
MonthSplit split_by_month(const CommunityCorpus& corpus, const std::set<YearMonth>& train_months,
                          const std::set<YearMonth>& val_months);

// ---------------------------------------------------------------------------
// Training-set construction
// ---------------------------------------------------------------------------

struct Negative {
    Utterance utterance;
    std::string origin_community;

    bool operator==(const Negative&) const = default;
};

struct TrainingSet {
    std::string community_id;
    std::vector<Utterance> positives;
    std::vector<Negative> negatives;
    std::uint64_t seed = 0;

    bool operator==(const TrainingSet&) const = default;
};

class InsufficientNegatives : public Error {
public:
    InsufficientNegatives(std::size_t needed, std::size_t available);
    std::size_t shortfall() const noexcept { return shortfall_; }

private:
    std::size_t shortfall_;
};

/// Per-community negative quotas: equal shares of `needed`, water-filled so a
/// community with too few utterances gives all it has and the remainder is
/// spread over the others. Shares differ by at most one among communities that
/// were not exhausted; the extra units go to the earliest communities.
std::vector<std::size_t> negative_quotas(std::size_t needed, std::span<const std::size_t> capacities);

/// All target utterances become positives; an equal number of negatives is
/// sampled without replacement from `others` according to negative_quotas.
TrainingSet build_training_set(const CommunityCorpus& target, std::span<const CommunityCorpus> others,
                               std::uint64_t seed);

}  // namespace cbaudit
