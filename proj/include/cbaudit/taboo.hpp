#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cbaudit/common.hpp"

namespace cbaudit {

struct TabooInstance {
    std::string id;
    std::string norm_text;
    std::string label;
    std::optional<double> taboo_score;
    std::optional<bool> taboo_decision;

    /// Annotated with a taboo label, or declared taboo by a classifier.
    bool is_taboo() const noexcept { return !label.empty() || taboo_decision.value_or(false); }
};

struct TabooDataset {
    std::string name;
    std::string label;
    std::vector<TabooInstance> instances;
    std::size_t total_rows = 0;  // rows read before label filtering
};

struct DatasetSchema {
    std::string text_column;
    std::string label_column;
    std::optional<std::string> id_column;  // ids default to "<name>:<row>"
};

class LabelNotFound : public Error {
public:
    LabelNotFound(std::string_view wanted, const std::vector<std::string>& observed);
    const std::vector<std::string>& observed() const noexcept { return observed_; }

private:
    std::vector<std::string> observed_;
};

/// Splits one delimited record honouring double-quoted fields when the
/// delimiter is a comma. Reads further lines for quoted fields spanning lines.
/// Returns false at end of input.
bool read_delimited_record(std::istream& in, char delim, std::vector<std::string>& fields);

/// Keeps the rows whose trimmed label cell equals keep_label exactly and
/// normalizes their text. The delimiter (tab or comma) is detected from the
/// header row. A missing declared column throws FatalInputError; no matching
/// rows throws LabelNotFound.
TabooDataset parse_taboo_dataset(std::istream& in, std::string name, const DatasetSchema& schema,
                                 std::string_view keep_label);
TabooDataset load_taboo_dataset(const std::filesystem::path& path, std::string name, const DatasetSchema& schema,
                                std::string_view keep_label);

struct TabooScoreImport {
    TabooDataset dataset;
    std::size_t attached = 0;
    std::vector<std::string> missing_ids;  // dataset ids without a score
    std::size_t unknown_ids = 0;           // scored ids not in the dataset
    std::size_t rejected = 0;              // out of range or unparseable
    std::size_t duplicates = 0;
};

/// Attaches scores from an `id,classifier_tag,score` file and sets
/// taboo_decision = score >= decision_threshold. Texts and labels are never
/// touched. When classifier_tag is set, other tags in the file are ignored.
TabooScoreImport import_taboo_scores(TabooDataset dataset, std::istream& scores, double decision_threshold,
                                     std::optional<std::string_view> classifier_tag = std::nullopt);

// ---------------------------------------------------------------------------
// Toxicity API client
// ---------------------------------------------------------------------------

inline constexpr std::string_view kDefaultToxicityEndpoint =
    "https://commentanalyzer.googleapis.com/v1alpha1/comments:analyze";

struct ToxicityClientConfig {
    std::string endpoint{kDefaultToxicityEndpoint};
    std::string api_key;
    double requests_per_second = 1.0;
    int max_retries = 3;
    std::chrono::milliseconds timeout{10000};
    std::chrono::milliseconds initial_backoff{1000};
    double backoff_multiplier = 2.0;

    void validate() const;
};

class AuthFailure : public Error {
public:
    using Error::Error;
};

struct ToxicityResult {
    std::vector<std::pair<std::string, double>> scores;       // input order
    std::vector<std::pair<std::string, std::string>> errors;  // id, reason
    std::size_t retries = 0;
};

/// Paces calls so that consecutive acquisitions are at least 1/rate apart.
class RateLimiter {
public:
    using Clock = std::chrono::steady_clock;

    explicit RateLimiter(double per_second);
    void acquire();

private:
    Clock::duration interval_;
    std::optional<Clock::time_point> last_;
};

/// Request body for one text.
std::string toxicity_request_body(std::string_view text);

/// Reads attributeScores.TOXICITY.summaryScore.value; nullopt when absent,
/// unparseable or outside [0,1].
std::optional<double> parse_toxicity_response(std::string_view body);

/// One POST per text, paced by the rate cap. HTTP 429 and 5xx responses (and
/// transport errors) are retried with exponential backoff up to max_retries;
/// 401/403 throws AuthFailure. Ids that still fail are listed in `errors`.
ToxicityResult fetch_toxicity(const ToxicityClientConfig& cfg,
                              std::span<const std::pair<std::string, std::string>> texts);

}  // namespace cbaudit
