#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cbaudit/common.hpp"
#include "cbaudit/taboo.hpp"

namespace cbaudit {

class DegenerateCorrelation : public Error {
public:
    DegenerateCorrelation() : Error("degenerate correlation: zero variance") {}
};

/// Sample Pearson correlation. Requires |x| == |y| >= 3; throws
/// DegenerateCorrelation when either vector is constant.
double pearson(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Classifier bias
// ---------------------------------------------------------------------------

struct TabooJudgement {
    double score = 0.0;
    bool declared = false;
};

struct BootstrapOptions {
    int replicates = 10000;
    std::uint64_t seed = 0;
    double confidence = 0.95;
    unsigned threads = 0;  // 0: hardware concurrency
    bool restrict_to_declared = true;
};

struct CorrelationResult {
    std::string classifier_tag;
    std::string community_tag;
    double r = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    double bootstrap_median = 0.0;
    std::size_t n_pairs = 0;
    int n_replicates = 0;
    std::uint64_t seed = 0;
    std::size_t redraws = 0;  // degenerate resamples replaced
    std::optional<std::string> error;

    bool operator==(const CorrelationResult&) const = default;
};

class NoTabooInstances : public Error {
public:
    explicit NoTabooInstances(std::size_t declared)
        : Error("no taboo-declared instances: " + std::to_string(declared) + " declared, at least 3 required") {}
};

/// Seed for attempt `attempt` of bootstrap replicate `replicate`.
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t replicate, std::uint64_t attempt = 0) noexcept;

/// Percentile-method bootstrap of the Pearson correlation over paired data.
/// Each replicate resamples the pairs with replacement from its own derived
/// seed, so the result does not depend on the thread count.
struct BootstrapCi {
    double low = 0.0;
    double high = 0.0;
    double median = 0.0;
    std::size_t redraws = 0;
};
BootstrapCi bootstrap_pearson_ci(std::span<const double> x, std::span<const double> y, const BootstrapOptions& opt);

/// Correlates taboo confidence with alignment over the instances the taboo
/// classifier declares as taboo (all instances when restrict_to_declared is off).
CorrelationResult classifier_bias(std::span<const TabooJudgement> taboo, std::span<const double> alignment,
                                  const BootstrapOptions& opt, std::string classifier_tag = {},
                                  std::string community_tag = {});

// ---------------------------------------------------------------------------
// Dataset bias
// ---------------------------------------------------------------------------

/// 100 * |{s >= tau}| / n. Throws std::invalid_argument on empty input.
double aligned_proportion(std::span<const double> scores, double tau);

struct DatasetColumn {
    std::string dataset;
    std::string label;

    std::string display() const { return label.empty() ? dataset : dataset + " " + label; }
    bool operator==(const DatasetColumn&) const = default;
};

struct ProportionMatrix {
    std::vector<std::string> communities;                 // rows
    std::vector<DatasetColumn> columns;
    std::vector<std::vector<double>> cells;               // [row][column], unrounded
    std::vector<double> mean;                             // per column
    std::vector<double> sample_sd;                        // per column, divisor n-1
    std::set<std::pair<std::size_t, std::size_t>> flags;  // (row, column): cell > mean + sd
    double tau = 0.85;

    bool flagged(std::size_t row, std::size_t col) const { return flags.count({row, col}) > 0; }
};

struct ProportionColumnInput {
    DatasetColumn column;
    std::vector<std::vector<double>> community_scores;  // parallel to the community list
};

/// Builds the matrix from already computed percentages (cells[row][column]).
ProportionMatrix proportion_matrix_from_cells(std::vector<std::string> communities,
                                              std::vector<DatasetColumn> columns,
                                              std::vector<std::vector<double>> cells, double tau);

/// cell = aligned_proportion of each community's scores on each dataset.
/// Requires at least two communities.
ProportionMatrix dataset_bias_matrix(std::vector<std::string> communities,
                                     std::span<const ProportionColumnInput> columns, double tau);

// ---------------------------------------------------------------------------
// Reset flags
// ---------------------------------------------------------------------------

struct ResetFlag {
    static constexpr std::string_view kReason = "taboo-labeled but highly community-aligned";

    std::string instance_id;
    std::string community_tag;
    double alignment = 0.0;

    bool operator==(const ResetFlag&) const = default;
};

/// One flag per (taboo instance, community) with alignment >= tau, in instance
/// order then community order. `alignments` is parallel to `instances`.
std::vector<ResetFlag> flag_for_reset(std::span<const TabooInstance> instances,
                                      std::span<const std::map<std::string, double>> alignments, double tau);

}  // namespace cbaudit
