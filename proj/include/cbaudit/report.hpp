#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cbaudit/bias.hpp"
#include "cbaudit/calibrate.hpp"

namespace cbaudit {

enum class MatrixFormat { tsv, markdown };

/// Display is 1-decimal. The proportion matrix gets "Average" and "Std. Dev."
/// rows; in Markdown its flagged cells are wrapped in `**`.
std::string render_matrix(const ValidationMatrix& m, MatrixFormat format);
std::string render_matrix(const ProportionMatrix& m, MatrixFormat format);

/// `threshold,community,survival`, grid-major, communities ordered by tag,
/// survival to 6 decimals. All curves must share one grid.
std::string emit_ccdf_csv(std::span<const CcdfCurve> curves);
std::vector<CcdfCurve> parse_ccdf_csv(std::string_view csv);

/// `classifier,community,r,ci_low,ci_high,n_pairs` with 4-decimal r and CI.
/// Rows carrying an error leave the numeric fields empty. Throws
/// std::logic_error if any successful row has ci_low > ci_high.
std::string emit_correlations_csv(std::span<const CorrelationResult> results);

/// `id,community,alignment` with 6-decimal alignment.
std::string emit_reset_flags_csv(std::span<const ResetFlag> flags);

struct InputDigest {
    std::string name;
    std::string sha256;
};

struct ReportMetadata {
    std::string tool_version{kToolVersion};
    std::uint64_t seed = 0;
    double tau = 0.85;
    double decision_threshold = 0.5;
    std::string bootstrap_method = "percentile";
    int bootstrap_replicates = 10000;
    std::string generated_at;  // filled by build_report
    std::vector<InputDigest> inputs;
};

struct AuditReport {
    ReportMetadata metadata;
    std::optional<double> selected_tau;  // set when tau was calibrated rather than fixed
    std::vector<CcdfCurve> ccdf;
    std::optional<ValidationMatrix> validation;
    std::vector<CorrelationResult> correlations;
    std::optional<ProportionMatrix> proportions;
    std::vector<ResetFlag> reset_flags;
};

using ReportClock = std::function<std::chrono::system_clock::time_point()>;

struct BuiltReport {
    AuditReport report;
    std::string document;  // Markdown
};

/// Stamps the metadata with `clock()` (ISO-8601 UTC) and renders a Markdown
/// document with fixed section order. Empty sections are omitted.
BuiltReport build_report(AuditReport parts, const ReportClock& clock);

std::string format_utc(std::chrono::system_clock::time_point t);

}  // namespace cbaudit
