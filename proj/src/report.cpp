#include "cbaudit/report.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <stdexcept>

#include <fmt/chrono.h>
#include <fmt/format.h>

namespace cbaudit {

namespace {

std::string one_decimal(double v) { return fmt::format("{:.1f}", v); }

std::string md_row(const std::vector<std::string>& cells) { return "| " + fmt::format("{}", fmt::join(cells, " | ")) + " |\n"; }

std::string md_rule(std::size_t numeric_columns) {
    std::string s = "|---|";
    for (std::size_t i = 0; i < numeric_columns; ++i) s += "---:|";
    return s + "\n";
}

std::string tsv_row(const std::vector<std::string>& cells) { return fmt::format("{}\n", fmt::join(cells, "\t")); }

}  // namespace

std::string render_matrix(const ValidationMatrix& m, MatrixFormat format) {
    std::vector<std::string> header{"CLC"};
    header.insert(header.end(), m.columns.begin(), m.columns.end());
    std::string out = format == MatrixFormat::tsv ? tsv_row(header) : md_row(header) + md_rule(m.columns.size());
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
        std::vector<std::string> row{m.rows[r]};
        for (double v : m.cells[r]) row.push_back(one_decimal(v));
        out += format == MatrixFormat::tsv ? tsv_row(row) : md_row(row);
    }
    return out;
}

std::string render_matrix(const ProportionMatrix& m, MatrixFormat format) {
    const bool md = format == MatrixFormat::markdown;
    std::vector<std::string> header{"CLC"};
    for (const auto& c : m.columns) header.push_back(c.display());
    std::string out = md ? md_row(header) + md_rule(m.columns.size()) : tsv_row(header);
    for (std::size_t r = 0; r < m.communities.size(); ++r) {
        std::vector<std::string> row{m.communities[r]};
        for (std::size_t c = 0; c < m.columns.size(); ++c) {
            std::string cell = one_decimal(m.cells[r][c]);
            if (md && m.flagged(r, c)) cell = "**" + cell + "**";
            row.push_back(std::move(cell));
        }
        out += md ? md_row(row) : tsv_row(row);
    }
    auto summary = [&](const char* name, const std::vector<double>& values) {
        std::vector<std::string> row{name};
        for (double v : values) row.push_back(one_decimal(v));
        out += md ? md_row(row) : tsv_row(row);
    };
    summary("Average", m.mean);
    summary("Std. Dev.", m.sample_sd);
    return out;
}

std::string emit_ccdf_csv(std::span<const CcdfCurve> curves) {
    std::string out = "threshold,community,survival\n";
    if (curves.empty()) return out;
    const auto& grid = curves.front().grid;
    std::vector<const CcdfCurve*> ordered;
    for (const auto& c : curves) {
        if (c.grid != grid) throw std::invalid_argument("emit_ccdf_csv: curves do not share a grid");
        ordered.push_back(&c);
    }
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const CcdfCurve* a, const CcdfCurve* b) { return a->community_id < b->community_id; });
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (const auto* c : ordered) out += fmt::format("{},{},{:.6f}\n", grid[i], c->community_id, c->survival[i]);
    return out;
}

std::vector<CcdfCurve> parse_ccdf_csv(std::string_view csv) {
    std::vector<CcdfCurve> curves;
    std::map<std::string, std::size_t, std::less<>> index;
    bool header = true;
    std::size_t pos = 0;
    while (pos < csv.size()) {
        auto eol = csv.find('\n', pos);
        if (eol == std::string_view::npos) eol = csv.size();
        std::string_view line = csv.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        if (header) {
            if (line != "threshold,community,survival") throw std::invalid_argument("unexpected CCDF CSV header");
            header = false;
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = line.rfind(',');
        if (c1 == std::string_view::npos || c1 == c2) throw std::invalid_argument("malformed CCDF row");
        double t = 0, s = 0;
        auto r1 = std::from_chars(line.data(), line.data() + c1, t);
        auto r2 = std::from_chars(line.data() + c2 + 1, line.data() + line.size(), s);
        if (r1.ec != std::errc() || r2.ec != std::errc()) throw std::invalid_argument("malformed CCDF number");
        auto community = line.substr(c1 + 1, c2 - c1 - 1);
        auto it = index.find(community);
        if (it == index.end()) {
            it = index.emplace(std::string(community), curves.size()).first;
            curves.push_back({std::string(community), {}, {}});
        }
        curves[it->second].grid.push_back(t);
        curves[it->second].survival.push_back(s);
    }
    return curves;
}

std::string emit_correlations_csv(std::span<const CorrelationResult> results) {
    std::string out = "classifier,community,r,ci_low,ci_high,n_pairs\n";
    for (const auto& r : results) {
        if (r.error) {
            out += fmt::format("{},{},,,,{}\n", r.classifier_tag, r.community_tag, r.n_pairs);
            continue;
        }
        if (r.ci_low > r.ci_high)
            throw std::logic_error(fmt::format("correlation {}/{} has ci_low {} > ci_high {}", r.classifier_tag,
                                               r.community_tag, r.ci_low, r.ci_high));
        out += fmt::format("{},{},{:.4f},{:.4f},{:.4f},{}\n", r.classifier_tag, r.community_tag, r.r, r.ci_low,
                           r.ci_high, r.n_pairs);
    }
    return out;
}

std::string emit_reset_flags_csv(std::span<const ResetFlag> flags) {
    std::string out = "id,community,alignment\n";
    for (const auto& f : flags) out += fmt::format("{},{},{:.6f}\n", f.instance_id, f.community_tag, f.alignment);
    return out;
}

std::string format_utc(std::chrono::system_clock::time_point t) {
    const auto secs = std::chrono::floor<std::chrono::seconds>(t);
    return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(secs)));
}

BuiltReport build_report(AuditReport parts, const ReportClock& clock) {
    parts.metadata.generated_at = format_utc(clock());
    const auto& meta = parts.metadata;

    std::string doc = "# Community language bias audit\n\n## Metadata\n\n";
    doc += fmt::format("- Tool version: {}\n", meta.tool_version);
    doc += fmt::format("- Generated: {}\n", meta.generated_at);
    doc += fmt::format("- Master seed: {}\n", meta.seed);
    doc += fmt::format("- High-alignment threshold (tau): {} ({})\n", meta.tau,
                       parts.selected_tau ? "calibrated" : "fixed");
    doc += fmt::format("- Taboo decision threshold: {}\n", meta.decision_threshold);
    doc += fmt::format("- Bootstrap: {} method, {} replicates, 95% CI\n", meta.bootstrap_method,
                       meta.bootstrap_replicates);
    if (!meta.inputs.empty()) {
        doc += "\n### Inputs\n\n| Input | SHA-256 |\n|---|---|\n";
        for (const auto& in : meta.inputs) doc += fmt::format("| {} | `{}` |\n", in.name, in.sha256);
    }

    if (!parts.ccdf.empty()) {
        doc += "\n## Threshold calibration\n\n";
        doc += fmt::format("Share of each community's validation set scoring at least {} with its own CLC.\n\n",
                           meta.tau);
        doc += "| Community | Survival |\n|---|---:|\n";
        for (const auto& c : parts.ccdf) {
            auto it = std::find(c.grid.begin(), c.grid.end(), meta.tau);
            const std::string v = it == c.grid.end()
                                      ? std::string("n/a")
                                      : fmt::format("{:.1f}%", 100 * c.survival[static_cast<std::size_t>(it - c.grid.begin())]);
            doc += fmt::format("| {} | {} |\n", c.community_id, v);
        }
    }

    if (parts.validation) {
        doc += "\n## Validation matrix\n\n";
        doc += "Percentage of each validation set (columns) scoring at or above tau with each CLC (rows).\n\n";
        doc += render_matrix(*parts.validation, MatrixFormat::markdown);
    }

    if (!parts.correlations.empty()) {
        doc += "\n## Classifier bias\n\n";
        doc += "Pearson correlation between taboo confidence and alignment on taboo-declared instances. "
               "Negative values indicate awareness of community norms; positive values indicate bias.\n\n";
        doc += "| Classifier | Community | r | 95% CI | Pairs |\n|---|---|---:|---:|---:|\n";
        for (const auto& r : parts.correlations) {
            if (r.error)
                doc += fmt::format("| {} | {} | error: {} | | {} |\n", r.classifier_tag, r.community_tag, *r.error,
                                   r.n_pairs);
            else
                doc += fmt::format("| {} | {} | {:.4f} | [{:.4f}, {:.4f}] | {} |\n", r.classifier_tag,
                                   r.community_tag, r.r, r.ci_low, r.ci_high, r.n_pairs);
        }
    }

    if (parts.proportions) {
        doc += "\n## Dataset bias\n\n";
        doc += "Percentage of taboo-labelled instances scoring at or above tau with each CLC. "
               "Bold cells exceed their column mean by more than one sample standard deviation.\n\n";
        doc += render_matrix(*parts.proportions, MatrixFormat::markdown);
    }

    if (!parts.reset_flags.empty()) {
        doc += "\n## Reset flags\n\n";
        doc += fmt::format("{} (instance, community) pairs are {}.\n\n", parts.reset_flags.size(),
                           ResetFlag::kReason);
        doc += "| Instance | Community | Alignment |\n|---|---|---:|\n";
        for (const auto& f : parts.reset_flags)
            doc += fmt::format("| {} | {} | {:.4f} |\n", f.instance_id, f.community_tag, f.alignment);
    }

    return {std::move(parts), std::move(doc)};
}

}  // namespace cbaudit
