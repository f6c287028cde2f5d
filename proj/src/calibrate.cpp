#include "cbaudit/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include <fmt/format.h>

namespace cbaudit {

double CcdfCurve::at(double threshold) const {
    auto it = std::find(grid.begin(), grid.end(), threshold);
    if (it == grid.end()) throw std::out_of_range(fmt::format("threshold {} is not a grid point", threshold));
    return survival[static_cast<std::size_t>(it - grid.begin())];
}

std::vector<double> make_grid(double step) {
    if (!(step > 0.0 && step <= 1.0)) throw std::invalid_argument("grid_step must be in (0,1]");
    const double parts = 1.0 / step;
    const long n = std::lround(parts);
    if (std::abs(parts - static_cast<double>(n)) > 1e-9)
        throw std::invalid_argument(fmt::format("grid_step {} does not divide [0,1] evenly", step));
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(n) + 1);
    for (long i = 0; i <= n; ++i) grid.push_back(static_cast<double>(i) / static_cast<double>(n));
    return grid;
}

CcdfCurve compute_ccdf(std::string community_id, std::span<const double> scores, std::span<const double> grid) {
    if (scores.empty()) throw Error("no scores for community '" + community_id + "'");
    if (!std::is_sorted(grid.begin(), grid.end())) throw std::invalid_argument("grid must be ascending");
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());

    CcdfCurve curve;
    curve.community_id = std::move(community_id);
    curve.grid.assign(grid.begin(), grid.end());
    curve.survival.reserve(grid.size());
    const double n = static_cast<double>(sorted.size());
    for (double t : grid) {
        auto first_ge = std::lower_bound(sorted.begin(), sorted.end(), t);
        curve.survival.push_back(static_cast<double>(sorted.end() - first_ge) / n);
    }
    return curve;
}

CoverageUnattainable::CoverageUnattainable(double target, double best_threshold, double best_coverage)
    : Error(fmt::format("coverage unattainable: no threshold keeps {:.1f}% of every community highly aligned; "
                        "best achievable is {:.1f}% at threshold {:.2f}",
                        100 * target, 100 * best_coverage, best_threshold)),
      best_threshold_(best_threshold),
      best_coverage_(best_coverage) {}

double select_threshold(std::span<const CcdfCurve> curves, double target_coverage) {
    if (curves.empty()) throw std::invalid_argument("select_threshold needs at least one curve");
    const auto& grid = curves.front().grid;
    for (const auto& c : curves)
        if (c.grid != grid) throw std::invalid_argument("curves do not share a grid");

    double best_t = grid.empty() ? 0.0 : grid.front();
    double best_cov = -1.0;
    for (std::size_t i = grid.size(); i-- > 0;) {
        double min_surv = std::numeric_limits<double>::infinity();
        for (const auto& c : curves) min_surv = std::min(min_surv, c.survival[i]);
        if (min_surv >= target_coverage) return grid[i];
        if (min_surv > best_cov) best_cov = min_surv, best_t = grid[i];
    }
    throw CoverageUnattainable(target_coverage, best_t, std::max(best_cov, 0.0));
}

ValidationMatrix validation_matrix(const AlignmentSource& source, std::span<const std::string> clc_tags,
                                   std::span<const CommunityCorpus> val_sets, double tau) {
    for (const auto& vs : val_sets)
        if (vs.empty()) throw Error("validation set for community '" + vs.community_id + "' is empty");

    ValidationMatrix m;
    m.tau = tau;
    m.rows.assign(clc_tags.begin(), clc_tags.end());
    for (const auto& vs : val_sets) m.columns.push_back(vs.community_id);

    // Rows are independent; assembled in input order.
    std::vector<std::future<std::vector<double>>> pending;
    for (const auto& tag : m.rows) {
        pending.push_back(std::async(std::launch::async, [&source, &tag, val_sets, tau] {
            std::vector<double> row;
            for (const auto& vs : val_sets) {
                std::size_t hits = 0;
                for (const auto& u : vs.utterances) hits += source.alignment(tag, u.id, u.norm_text) >= tau;
                row.push_back(100.0 * static_cast<double>(hits) / static_cast<double>(vs.size()));
            }
            return row;
        }));
    }
    for (auto& f : pending) m.cells.push_back(f.get());
    return m;
}

std::vector<double> self_scores(const AlignmentSource& source, const CommunityCorpus& val_set) {
    std::vector<double> out;
    out.reserve(val_set.size());
    for (const auto& u : val_set.utterances) out.push_back(source.alignment(val_set.community_id, u.id, u.norm_text));
    return out;
}

}  // namespace cbaudit
