#pragma once

#include <span>
#include <string>
#include <vector>

#include "cbaudit/clc.hpp"
#include "cbaudit/common.hpp"
#include "cbaudit/corpus.hpp"

namespace cbaudit {

/// Survival function of alignment scores: survival[i] is the fraction of
/// scores >= grid[i].
struct CcdfCurve {
    std::string community_id;
    std::vector<double> grid;
    std::vector<double> survival;

    /// Survival at an exact grid point; throws std::out_of_range if absent.
    double at(double threshold) const;
};

struct ThresholdConfig {
    double tau = 0.85;
    double target_coverage = 0.52;
    double grid_step = 0.05;
};

/// 0, step, 2*step, ..., 1. Points are computed as i/n so that 0.85 is the
/// same double as the literal. `step` must divide 1 into a whole number of parts.
std::vector<double> make_grid(double step);

/// Throws Error("no scores") when `scores` is empty.
CcdfCurve compute_ccdf(std::string community_id, std::span<const double> scores, std::span<const double> grid);

class CoverageUnattainable : public Error {
public:
    CoverageUnattainable(double target, double best_threshold, double best_coverage);
    double best_threshold() const noexcept { return best_threshold_; }
    double best_coverage() const noexcept { return best_coverage_; }

private:
    double best_threshold_;
    double best_coverage_;
};

/// Largest grid threshold whose minimum survival across all curves is at least
/// target_coverage. Only the coverage floor is encoded; the higher the chosen
/// threshold, the less the highly-aligned sets of different communities overlap.
double select_threshold(std::span<const CcdfCurve> curves, double target_coverage);

/// Rows are CLC tags, columns validation-set tags. Cells are percentages of the
/// column's validation set scoring >= tau under the row's CLC.
struct ValidationMatrix {
    std::vector<std::string> rows;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> cells;  // [row][column], unrounded
    double tau = 0.85;
};

ValidationMatrix validation_matrix(const AlignmentSource& source, std::span<const std::string> clc_tags,
                                   std::span<const CommunityCorpus> val_sets, double tau);

/// Each community's own-CLC scores over its validation set.
std::vector<double> self_scores(const AlignmentSource& source, const CommunityCorpus& val_set);

}  // namespace cbaudit
