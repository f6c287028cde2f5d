#include "cbaudit/bias.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include <fmt/format.h>

namespace cbaudit {

namespace {

bool constant(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [&](double a) { return a == v.front(); });
}

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double a : v) s += a;
    return s / static_cast<double>(v.size());
}

// Linear interpolation between order statistics (Hyndman-Fan type 7).
double quantile_sorted(std::span<const double> sorted, double p) {
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

constexpr std::uint64_t kMaxAttempts = 64;

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size())
        throw std::invalid_argument(fmt::format("pearson: length mismatch ({} vs {})", x.size(), y.size()));
    if (x.size() < 3) throw std::invalid_argument("pearson: at least 3 pairs required");
    if (constant(x) || constant(y)) throw DegenerateCorrelation();

    const double mx = mean_of(x);
    const double my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateCorrelation();
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t replicate, std::uint64_t attempt) noexcept {
    return master ^ mix64(mix64(replicate) + attempt);
}

BootstrapCi bootstrap_pearson_ci(std::span<const double> x, std::span<const double> y, const BootstrapOptions& opt) {
    if (opt.replicates < 1) throw std::invalid_argument("bootstrap needs at least one replicate");
    if (!(opt.confidence > 0.0 && opt.confidence < 1.0)) throw std::invalid_argument("confidence must be in (0,1)");
    if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("bootstrap needs >= 3 paired values");

    const std::size_t n = x.size();
    const auto reps = static_cast<std::size_t>(opt.replicates);
    std::vector<double> rs(reps);
    std::vector<std::size_t> redraws(reps, 0);

    auto run = [&](std::size_t begin, std::size_t end) {
        std::vector<double> bx(n), by(n);
        for (std::size_t k = begin; k < end; ++k) {
            for (std::uint64_t attempt = 0;; ++attempt) {
                if (attempt == kMaxAttempts)
                    throw Error(fmt::format("bootstrap replicate {} stayed degenerate after {} redraws", k, attempt));
                std::mt19937_64 rng(replicate_seed(opt.seed, k, attempt));
                for (std::size_t i = 0; i < n; ++i) {
                    const auto j = static_cast<std::size_t>(uniform_below(rng, n));
                    bx[i] = x[j];
                    by[i] = y[j];
                }
                if (constant(bx) || constant(by)) {
                    ++redraws[k];
                    continue;
                }
                rs[k] = pearson(bx, by);
                break;
            }
        }
    };

    unsigned threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, reps));
    if (threads <= 1) {
        run(0, reps);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        std::vector<std::thread> pool;
        const std::size_t chunk = (reps + threads - 1) / threads;
        for (unsigned t = 0; t < threads; ++t) {
            const std::size_t b = std::min(reps, t * chunk);
            const std::size_t e = std::min(reps, b + chunk);
            pool.emplace_back([&, t, b, e] {
                try {
                    run(b, e);
                } catch (...) {
                    errors[t] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& err : errors)
            if (err) std::rethrow_exception(err);
    }

    std::sort(rs.begin(), rs.end());
    const double alpha = 1.0 - opt.confidence;
    BootstrapCi ci;
    ci.low = quantile_sorted(rs, alpha / 2);
    ci.high = quantile_sorted(rs, 1.0 - alpha / 2);
    ci.median = quantile_sorted(rs, 0.5);
    for (auto d : redraws) ci.redraws += d;
    return ci;
}

CorrelationResult classifier_bias(std::span<const TabooJudgement> taboo, std::span<const double> alignment,
                                  const BootstrapOptions& opt, std::string classifier_tag,
                                  std::string community_tag) {
    if (taboo.size() != alignment.size())
        throw std::invalid_argument(fmt::format("classifier_bias: {} taboo judgements but {} alignment scores",
                                                taboo.size(), alignment.size()));
    std::vector<double> x, y;
    for (std::size_t i = 0; i < taboo.size(); ++i) {
        if (opt.restrict_to_declared && !taboo[i].declared) continue;
        x.push_back(taboo[i].score);
        y.push_back(alignment[i]);
    }
    if (x.size() < 3) throw NoTabooInstances(x.size());

    CorrelationResult res;
    res.classifier_tag = std::move(classifier_tag);
    res.community_tag = std::move(community_tag);
    res.r = pearson(x, y);
    const BootstrapCi ci = bootstrap_pearson_ci(x, y, opt);
    res.ci_low = ci.low;
    res.ci_high = ci.high;
    res.bootstrap_median = ci.median;
    res.redraws = ci.redraws;
    res.n_pairs = x.size();
    res.n_replicates = opt.replicates;
    res.seed = opt.seed;
    return res;
}

// ---------------------------------------------------------------------------

double aligned_proportion(std::span<const double> scores, double tau) {
    if (scores.empty()) throw std::invalid_argument("aligned_proportion: no scores");
    std::size_t hits = 0;
    for (double s : scores) hits += s >= tau;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(scores.size());
}

ProportionMatrix proportion_matrix_from_cells(std::vector<std::string> communities,
                                              std::vector<DatasetColumn> columns,
                                              std::vector<std::vector<double>> cells, double tau) {
    if (communities.size() < 2)
        throw Error(fmt::format("dataset bias needs at least 2 communities (got {}); sample SD is undefined",
                                communities.size()));
    if (cells.size() != communities.size()) throw std::invalid_argument("cell rows do not match communities");
    for (const auto& row : cells)
        if (row.size() != columns.size()) throw std::invalid_argument("cell columns do not match datasets");

    ProportionMatrix m;
    m.tau = tau;
    m.communities = std::move(communities);
    m.columns = std::move(columns);
    m.cells = std::move(cells);
    const std::size_t rows = m.communities.size();
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < rows; ++r) sum += m.cells[r][c];
        const double mean = sum / static_cast<double>(rows);
        double ss = 0.0;
        for (std::size_t r = 0; r < rows; ++r) ss += (m.cells[r][c] - mean) * (m.cells[r][c] - mean);
        const double sd = std::sqrt(ss / static_cast<double>(rows - 1));
        m.mean.push_back(mean);
        m.sample_sd.push_back(sd);
        for (std::size_t r = 0; r < rows; ++r)
            if (m.cells[r][c] > mean + sd) m.flags.insert({r, c});
    }
    return m;
}

ProportionMatrix dataset_bias_matrix(std::vector<std::string> communities,
                                     std::span<const ProportionColumnInput> columns, double tau) {
    if (communities.size() < 2)
        throw Error(fmt::format("dataset bias needs at least 2 communities (got {}); sample SD is undefined",
                                communities.size()));
    std::vector<DatasetColumn> keys;
    std::vector<std::vector<double>> cells(communities.size());
    for (const auto& col : columns) {
        if (col.community_scores.size() != communities.size())
            throw std::invalid_argument(fmt::format("column '{}' covers {} communities, expected {}",
                                                    col.column.display(), col.community_scores.size(),
                                                    communities.size()));
        keys.push_back(col.column);
        for (std::size_t r = 0; r < communities.size(); ++r)
            cells[r].push_back(aligned_proportion(col.community_scores[r], tau));
    }
    return proportion_matrix_from_cells(std::move(communities), std::move(keys), std::move(cells), tau);
}

std::vector<ResetFlag> flag_for_reset(std::span<const TabooInstance> instances,
                                      std::span<const std::map<std::string, double>> alignments, double tau) {
    if (instances.size() != alignments.size())
        throw std::invalid_argument("flag_for_reset: alignments must cover every instance");
    std::vector<ResetFlag> flags;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (!instances[i].is_taboo()) continue;
        for (const auto& [community, a] : alignments[i])
            if (a >= tau) flags.push_back({instances[i].id, community, a});
    }
    return flags;
}

}  // namespace cbaudit
