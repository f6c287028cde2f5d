#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "cbaudit/bias.hpp"

using namespace cbaudit;

namespace {

// Definitional Pearson in extended precision: means, co-moment, variances.
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    long double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= x.size();
    my /= y.size();
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

std::vector<double> uniform_vector(std::mt19937_64& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& e : v) e = uniform_unit(rng);
    return v;
}

// Correlated pairs in [0,1]: y = clamp(x + noise).
void correlated_pairs(std::mt19937_64& rng, std::size_t n, std::vector<TabooJudgement>& taboo,
                      std::vector<double>& align) {
    std::normal_distribution<double> noise(0.0, 0.2);
    taboo.clear();
    align.clear();
    for (std::size_t i = 0; i < n; ++i) {
        double a = uniform_unit(rng);
        taboo.push_back({std::clamp(a + noise(rng), 0.0, 1.0), true});
        align.push_back(a);
    }
}

std::vector<double> constant_scores(std::size_t n, std::size_t above, double hi = 0.95, double lo = 0.1) {
    std::vector<double> v(n, lo);
    std::fill_n(v.begin(), above, hi);
    return v;
}

}  // namespace

TEST_SUITE("pearson") {
    TEST_CASE("exact linear relations") {
        const std::vector<double> x{1, 2, 3};
        CHECK(pearson(x, std::vector<double>{2, 4, 6}) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(pearson(x, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0).epsilon(1e-15));
    }

    TEST_CASE("hand-computed value") {
        // cov-sum 4, var-sums 5 and 5.
        CHECK(std::abs(pearson(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}) - 0.8) <= 1e-12);
    }

    TEST_CASE("degenerate and malformed inputs") {
        CHECK_THROWS_AS(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), DegenerateCorrelation);
        CHECK_THROWS_AS(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{0.5, 0.5, 0.5}), DegenerateCorrelation);
        CHECK_THROWS_WITH(pearson(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
                          doctest::Contains("degenerate correlation"));
        CHECK_THROWS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}));
        CHECK_THROWS(pearson(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3, 4}));
    }

    TEST_CASE("matches the definitional oracle on random vectors") {
        std::mt19937_64 rng(2024);
        for (int trial = 0; trial < 1000; ++trial) {
            auto n = 3 + uniform_below(rng, 98);
            auto x = uniform_vector(rng, n);
            auto y = uniform_vector(rng, n);
            double r = pearson(x, y);
            REQUIRE(std::abs(r - pearson_oracle(x, y)) <= 1e-12);
            REQUIRE(std::abs(r - pearson(y, x)) <= 1e-12);
            REQUIRE(std::abs(r) <= 1.0 + 1e-12);
        }
    }

    TEST_CASE("invariant under positive affine maps") {
        std::mt19937_64 rng(7);
        for (int trial = 0; trial < 200; ++trial) {
            auto n = 3 + uniform_below(rng, 98);
            auto x = uniform_vector(rng, n);
            auto y = uniform_vector(rng, n);
            double a = 0.01 + 100 * uniform_unit(rng);
            double b = -50 + 100 * uniform_unit(rng);
            std::vector<double> ax(n);
            std::transform(x.begin(), x.end(), ax.begin(), [&](double v) { return a * v + b; });
            REQUIRE(std::abs(pearson(ax, y) - pearson(x, y)) <= 1e-10);
        }
    }
}

TEST_SUITE("classifier_bias") {
    const std::vector<TabooJudgement> kTaboo{{0.9, true}, {0.8, true}, {0.2, false}, {0.95, true}};
    const std::vector<double> kAlign{0.9, 0.7, 0.1, 0.95};

    BootstrapOptions options(std::uint64_t seed, int replicates = 2000, unsigned threads = 0) {
        BootstrapOptions o;
        o.seed = seed;
        o.replicates = replicates;
        o.threads = threads;
        return o;
    }

    TEST_CASE("correlates only the declared pairs") {
        auto res = classifier_bias(kTaboo, kAlign, options(1), "perspective", "AA");
        const double expected = pearson_oracle({0.9, 0.8, 0.95}, {0.9, 0.7, 0.95});
        CHECK(std::abs(res.r - expected) <= 1e-12);
        CHECK(std::abs(res.r - 0.9897433186107869) <= 1e-12);
        CHECK(res.n_pairs == 3);
        CHECK(res.classifier_tag == "perspective");
        CHECK(res.community_tag == "AA");
        CHECK(res.ci_low <= res.ci_high);
        // Three points: many resamples are degenerate and get redrawn.
        CHECK(res.redraws > 0);
    }

    TEST_CASE("all pairs when the restriction is off") {
        auto opt = options(1);
        opt.restrict_to_declared = false;
        auto res = classifier_bias(kTaboo, kAlign, opt);
        CHECK(std::abs(res.r - pearson_oracle({0.9, 0.8, 0.2, 0.95}, kAlign)) <= 1e-12);
        CHECK(res.n_pairs == 4);
    }

    TEST_CASE("no declared instances") {
        std::vector<TabooJudgement> none{{0.1, false}, {0.2, false}, {0.3, false}, {0.4, false}};
        CHECK_THROWS_AS(classifier_bias(none, kAlign, options(1)), NoTabooInstances);
        CHECK_THROWS_WITH(classifier_bias(none, kAlign, options(1)), doctest::Contains("no taboo-declared instances"));
    }

    TEST_CASE("mismatched lengths") {
        CHECK_THROWS(classifier_bias(kTaboo, std::vector<double>{0.1, 0.2}, options(1)));
    }

    TEST_CASE("deterministic for a seed and independent of thread count") {
        std::mt19937_64 rng(11);
        std::vector<TabooJudgement> taboo;
        std::vector<double> align;
        correlated_pairs(rng, 300, taboo, align);
        auto a = classifier_bias(taboo, align, options(99, 1000, 1));
        auto b = classifier_bias(taboo, align, options(99, 1000, 1));
        auto c = classifier_bias(taboo, align, options(99, 1000, 4));
        auto d = classifier_bias(taboo, align, options(99, 1000, 7));
        CHECK(a == b);
        CHECK(a.ci_low == c.ci_low);
        CHECK(a.ci_high == c.ci_high);
        CHECK(a.bootstrap_median == c.bootstrap_median);
        CHECK(a.ci_low == d.ci_low);
        CHECK(a.ci_high == d.ci_high);
        auto e = classifier_bias(taboo, align, options(100, 1000, 1));
        CHECK(e.r == a.r);
        CHECK((e.ci_low != a.ci_low || e.ci_high != a.ci_high));
    }

    TEST_CASE("interval contains the bootstrap median") {
        std::mt19937_64 rng(5);
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<TabooJudgement> taboo;
            std::vector<double> align;
            correlated_pairs(rng, 40, taboo, align);
            auto res = classifier_bias(taboo, align, options(trial, 500));
            CHECK(res.ci_low <= res.bootstrap_median);
            CHECK(res.bootstrap_median <= res.ci_high);
        }
    }

    TEST_CASE("interval narrows as the sample grows") {
        std::mt19937_64 rng(17);
        std::vector<double> small, large;
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<TabooJudgement> taboo;
            std::vector<double> align;
            correlated_pairs(rng, 50, taboo, align);
            auto s = classifier_bias(taboo, align, options(trial, 500));
            small.push_back(s.ci_high - s.ci_low);
            correlated_pairs(rng, 5000, taboo, align);
            auto l = classifier_bias(taboo, align, options(trial, 500));
            large.push_back(l.ci_high - l.ci_low);
        }
        std::sort(small.begin(), small.end());
        std::sort(large.begin(), large.end());
        CHECK(large[5] < small[5]);
    }

    TEST_CASE("replicate seeds are distinct") {
        std::set<std::uint64_t> seen;
        for (std::uint64_t k = 0; k < 1000; ++k)
            for (std::uint64_t attempt = 0; attempt < 3; ++attempt) seen.insert(replicate_seed(42, k, attempt));
        CHECK(seen.size() == 3000);
        CHECK(replicate_seed(42, 0) == replicate_seed(42, 0, 0));
    }
}

TEST_SUITE("aligned_proportion") {
    TEST_CASE("closed bound") {
        CHECK(aligned_proportion(std::vector<double>{0.9, 0.9, 0.1, 0.2}, 0.85) == 50.0);
        CHECK(aligned_proportion(std::vector<double>(7, 0.84), 0.85) == 0.0);
        CHECK(aligned_proportion(std::vector<double>{0.85}, 0.85) == 100.0);
        CHECK_THROWS_AS(aligned_proportion(std::vector<double>{}, 0.85), std::invalid_argument);
    }

    TEST_CASE("permutation invariant") {
        std::mt19937_64 rng(3);
        auto v = uniform_vector(rng, 257);
        const double p = aligned_proportion(v, 0.85);
        for (int i = 0; i < 20; ++i) {
            for (std::size_t j = v.size() - 1; j > 0; --j) std::swap(v[j], v[uniform_below(rng, j + 1)]);
            CHECK(aligned_proportion(v, 0.85) == p);
        }
    }
}

TEST_SUITE("proportion matrix") {
    const std::vector<std::string> kCommunities{"NA", "HI", "HA", "SA", "AA"};

    ProportionMatrix single_column(std::vector<double> cells) {
        std::vector<std::vector<double>> rows;
        for (double c : cells) rows.push_back({c});
        return proportion_matrix_from_cells(kCommunities, {{"Davidson", "HATE"}}, rows, 0.85);
    }

    double one_decimal(double v) { return std::round(v * 10) / 10; }

    TEST_CASE("Davidson HATE column") {
        auto m = single_column({14.0, 5.5, 4.3, 4.2, 20.7});
        CHECK(one_decimal(m.mean[0]) == 9.7);
        CHECK(one_decimal(m.sample_sd[0]) == 7.4);
        CHECK(m.flags == std::set<std::pair<std::size_t, std::size_t>>{{4, 0}});
    }

    TEST_CASE("OLID column: one-sided flagging") {
        auto m = single_column({3.4, 8.3, 6.3, 16.3, 15.2});
        CHECK(one_decimal(m.mean[0]) == 9.9);
        CHECK(one_decimal(m.sample_sd[0]) == 5.6);
        CHECK(m.flags == std::set<std::pair<std::size_t, std::size_t>>{{3, 0}});
        CHECK_FALSE(m.flagged(0, 0));  // 3.4 < mean - sd
    }

    TEST_CASE("equal cells") {
        auto m = single_column({5, 5, 5, 5, 5});
        CHECK(m.sample_sd[0] == 0.0);
        CHECK(m.flags.empty());
    }

    TEST_CASE("cells computed from score lists") {
        ProportionColumnInput col{{"OLID", "OFF"}, {}};
        const std::vector<std::size_t> above{34, 83, 63, 163, 152};
        for (auto a : above) col.community_scores.push_back(constant_scores(1000, a));
        auto m = dataset_bias_matrix(kCommunities, std::span(&col, 1), 0.85);
        CHECK(m.cells[3][0] == doctest::Approx(16.3));
        CHECK(m.flags == std::set<std::pair<std::size_t, std::size_t>>{{3, 0}});
        CHECK(m.columns[0].display() == "OLID OFF");
    }

    TEST_CASE("fewer than two communities") {
        ProportionColumnInput col{{"OLID", "OFF"}, {{0.9, 0.1}}};
        CHECK_THROWS(dataset_bias_matrix({"AA"}, std::span(&col, 1), 0.85));
    }

    TEST_CASE("columns must cover every community") {
        ProportionColumnInput col{{"OLID", "OFF"}, {{0.9}, {0.1}}};
        CHECK_THROWS(dataset_bias_matrix(kCommunities, std::span(&col, 1), 0.85));
    }
}

TEST_SUITE("flag_for_reset") {
    TabooInstance instance(std::string id, std::string label) { return {std::move(id), "text", std::move(label), {}, {}}; }

    TEST_CASE("one flag per qualifying community") {
        std::vector<TabooInstance> in{instance("a", "OFF")};
        std::vector<std::map<std::string, double>> al{{{"AA", 0.9}}};
        auto flags = flag_for_reset(in, al, 0.85);
        REQUIRE(flags.size() == 1);
        CHECK(flags[0] == ResetFlag{"a", "AA", 0.9});
    }

    TEST_CASE("below tau emits nothing") {
        std::vector<TabooInstance> in{instance("a", "OFF")};
        std::vector<std::map<std::string, double>> al{{{"AA", 0.5}}};
        CHECK(flag_for_reset(in, al, 0.85).empty());
    }

    TEST_CASE("non-taboo instances are never flagged") {
        std::vector<TabooInstance> in{instance("a", "")};
        std::vector<std::map<std::string, double>> al{{{"AA", 0.99}}};
        CHECK(flag_for_reset(in, al, 0.85).empty());
        in[0].taboo_decision = true;
        CHECK(flag_for_reset(in, al, 0.85).size() == 1);
    }

    TEST_CASE("order and multiplicity") {
        std::vector<TabooInstance> in{instance("a", "OFF"), instance("b", "OFF")};
        std::vector<std::map<std::string, double>> al{{{"SA", 0.85}, {"AA", 0.9}, {"HI", 0.2}}, {{"AA", 0.95}}};
        auto flags = flag_for_reset(in, al, 0.85);
        REQUIRE(flags.size() == 3);
        CHECK(flags[0].instance_id == "a");
        CHECK(flags[0].community_tag == "AA");
        CHECK(flags[1].community_tag == "SA");
        CHECK(flags[2].instance_id == "b");
    }

    TEST_CASE("alignment list must be parallel") {
        std::vector<TabooInstance> in{instance("a", "OFF"), instance("b", "OFF")};
        std::vector<std::map<std::string, double>> al{{{"AA", 0.9}}};
        CHECK_THROWS(flag_for_reset(in, al, 0.85));
    }
}
