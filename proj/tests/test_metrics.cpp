#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "hyperball/errors.hpp"
#include "hyperball/metrics.hpp"
#include "hyperball/rng.hpp"

using namespace hyperball;

namespace {

// Brute-force oracle: enumerate every unique threshold and recount from
// scratch, with the same endpoint conventions as metric_suite.
OodMetrics brute_force_suite(const std::vector<double>& in_scores,
                             const std::vector<double>& out_scores) {
    std::set<double, std::greater<double>> thresholds(in_scores.begin(), in_scores.end());
    thresholds.insert(out_scores.begin(), out_scores.end());

    struct Point {
        double tpr, fpr, precision;
    };
    std::vector<Point> pts;
    for (double tau : thresholds) {
        std::size_t tp = 0, fp = 0;
        for (double s : in_scores) tp += s >= tau;
        for (double s : out_scores) fp += s >= tau;
        pts.push_back({static_cast<double>(tp) / in_scores.size(),
                       static_cast<double>(fp) / out_scores.size(),
                       static_cast<double>(tp) / static_cast<double>(tp + fp)});
    }

    OodMetrics m;
    for (const Point& p : pts)
        if (p.tpr >= 0.95) {
            m.fpr95 = p.fpr;
            break;
        }
    double pt = 0.0, pf = 0.0;
    for (const Point& p : pts) {
        m.auroc += (p.fpr - pf) * (p.tpr + pt) / 2.0;
        pt = p.tpr;
        pf = p.fpr;
    }
    double pr = 0.0, pp = 1.0;
    for (const Point& p : pts) {
        m.aupr += (p.tpr - pr) * (p.precision + pp) / 2.0;
        pr = p.tpr;
        pp = p.precision;
    }
    return m;
}

}  // namespace

TEST_CASE("ood scores on trivial logits") {
    const Vec logits{0.0, 0.0};
    CHECK(ood_score(logits, OodScoreKind::softmax, 1.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(ood_score(logits, OodScoreKind::energy, 1.0) ==
          doctest::Approx(-std::log(2.0)).epsilon(1e-14));
    // temperature scales the energy logsumexp
    CHECK(ood_score(Vec{2.0, 2.0}, OodScoreKind::energy, 2.0) ==
          doctest::Approx(-2.0 * std::log(2.0 * std::exp(1.0))).epsilon(1e-12));
    CHECK_THROWS_AS(ood_score_kind_from_string("entropy"), ConfigError);
}

TEST_CASE("metric_suite on separated and identical distributions") {
    const std::vector<double> high{5.0, 6.0, 7.0, 8.0};
    const std::vector<double> low{1.0, 2.0, 3.0, 4.0};
    const OodMetrics sep = metric_suite(high, low);
    CHECK(sep.fpr95 == 0.0);
    CHECK(sep.auroc == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(sep.aupr == doctest::Approx(1.0).epsilon(1e-12));

    const std::vector<double> same{1.0, 2.0, 3.0, 4.0, 5.0};
    const OodMetrics chance = metric_suite(same, same);
    CHECK(chance.auroc == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(metric_suite({}, low), std::invalid_argument);
}

TEST_CASE("metric_suite matches the brute-force oracle on a hand fixture") {
    const std::vector<double> in_scores{0.9, 0.8, 0.75, 0.3, 0.2};
    const std::vector<double> out_scores{0.85, 0.5, 0.4, 0.25, 0.1};
    const OodMetrics fast = metric_suite(in_scores, out_scores);
    const OodMetrics slow = brute_force_suite(in_scores, out_scores);
    CHECK(std::fabs(fast.fpr95 - slow.fpr95) <= 1e-9);
    CHECK(std::fabs(fast.auroc - slow.auroc) <= 1e-9);
    CHECK(std::fabs(fast.aupr - slow.aupr) <= 1e-9);
}

TEST_CASE("metric_suite matches the brute-force oracle on random fixtures with ties") {
    Xoshiro256pp rng(23);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> in_scores, out_scores;
        const std::size_t n_in = 1 + rng.below(40);
        const std::size_t n_out = 1 + rng.below(40);
        // quantized scores force plenty of ties, including across the sets
        for (std::size_t i = 0; i < n_in; ++i)
            in_scores.push_back(std::floor(rng.uniform() * 8.0) / 8.0 + 0.05);
        for (std::size_t i = 0; i < n_out; ++i)
            out_scores.push_back(std::floor(rng.uniform() * 8.0) / 8.0);

        const OodMetrics fast = metric_suite(in_scores, out_scores);
        const OodMetrics slow = brute_force_suite(in_scores, out_scores);
        CHECK(std::fabs(fast.fpr95 - slow.fpr95) <= 1e-9);
        CHECK(std::fabs(fast.auroc - slow.auroc) <= 1e-9);
        CHECK(std::fabs(fast.aupr - slow.aupr) <= 1e-9);
        CHECK(fast.auroc >= -1e-12);
        CHECK(fast.auroc <= 1.0 + 1e-12);
        CHECK(fast.aupr <= 1.0 + 1e-12);
    }
}
