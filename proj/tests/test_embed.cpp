#include <doctest.h>

#include <cmath>
#include <sstream>

#include "hyperball/embed.hpp"
#include "hyperball/errors.hpp"
#include "support/testutil.hpp"

using namespace hyperball;
using namespace hyperball::testutil;

namespace {

// a <- b <- c chain given as (child, parent) pairs
Hierarchy chain3() {
    Hierarchy h;
    h.nodes = {"a", "b", "c"};
    h.edges = {{1, 0}, {2, 1}};
    return h;
}

EmbeddingTable table_with(EmbedMode mode, std::vector<Vec> pts) {
    EmbeddingTable t;
    t.mode = mode;
    t.curv = Curvature{};
    t.points = std::move(pts);
    return t;
}

}  // namespace

TEST_CASE("edge list parsing") {
    std::istringstream in("b\ta\nc\tb\n");
    const Hierarchy h = Hierarchy::from_edge_list(in);
    CHECK(h.nodes == std::vector<std::string>{"b", "a", "c"});
    CHECK(h.edges.size() == 2);

    std::istringstream self("a\ta\n");
    CHECK_THROWS_AS(Hierarchy::from_edge_list(self), DataError);
    std::istringstream junk("a b\n");
    CHECK_THROWS_AS(Hierarchy::from_edge_list(junk), DataError);
}

TEST_CASE("nce loss values and gradients") {
    // positive and single negative at the same distance -> ln 2
    EmbeddingTable t = table_with(EmbedMode::euclidean,
                                  {Vec{0.0, 0.0}, Vec{1.0, 0.0}, Vec{-1.0, 0.0}});
    const int negs[] = {2};
    const NceResult r = nce_loss(t, 0, 1, negs);
    CHECK(r.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    // v at distance ~0 with a far negative -> small positive loss
    EmbeddingTable close = table_with(EmbedMode::euclidean,
                                      {Vec{0.0, 0.0}, Vec{1e-9, 0.0}, Vec{8.0, 0.0}});
    CHECK(nce_loss(close, 0, 1, negs).loss < 1e-3);
    CHECK(nce_loss(close, 0, 1, negs).loss > 0.0);

    CHECK_THROWS_AS(nce_loss(t, 0, 1, std::span<const int>{}), std::invalid_argument);
    const int bad[] = {1};
    CHECK_THROWS_AS(nce_loss(t, 0, 1, bad), std::invalid_argument);
}

TEST_CASE("nce gradients match central finite differences in all modes") {
    Xoshiro256pp rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 60; ++trial) {
        const EmbedMode mode = trial % 3 == 0   ? EmbedMode::euclidean
                               : trial % 3 == 1 ? EmbedMode::hyperbolic
                                                : EmbedMode::clipped;
        const std::size_t dim = 3;
        EmbeddingTable t;
        t.mode = mode;
        t.curv = Curvature{};
        for (int i = 0; i < 5; ++i) {
            Vec p = random_vec(rng, dim, mode == EmbedMode::euclidean ? 1.0 : 0.25);
            t.points.push_back(std::move(p));
        }
        const int negatives[] = {2, 3, 4};

        const NceResult res = nce_loss(t, 0, 1, negatives);
        auto loss_of_point = [&](int node) {
            return [&t, node, &negatives]() {
                (void)node;
                return nce_loss(t, 0, 1, negatives).loss;
            };
        };
        worst = std::max(worst, check_gradient(loss_of_point(0), t.points[0], res.d_u));
        worst = std::max(worst, check_gradient(loss_of_point(1), t.points[1], res.d_v));
        worst = std::max(worst, check_gradient(loss_of_point(2), t.points[2], res.d_neg[0]));
        worst = std::max(worst, check_gradient(loss_of_point(4), t.points[4], res.d_neg[2]));
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("map_score") {
    const Hierarchy h = chain3();
    // perfect chain layout: partners nearer than non-partners
    EmbeddingTable good = table_with(EmbedMode::euclidean,
                                     {Vec{0.0, 0.0}, Vec{1.0, 0.0}, Vec{2.0, 0.0}});
    CHECK(map_score(good, h) == doctest::Approx(1.0));

    // b sits between a and c; swapping a's position ruins a's ranking
    EmbeddingTable bad = table_with(EmbedMode::euclidean,
                                    {Vec{0.0, 0.0}, Vec{2.0, 0.0}, Vec{0.9, 0.0}});
    CHECK(map_score(bad, h) < 1.0);

    // isolated node excluded with a warning
    Hierarchy with_isolated = h;
    with_isolated.nodes.push_back("d");
    EmbeddingTable four = table_with(
        EmbedMode::euclidean, {Vec{0.0, 0.0}, Vec{1.0, 0.0}, Vec{2.0, 0.0}, Vec{5.0, 0.0}});
    std::size_t excluded = 0;
    const double m = map_score(four, with_isolated, &excluded);
    CHECK(excluded == 1);
    CHECK(m == doctest::Approx(1.0));
}

TEST_CASE("random embeddings score near the permutation baseline") {
    // With distances independent of the labels, expected AP equals the mean AP
    // of a random permutation; estimate both by Monte Carlo.
    const std::size_t n = 12;
    Hierarchy h;
    for (std::size_t i = 0; i < n; ++i) h.nodes.push_back("n" + std::to_string(i));
    for (int i = 1; i < static_cast<int>(n); ++i) h.edges.emplace_back(i, (i - 1) / 2);

    Xoshiro256pp rng(9);
    double mean_random_map = 0.0;
    const int trials = 300;
    for (int trial = 0; trial < trials; ++trial) {
        EmbeddingTable t;
        t.mode = EmbedMode::euclidean;
        t.points.clear();
        for (std::size_t i = 0; i < n; ++i) t.points.push_back(random_vec(rng, 6, 1.0));
        mean_random_map += map_score(t, h);
    }
    mean_random_map /= trials;

    // permutation baseline: scatter each node's partners uniformly among the
    // n-1 candidate ranks
    const auto partners = h.partner_sets();
    double baseline = 0.0;
    const int perm_trials = 4000;
    std::vector<int> ranks(n - 1);
    for (int trial = 0; trial < perm_trials; ++trial) {
        double total = 0.0;
        for (std::size_t u = 0; u < n; ++u) {
            for (std::size_t i = 0; i < n - 1; ++i) ranks[i] = static_cast<int>(i);
            shuffle(ranks, rng);
            const std::size_t k = partners[u].size();
            // the first k entries of the permuted rank list are the partners
            std::vector<int> taken(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(k));
            std::sort(taken.begin(), taken.end());
            double ap = 0.0;
            for (std::size_t j = 0; j < k; ++j)
                ap += static_cast<double>(j + 1) / static_cast<double>(taken[j] + 1);
            total += ap / static_cast<double>(k);
        }
        baseline += total / static_cast<double>(n);
    }
    baseline /= perm_trials;

    CHECK(std::fabs(mean_random_map - baseline) < 0.03);
}

TEST_CASE("training on the 3-node chain reaches mAP 1") {
    const Hierarchy h = chain3();
    EmbedConfig cfg;
    cfg.dim = 2;
    cfg.epochs = 200;
    cfg.lr = 0.2;
    cfg.negatives = 1;
    cfg.seed = 3;

    for (EmbedMode mode : {EmbedMode::euclidean, EmbedMode::hyperbolic, EmbedMode::clipped}) {
        const EmbeddingTable t = train_embeddings(h, mode, cfg);
        CHECK(map_score(t, h) == doctest::Approx(1.0));
    }
}

TEST_CASE("zero epochs returns the initial table, uniform in a tiny ball") {
    const Hierarchy h = chain3();
    EmbedConfig cfg;
    cfg.dim = 4;
    cfg.epochs = 0;
    cfg.seed = 11;
    const EmbeddingTable t = train_embeddings(h, EmbedMode::hyperbolic, cfg);
    REQUIRE(t.points.size() == 3);
    for (const Vec& p : t.points) {
        CHECK(norm(p) <= cfg.init_radius);
        CHECK(norm(p) > 0.0);
    }

    // deterministic per seed
    const EmbeddingTable t2 = train_embeddings(h, EmbedMode::hyperbolic, cfg);
    for (std::size_t i = 0; i < 3; ++i) CHECK(max_abs_diff(t.points[i], t2.points[i]) == 0.0);
}

TEST_CASE("clipped mode respects the norm bound every epoch") {
    const Hierarchy h = chain3();
    EmbedConfig cfg;
    cfg.dim = 2;
    cfg.lr = 0.5;
    cfg.negatives = 1;
    cfg.seed = 13;
    const double bound = std::tanh(1.0);
    for (int epochs : {1, 5, 20, 60}) {
        cfg.epochs = epochs;
        const EmbeddingTable t = train_embeddings(h, EmbedMode::clipped, cfg);
        for (const Vec& p : t.points) CHECK(norm(p) <= bound + 1e-12);
    }
}

TEST_CASE("chain training loss decreases over early epochs") {
    const Hierarchy h = chain3();
    EmbedConfig cfg;
    cfg.dim = 2;
    cfg.lr = 0.2;
    cfg.negatives = 1;
    cfg.seed = 17;
    cfg.burn_in_epochs = 0;

    auto epoch_loss = [&](const EmbeddingTable& t) {
        // all candidate negatives for each positive, fixed evaluation
        double total = 0.0;
        for (const auto& [u, v] : h.edges) {
            for (int w = 0; w < 3; ++w) {
                if (w == u || w == v) continue;
                const int negs[] = {w};
                total += nce_loss(t, u, v, negs).loss;
            }
        }
        return total;
    };

    cfg.epochs = 1;
    const double after1 = epoch_loss(train_embeddings(h, EmbedMode::hyperbolic, cfg));
    cfg.epochs = 10;
    const double after10 = epoch_loss(train_embeddings(h, EmbedMode::hyperbolic, cfg));
    CHECK(after10 <= after1);
}
