#include <doctest.h>

#include <cmath>

#include "hyperball/attacks.hpp"
#include "hyperball/data.hpp"
#include "support/testutil.hpp"

using namespace hyperball;
using namespace hyperball::testutil;

namespace {

TrainState small_trained_model(std::uint64_t seed, const Dataset& data, int epochs) {
    TrainState state = TrainState::init_hyperbolic({data.dim(), 8, 4}, data.num_classes,
                                                   ClipConfig::hard(1.0), Curvature{}, seed);
    const auto refs = data.refs();
    for (int e = 0; e < epochs; ++e)
        for (std::size_t start = 0; start < refs.size(); start += 16)
            train_step(state, std::span(refs).subspan(start,
                                                      std::min<std::size_t>(16, refs.size() - start)));
    return state;
}

double sample_loss(const TrainState& state, std::span<const double> x, int y) {
    return softmax_cross_entropy(model_logits(state, x), y).loss;
}

}  // namespace

TEST_CASE("sign_step follows the sign rule") {
    CHECK(sign_step(Vec{0.3, -0.2}, 0.1) == Vec{0.1, -0.1});
    CHECK(sign_step(Vec{0.0, 5.0}, 0.2) == Vec{0.0, 0.2});
}

TEST_CASE("fgsm with eps 0 returns the input unchanged") {
    const Dataset data = make_gaussians(2, 4, 20, 0.3, 1);
    const TrainState state = small_trained_model(2, data, 2);
    const Vec adv = fgsm(state, data.features[0], data.labels[0], 0.0, false);
    CHECK(max_abs_diff(adv, data.features[0]) == 0.0);
    CHECK_THROWS_AS(fgsm(state, data.features[0], 0, -0.1, false), std::invalid_argument);
}

TEST_CASE("single-step pgd with step_size = eps equals fgsm") {
    const Dataset data = make_gaussians(3, 5, 20, 0.3, 7);
    const TrainState state = small_trained_model(8, data, 3);
    for (std::size_t i = 0; i < 10; ++i) {
        const Vec a = fgsm(state, data.features[i], data.labels[i], 0.15, false);
        const Vec b = pgd(state, data.features[i], data.labels[i], 0.15, 1, 0.15, false);
        CHECK(max_abs_diff(a, b) == 0.0);
    }
}

TEST_CASE("pgd stays inside the l-infinity ball and the unit box") {
    const Dataset data = make_gaussians(2, 4, 20, 0.3, 17);
    const TrainState state = small_trained_model(18, data, 3);
    const double eps = 0.12;
    for (std::size_t i = 0; i < 15; ++i) {
        const Vec adv = pgd(state, data.features[i], data.labels[i], eps, 7, 0.05, false);
        for (std::size_t j = 0; j < adv.size(); ++j)
            CHECK(std::fabs(adv[j] - data.features[i][j]) <= eps + 1e-12);
    }

    // clamped variant: inputs in [0,1] stay in [0,1]
    Dataset unit = data;
    unit.clamp01 = true;
    for (auto& x : unit.features)
        for (double& v : x) v = std::fabs(v) / 4.0;
    const TrainState small = small_trained_model(19, unit, 2);
    for (std::size_t i = 0; i < 10; ++i) {
        const Vec adv = pgd(small, unit.features[i], unit.labels[i], 0.3, 5, 0.2, true);
        for (double v : adv) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("pgd is at least as strong as fgsm on most samples") {
    const Dataset data = make_gaussians(3, 6, 40, 0.5, 23);
    const TrainState state = small_trained_model(24, data, 5);
    const double eps = 0.25;
    int pgd_wins = 0, total = 0;
    for (std::size_t i = 0; i < 60; ++i) {
        const Vec a = fgsm(state, data.features[i], data.labels[i], eps, false);
        const Vec b = pgd(state, data.features[i], data.labels[i], eps, 10, eps / 4.0, false);
        const double fl = sample_loss(state, a, data.labels[i]);
        const double pl = sample_loss(state, b, data.labels[i]);
        ++total;
        if (pl >= fl - 1e-12) ++pgd_wins;
    }
    CHECK(pgd_wins >= total * 8 / 10);
}
