#include <doctest.h>

#include <sstream>

#include "hyperball/config.hpp"
#include "hyperball/errors.hpp"

using namespace hyperball;

namespace {
ExperimentConfig parse_str(const std::string& text) {
    std::istringstream in(text);
    return ExperimentConfig::parse(in);
}
}  // namespace

TEST_CASE("flat key = value parsing with comments") {
    const ExperimentConfig cfg = parse_str(
        "# experiment\n"
        "mode = vanilla\n"
        "dataset = hgaussians\n"
        "dim = 2\n"
        "hidden = 64,32\n"
        "lr = 0.05\n"
        "seed = 9\n"
        "\n"
        "r_values = 0.1, 1, 15\n");
    CHECK(cfg.mode == ModelMode::vanilla);
    CHECK(cfg.dataset == "hgaussians");
    CHECK(cfg.dim == 2);
    CHECK(cfg.hidden == std::vector<std::size_t>{64, 32});
    CHECK(cfg.lr == 0.05);
    CHECK(cfg.seed == 9);
    CHECK(cfg.r_values == std::vector<double>{0.1, 1.0, 15.0});
}

TEST_CASE("unknown keys are hard errors") {
    CHECK_THROWS_WITH_AS(parse_str("learning_rate = 0.1\n"),
                         doctest::Contains("unknown key"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_str("mode = clipped\nmode = vanilla\n"),
                         doctest::Contains("duplicate key"), ConfigError);
    CHECK_THROWS_AS(parse_str("epochs ten\n"), ConfigError);
    CHECK_THROWS_AS(parse_str("lr = fast\n"), ConfigError);
    CHECK_THROWS_AS(parse_str("lr = 0.1x\n"), ConfigError);
}

TEST_CASE("validation rejects nonsense") {
    CHECK_THROWS_AS(parse_str("momentum = 1.0\n"), ConfigError);
    CHECK_THROWS_AS(parse_str("curvature = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_str("dataset = cifar10\n"), ConfigError);
    CHECK_THROWS_AS(parse_str("batch = 0\n"), ConfigError);
    CHECK_THROWS_AS(parse_str("mode = temperature\ntemperature = 0\n"), ConfigError);
}

TEST_CASE("clip defaults depend on the mode") {
    CHECK(parse_str("mode = clipped\n").effective_clip_r() == 1.0);
    CHECK(parse_str("mode = vanilla\n").effective_clip_r() == 15.0);
    CHECK(parse_str("mode = vanilla\nclip_r = 3\n").effective_clip_r() == 3.0);

    const ClipConfig hard = parse_str("mode = clipped\n").clip_config();
    CHECK(hard.mode == ClipMode::hard_clip);
    CHECK(hard.r == 1.0);
    CHECK(parse_str("mode = euclidean\n").clip_config().mode == ClipMode::none);
    CHECK(parse_str("mode = soft\nbeta = 0.5\n").clip_config().beta == 0.5);
    CHECK(parse_str("mode = temperature\ntemperature = 0.25\n").clip_config().temperature == 0.25);
}

TEST_CASE("encoder widths chain input, hidden, embedding") {
    const ExperimentConfig cfg = parse_str("hidden = 8,4\ndim = 2\n");
    CHECK(cfg.encoder_widths(16) == std::vector<std::size_t>{16, 8, 4, 2});
}
