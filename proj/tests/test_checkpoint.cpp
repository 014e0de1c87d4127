#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hyperball/checkpoint.hpp"
#include "hyperball/data.hpp"
#include "hyperball/errors.hpp"
#include "support/testutil.hpp"

using namespace hyperball;
using namespace hyperball::testutil;

namespace {

namespace fs = std::filesystem;

std::string temp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

TrainState trained_state(bool hyperbolic) {
    const Dataset data = make_gaussians(3, 4, 20, 0.4, 31);
    TrainState state = hyperbolic
                           ? TrainState::init_hyperbolic({4, 6, 3}, 3, ClipConfig::hard(1.0),
                                                         Curvature{}, 41)
                           : TrainState::init_euclidean({4, 6, 3}, 3, 41);
    const auto refs = data.refs();
    for (int step = 0; step < 8; ++step)
        train_step(state, std::span(refs).subspan(static_cast<std::size_t>(step) * 6, 6));
    return state;
}

}  // namespace

TEST_CASE("checkpoints round-trip bit-exactly") {
    for (const bool hyperbolic : {true, false}) {
        TrainState state = trained_state(hyperbolic);
        const std::string p1 = temp_path(hyperbolic ? "hb_ckpt_h1" : "hb_ckpt_e1");
        const std::string p2 = temp_path(hyperbolic ? "hb_ckpt_h2" : "hb_ckpt_e2");
        save_checkpoint(state, p1);
        TrainState loaded = load_checkpoint(p1);
        save_checkpoint(loaded, p2);
        CHECK(file_bytes(p1) == file_bytes(p2));

        CHECK(loaded.step == state.step);
        CHECK(loaded.rng.state() == state.rng.state());
        CHECK(loaded.lr_euclid == state.lr_euclid);

        // training continues identically from the restored state
        const Dataset more = make_gaussians(3, 4, 12, 0.4, 77);
        const auto refs = more.refs();
        const StepRecord a = train_step(state, refs);
        const StepRecord b = train_step(loaded, refs);
        CHECK(a.loss == b.loss);
        CHECK(a.encoder_grad_norm == b.encoder_grad_norm);
        CHECK(a.mean_embed_norm == b.mean_embed_norm);
    }
}

TEST_CASE("corrupt checkpoints are rejected") {
    const std::string path = temp_path("hb_ckpt_bad");
    {
        std::ofstream out(path, std::ios::binary);
        out << "NOTACKPTFILE----------------";
    }
    CHECK_THROWS_AS(load_checkpoint(path), DataError);
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt"), ConfigError);

    // truncation is detected
    TrainState state = trained_state(true);
    const std::string full = temp_path("hb_ckpt_full");
    save_checkpoint(state, full);
    const std::string bytes = file_bytes(full);
    const std::string cut = temp_path("hb_ckpt_cut");
    {
        std::ofstream out(cut, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(load_checkpoint(cut), DataError);
}
