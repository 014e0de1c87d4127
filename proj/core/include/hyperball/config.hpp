#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "hyperball/embed.hpp"
#include "hyperball/encoder.hpp"
#include "hyperball/metrics.hpp"
#include "hyperball/mlr.hpp"

namespace hyperball {

/// Which classifier variant an experiment trains.
enum class ModelMode { clipped, vanilla, euclidean, soft, temperature, none };

ModelMode model_mode_from_string(const std::string& name);
std::string to_string(ModelMode mode);

/// Flat `key = value` experiment configuration. Unknown and duplicate keys are
/// hard errors; `#` starts a comment line.
struct ExperimentConfig {
    // model
    ModelMode mode = ModelMode::clipped;
    double clip_r = -1.0;  // <0: default 1.0 (clipped) or 15.0 (vanilla)
    double beta = 0.01;
    double temperature = 1.0;
    double curvature = 1.0;

    // data
    std::string dataset = "gaussians";  // gaussians | hgaussians | mnist
    std::string data_dir = "data/mnist";
    std::size_t classes = 4;
    std::size_t groups = 5;
    std::size_t leaves = 2;
    std::size_t data_dim = 16;
    std::size_t per_class = 200;
    std::size_t test_per_class = 50;
    double spread = 0.35;
    std::size_t train_limit = 0;  // 0 = all
    std::size_t test_limit = 0;

    // encoder / optimization
    std::vector<std::size_t> hidden = {64, 32};
    std::size_t dim = 8;  // embedding dimension n
    Activation activation = Activation::relu;
    int epochs = 10;
    std::size_t batch = 64;
    double lr = 0.1;
    double lr_hyp = 0.01;
    double momentum = 0.9;
    std::uint64_t seed = 1;

    // attack
    std::string attack = "fgsm";  // fgsm | pgd
    double eps = 0.2;
    int attack_steps = 40;
    double step_size = 0.01;
    std::size_t attack_limit = 0;

    // ood
    OodScoreKind score = OodScoreKind::softmax;
    double ood_temperature = 1.0;
    double shift = 6.0;

    // embedding reconstruction
    std::string edges;  // path; empty = synthetic tree
    std::size_t tree_levels = 3;
    std::size_t tree_branching = 5;
    EmbedMode embed_mode = EmbedMode::clipped;
    int embed_epochs = 200;
    double embed_lr = 0.3;
    int negatives = 10;
    int burn_in = 10;
    std::size_t embed_dim = 10;
    double init_radius = 1e-3;

    // sweeps
    std::vector<double> r_values = {0.1, 0.5, 1.0, 2.0, 5.0, 15.0};
    std::vector<std::size_t> dim_values = {2, 4, 8, 16};

    // diagnostic
    std::size_t track_samples = 6;

    static ExperimentConfig parse(std::istream& in);
    static ExperimentConfig from_file(const std::string& path);

    /// Throws ConfigError on invalid combinations.
    void validate() const;

    /// Clip behaviour implied by mode (+ clip_r / beta / temperature).
    ClipConfig clip_config() const;
    double effective_clip_r() const;
    EmbedConfig embed_config() const;
    std::vector<std::size_t> encoder_widths(std::size_t input_dim) const;
};

}  // namespace hyperball
