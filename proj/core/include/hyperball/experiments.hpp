#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "hyperball/attacks.hpp"
#include "hyperball/config.hpp"
#include "hyperball/data.hpp"
#include "hyperball/embed.hpp"
#include "hyperball/metrics.hpp"
#include "hyperball/train.hpp"

namespace hyperball {

// Experiment drivers behind the CLI subcommands. Every driver is
// deterministic for a fixed config: a rerun produces byte-identical output
// files. Floats in CSV/JSON are printed with 9 significant digits.

/// Train/test pair per config (synthetic splits are carved per class out of
/// one deterministic draw; MNIST comes from the IDX files under data_dir).
std::pair<Dataset, Dataset> load_train_test(const ExperimentConfig& cfg);

/// True when the MNIST IDX files are present under cfg.data_dir.
bool mnist_available(const ExperimentConfig& cfg);

/// Fresh TrainState per config (mode decides head kind and clip behaviour).
TrainState make_state(const ExperimentConfig& cfg, std::size_t input_dim);

struct ClassificationOutcome {
    MetricTrace trace;
    std::vector<double> epoch_test_accuracy;
    EvalResult final_eval;
    TrainState state;
};

ClassificationOutcome run_classification(const ExperimentConfig& cfg);

struct DiagnosticOutcome {
    MetricTrace trace;
    std::vector<std::size_t> tracked;                           // sample indices
    std::vector<std::array<double, 2>> initial_positions;       // per tracked sample
    std::vector<std::vector<std::array<double, 2>>> trajectory; // [step][sample]
    std::vector<double> riemannian_factor_mean;                 // per step, at batch-mean norm
    std::vector<double> riemannian_factor_min;                  // per step, at batch-max norm
};

/// Requires dim == 2 and a hyperbolic mode.
DiagnosticOutcome run_gradient_diagnostic(const ExperimentConfig& cfg);

struct SweepROutcome {
    std::vector<double> r_values;
    std::vector<double> test_accuracy;
};

SweepROutcome run_sweep_r(const ExperimentConfig& cfg);

struct SweepDimOutcome {
    std::vector<std::size_t> dims;
    std::vector<double> clipped_accuracy;
    std::vector<double> euclidean_accuracy;
};

SweepDimOutcome run_sweep_dim(const ExperimentConfig& cfg);

struct AttackOutcome {
    double clean_accuracy = 0.0;
    double robust_accuracy = 0.0;
    std::size_t evaluated = 0;
};

AttackOutcome run_attack(const ExperimentConfig& cfg);

struct OodOutcome {
    std::vector<double> in_scores;   // raw ood_score values
    std::vector<double> out_scores;
    OodMetrics metrics;              // larger-is-in-distribution orientation
};

OodOutcome run_ood(const ExperimentConfig& cfg);

struct EmbedOutcome {
    Hierarchy hierarchy;
    EmbeddingTable table;
    double map = 0.0;
    std::size_t excluded = 0;
};

EmbedOutcome run_embed(const ExperimentConfig& cfg);

/// Rooted tree with the given branching factor and `levels` levels below the
/// root, edges forming the transitive closure (every node to each ancestor).
Hierarchy make_tree_hierarchy(std::size_t levels, std::size_t branching);

/// Runs a subcommand end to end and writes its CSV/JSON outputs into out_dir.
/// Valid names: train-classifier, diagnose-gradients, sweep-r, sweep-dim,
/// attack, ood, embed.
void run_subcommand(const std::string& name, const ExperimentConfig& cfg,
                    const std::string& out_dir);

/// %.9g formatting used for all emitted floats.
std::string format_float(double v);

}  // namespace hyperball
