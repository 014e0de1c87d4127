#pragma once

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "hyperball/encoder.hpp"
#include "hyperball/mlr.hpp"

namespace hyperball {

// Training machinery: SGD with momentum for every Euclidean parameter, and
// Riemannian SGD for the hyperplane offsets p_k. One train_step is a single
// logical transaction on TrainState; states are never shared across trainers.

struct SampleRef {
    std::span<const double> x;
    int y = 0;
};

/// Plain linear softmax head; the in-framework Euclidean baseline.
struct LinearHead {
    Eigen::MatrixXd W;  // classes x dim
    Eigen::VectorXd b;

    static LinearHead init(std::size_t classes, std::size_t dim, Xoshiro256pp& rng);
};

struct MomentumBuffers {
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::VectorXd> b;
    Eigen::MatrixXd lin_W;  // only sized when the head is linear
    Eigen::VectorXd lin_b;
};

struct TrainState {
    Encoder encoder;
    std::variant<MlrHead, LinearHead> head;
    ClipConfig clip;  // applies when the head is hyperbolic
    Curvature curv;
    double lr_euclid = 0.1;
    double lr_hyp = 0.01;
    double momentum = 0.9;
    MomentumBuffers vel;
    std::uint64_t step = 0;
    Xoshiro256pp rng;

    bool hyperbolic() const { return std::holds_alternative<MlrHead>(head); }
    std::size_t classes() const;

    static TrainState init_hyperbolic(const std::vector<std::size_t>& encoder_widths,
                                      std::size_t classes, const ClipConfig& clip, Curvature curv,
                                      std::uint64_t seed,
                                      Activation hidden_act = Activation::relu);
    static TrainState init_euclidean(const std::vector<std::size_t>& encoder_widths,
                                     std::size_t classes, std::uint64_t seed,
                                     Activation hidden_act = Activation::relu);
};

struct StepRecord {
    double loss = 0.0;
    double encoder_grad_norm = 0.0;
    double mean_embed_norm = 0.0;  // mean ||x^H|| (hyperbolic) or mean feature norm
    double max_embed_norm = 0.0;
    double accuracy = 0.0;  // batch accuracy
};

/// Append-only per-step record of the training run.
struct MetricTrace {
    std::vector<StepRecord> records;
};

struct BatchGrads {
    EncoderGrads enc;
    std::vector<Vec> d_p;  // hyperbolic head gradients (mean over batch)
    std::vector<Vec> d_a;
    Eigen::MatrixXd d_lin_W;
    Eigen::VectorXd d_lin_b;
    double loss = 0.0;
    double encoder_grad_norm = 0.0;
    double mean_embed_norm = 0.0;
    double max_embed_norm = 0.0;
    double accuracy = 0.0;
};

/// Mean-over-batch gradients for every parameter; batch must be non-empty.
BatchGrads backward(const TrainState& state, std::span<const SampleRef> batch);

/// Momentum SGD on the Euclidean parameters: v <- mu*v + g, w <- w - lr*v.
void sgd_step(TrainState& state, const BatchGrads& grads);

/// Riemannian step on p_k (exp map of the rescaled gradient) and a plain
/// Euclidean step on a_k.
void rsgd_step(MlrHead& head, const std::vector<Vec>& d_p, const std::vector<Vec>& d_a, double lr);

/// backward + optimizer updates + step counter increment.
StepRecord train_step(TrainState& state, std::span<const SampleRef> batch);

/// How far one plain gradient step of size eta moves the first sample's
/// hyperbolic embedding away from its first-order prediction. The prediction
/// chains a forward-mode derivative through the encoder and the lift; the
/// deviation decays as O(eta^2).
double taylor_step_check(const TrainState& state, std::span<const SampleRef> batch, double eta);

Vec model_logits(const TrainState& state, std::span<const double> x);

/// d(loss)/d(input) for a single sample.
Vec input_gradient(const TrainState& state, std::span<const double> x, int y);

struct EvalResult {
    double accuracy = 0.0;
    double mean_loss = 0.0;
    std::vector<double> per_class_accuracy;
    std::vector<std::size_t> per_class_count;
};

EvalResult evaluate(const TrainState& state, std::span<const SampleRef> samples);

}  // namespace hyperball
