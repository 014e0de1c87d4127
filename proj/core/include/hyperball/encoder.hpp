#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "hyperball/rng.hpp"
#include "hyperball/vecmath.hpp"

namespace hyperball {

// Dense feed-forward Euclidean encoder with analytic backpropagation. Batches
// are row-major so each sample row can be viewed as a contiguous span.

enum class Activation { relu, tanh, identity };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation act);

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct DenseLayer {
    Eigen::MatrixXd W;  // out x in
    Eigen::VectorXd b;  // out
    Activation act = Activation::relu;
};

struct Encoder {
    std::vector<DenseLayer> layers;

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().W.cols(); }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().W.rows(); }
    /// Throws std::invalid_argument on inconsistent chained dimensions or
    /// non-finite parameters.
    void validate() const;

    /// widths = {input, hidden..., output}; Kaiming-uniform fan-in init,
    /// biases zero. Hidden layers use hidden_act, the last layer out_act.
    static Encoder init(const std::vector<std::size_t>& widths, Activation hidden_act,
                        Activation out_act, Xoshiro256pp& rng);
};

/// Single-sample forward pass.
Vec encode(const Encoder& enc, std::span<const double> input);

struct ForwardCache {
    RowMat input;
    std::vector<RowMat> post;  // activation output per layer
};

/// Batch forward pass; rows are samples. Fills the cache when given.
RowMat encode_batch(const Encoder& enc, const RowMat& inputs, ForwardCache* cache);

struct EncoderGrads {
    std::vector<Eigen::MatrixXd> dW;
    std::vector<Eigen::VectorXd> db;

    static EncoderGrads zeros_like(const Encoder& enc);
    double squared_norm() const;
    void scale(double s);
};

/// Reverse pass. d_out rows are d(loss)/d(features) per sample; the returned
/// parameter gradients are summed over rows (pre-scale d_out by 1/batch for
/// means). Fills d_input with d(loss)/d(input) rows when given. Throws
/// NumericError naming the layer if a gradient goes non-finite.
EncoderGrads backward_batch(const Encoder& enc, const ForwardCache& cache, const RowMat& d_out,
                            RowMat* d_input = nullptr);

/// Forward-mode directional derivative of encode() along a parameter
/// perturbation.
Vec encode_jvp(const Encoder& enc, std::span<const double> input, const EncoderGrads& direction);

}  // namespace hyperball
