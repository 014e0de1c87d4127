#include "hyperball/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include "hyperball/errors.hpp"

namespace hyperball {

namespace {

void apply_activation(RowMat& z, Activation act) {
    switch (act) {
        case Activation::relu:
            z = z.cwiseMax(0.0);
            break;
        case Activation::tanh:
            z = z.array().tanh().matrix();
            break;
        case Activation::identity:
            break;
    }
}

// Derivative expressed in terms of the activation output.
RowMat activation_deriv_from_post(const RowMat& post, Activation act) {
    switch (act) {
        case Activation::relu:
            return (post.array() > 0.0).cast<double>().matrix();
        case Activation::tanh:
            return (1.0 - post.array().square()).matrix();
        case Activation::identity:
            return RowMat::Ones(post.rows(), post.cols());
    }
    return RowMat::Ones(post.rows(), post.cols());
}

}  // namespace

Activation activation_from_string(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "identity") return Activation::identity;
    throw ConfigError("unknown activation '" + name + "' (expected relu|tanh|identity)");
}

std::string to_string(Activation act) {
    switch (act) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::identity: return "identity";
    }
    return "?";
}

void Encoder::validate() const {
    if (layers.empty()) throw std::invalid_argument("Encoder: no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const DenseLayer& layer = layers[l];
        if (layer.W.rows() != layer.b.size())
            throw std::invalid_argument("Encoder: bias shape mismatch in layer " + std::to_string(l));
        if (l > 0 && layers[l - 1].W.rows() != layer.W.cols())
            throw std::invalid_argument("Encoder: chained dimensions inconsistent at layer " +
                                        std::to_string(l));
        if (!layer.W.allFinite() || !layer.b.allFinite())
            throw std::invalid_argument("Encoder: non-finite parameters in layer " + std::to_string(l));
    }
}

Encoder Encoder::init(const std::vector<std::size_t>& widths, Activation hidden_act,
                      Activation out_act, Xoshiro256pp& rng) {
    if (widths.size() < 2) throw std::invalid_argument("Encoder::init: need at least two widths");
    Encoder enc;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        DenseLayer layer;
        const auto in = static_cast<Eigen::Index>(widths[l]);
        const auto out = static_cast<Eigen::Index>(widths[l + 1]);
        const double limit = std::sqrt(6.0 / static_cast<double>(widths[l]));
        layer.W.resize(out, in);
        for (Eigen::Index i = 0; i < out; ++i)
            for (Eigen::Index j = 0; j < in; ++j) layer.W(i, j) = rng.uniform(-limit, limit);
        layer.b = Eigen::VectorXd::Zero(out);
        layer.act = (l + 2 == widths.size()) ? out_act : hidden_act;
        enc.layers.push_back(std::move(layer));
    }
    return enc;
}

Vec encode(const Encoder& enc, std::span<const double> input) {
    if (input.size() != enc.input_dim())
        throw std::invalid_argument("encode: input dimension mismatch");
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(input.data(), input.size());
    for (const DenseLayer& layer : enc.layers) {
        Eigen::VectorXd z = layer.W * a + layer.b;
        switch (layer.act) {
            case Activation::relu: a = z.cwiseMax(0.0); break;
            case Activation::tanh: a = z.array().tanh().matrix(); break;
            case Activation::identity: a = std::move(z); break;
        }
    }
    return Vec(a.data(), a.data() + a.size());
}

RowMat encode_batch(const Encoder& enc, const RowMat& inputs, ForwardCache* cache) {
    if (static_cast<std::size_t>(inputs.cols()) != enc.input_dim())
        throw std::invalid_argument("encode_batch: input dimension mismatch");
    if (cache) {
        cache->input = inputs;
        cache->post.clear();
        cache->post.reserve(enc.layers.size());
    }
    RowMat a = inputs;
    for (const DenseLayer& layer : enc.layers) {
        RowMat z = a * layer.W.transpose();
        z.rowwise() += layer.b.transpose();
        apply_activation(z, layer.act);
        a = std::move(z);
        if (cache) cache->post.push_back(a);
    }
    return a;
}

EncoderGrads EncoderGrads::zeros_like(const Encoder& enc) {
    EncoderGrads g;
    for (const DenseLayer& layer : enc.layers) {
        g.dW.emplace_back(Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols()));
        g.db.emplace_back(Eigen::VectorXd::Zero(layer.b.size()));
    }
    return g;
}

double EncoderGrads::squared_norm() const {
    double s = 0.0;
    for (const auto& m : dW) s += m.squaredNorm();
    for (const auto& v : db) s += v.squaredNorm();
    return s;
}

void EncoderGrads::scale(double s) {
    for (auto& m : dW) m *= s;
    for (auto& v : db) v *= s;
}

EncoderGrads backward_batch(const Encoder& enc, const ForwardCache& cache, const RowMat& d_out,
                            RowMat* d_input) {
    const std::size_t n_layers = enc.layers.size();
    if (cache.post.size() != n_layers)
        throw std::invalid_argument("backward_batch: cache does not match encoder");

    EncoderGrads grads;
    grads.dW.resize(n_layers);
    grads.db.resize(n_layers);

    RowMat delta = d_out;
    for (std::size_t l = n_layers; l-- > 0;) {
        const DenseLayer& layer = enc.layers[l];
        delta = delta.cwiseProduct(activation_deriv_from_post(cache.post[l], layer.act));
        const RowMat& prev = (l == 0) ? cache.input : cache.post[l - 1];
        grads.dW[l] = delta.transpose() * prev;
        grads.db[l] = delta.colwise().sum().transpose();
        if (!grads.dW[l].allFinite() || !grads.db[l].allFinite())
            throw NumericError("backward_batch: non-finite gradient in encoder layer " +
                               std::to_string(l));
        if (l > 0 || d_input) {
            RowMat next_delta = delta * layer.W;
            if (l == 0) {
                *d_input = std::move(next_delta);
            } else {
                delta = std::move(next_delta);
            }
        }
    }
    return grads;
}

Vec encode_jvp(const Encoder& enc, std::span<const double> input, const EncoderGrads& direction) {
    if (direction.dW.size() != enc.layers.size())
        throw std::invalid_argument("encode_jvp: direction does not match encoder");
    Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(input.data(), input.size());
    Eigen::VectorXd da = Eigen::VectorXd::Zero(a.size());
    for (std::size_t l = 0; l < enc.layers.size(); ++l) {
        const DenseLayer& layer = enc.layers[l];
        Eigen::VectorXd z = layer.W * a + layer.b;
        Eigen::VectorXd dz = direction.dW[l] * a + layer.W * da + direction.db[l];
        Eigen::VectorXd post;
        switch (layer.act) {
            case Activation::relu:
                post = z.cwiseMax(0.0);
                da = (z.array() > 0.0).cast<double>().matrix().cwiseProduct(dz);
                break;
            case Activation::tanh:
                post = z.array().tanh().matrix();
                da = (1.0 - post.array().square()).matrix().cwiseProduct(dz);
                break;
            case Activation::identity:
                post = z;
                da = dz;
                break;
        }
        a = std::move(post);
    }
    return Vec(da.data(), da.data() + da.size());
}

}  // namespace hyperball
