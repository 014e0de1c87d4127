#include "hyperball/train.hpp"

#include <cmath>
#include <stdexcept>

#include "hyperball/errors.hpp"

namespace hyperball {

namespace {

RowMat batch_matrix(std::span<const SampleRef> batch, std::size_t dim) {
    RowMat inputs(static_cast<Eigen::Index>(batch.size()), static_cast<Eigen::Index>(dim));
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (batch[i].x.size() != dim)
            throw std::invalid_argument("batch sample dimension mismatch");
        for (std::size_t j = 0; j < dim; ++j)
            inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = batch[i].x[j];
    }
    return inputs;
}

std::span<const double> row_span(const RowMat& m, std::size_t i) {
    return {m.data() + i * static_cast<std::size_t>(m.cols()), static_cast<std::size_t>(m.cols())};
}

}  // namespace

LinearHead LinearHead::init(std::size_t classes, std::size_t dim, Xoshiro256pp& rng) {
    LinearHead head;
    const double sigma = 1.0 / std::sqrt(static_cast<double>(dim));
    head.W.resize(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < head.W.rows(); ++i)
        for (Eigen::Index j = 0; j < head.W.cols(); ++j) head.W(i, j) = sigma * rng.normal();
    head.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(classes));
    return head;
}

std::size_t TrainState::classes() const {
    if (hyperbolic()) return std::get<MlrHead>(head).classes();
    return static_cast<std::size_t>(std::get<LinearHead>(head).W.rows());
}

static MomentumBuffers make_buffers(const Encoder& enc, const LinearHead* lin) {
    MomentumBuffers vel;
    for (const DenseLayer& layer : enc.layers) {
        vel.W.emplace_back(Eigen::MatrixXd::Zero(layer.W.rows(), layer.W.cols()));
        vel.b.emplace_back(Eigen::VectorXd::Zero(layer.b.size()));
    }
    if (lin) {
        vel.lin_W = Eigen::MatrixXd::Zero(lin->W.rows(), lin->W.cols());
        vel.lin_b = Eigen::VectorXd::Zero(lin->b.size());
    }
    return vel;
}

TrainState TrainState::init_hyperbolic(const std::vector<std::size_t>& encoder_widths,
                                       std::size_t classes, const ClipConfig& clip, Curvature curv,
                                       std::uint64_t seed, Activation hidden_act) {
    TrainState state;
    state.rng = Xoshiro256pp(seed);
    state.encoder = Encoder::init(encoder_widths, hidden_act, Activation::identity, state.rng);
    state.head = MlrHead::init(classes, encoder_widths.back(), curv, state.rng);
    state.clip = clip;
    state.curv = curv;
    state.vel = make_buffers(state.encoder, nullptr);
    return state;
}

TrainState TrainState::init_euclidean(const std::vector<std::size_t>& encoder_widths,
                                      std::size_t classes, std::uint64_t seed,
                                      Activation hidden_act) {
    TrainState state;
    state.rng = Xoshiro256pp(seed);
    state.encoder = Encoder::init(encoder_widths, hidden_act, Activation::identity, state.rng);
    LinearHead lin = LinearHead::init(classes, encoder_widths.back(), state.rng);
    state.vel = make_buffers(state.encoder, &lin);
    state.head = std::move(lin);
    return state;
}

BatchGrads backward(const TrainState& state, std::span<const SampleRef> batch) {
    if (batch.empty()) throw std::invalid_argument("backward: empty batch");
    const std::size_t bsize = batch.size();
    const double inv_b = 1.0 / static_cast<double>(bsize);

    RowMat inputs = batch_matrix(batch, state.encoder.input_dim());
    ForwardCache cache;
    RowMat features = encode_batch(state.encoder, inputs, &cache);

    BatchGrads out;
    RowMat d_features(features.rows(), features.cols());
    std::size_t correct = 0;

    if (state.hyperbolic()) {
        const MlrHead& head = std::get<MlrHead>(state.head);
        out.d_p.assign(head.classes(), Vec(head.dim(), 0.0));
        out.d_a.assign(head.classes(), Vec(head.dim(), 0.0));
        for (std::size_t i = 0; i < bsize; ++i) {
            HeadGrads hg = loss_and_grads(head, row_span(features, i), batch[i].y, state.clip);
            out.loss += hg.loss;
            const double en = hg.lifted.norm();
            out.mean_embed_norm += en;
            out.max_embed_norm = std::max(out.max_embed_norm, en);
            if (argmax_class(hg.logits) == batch[i].y) ++correct;
            for (std::size_t j = 0; j < hg.d_features.size(); ++j)
                d_features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    hg.d_features[j] * inv_b;
            for (std::size_t k = 0; k < head.classes(); ++k) {
                add_scaled(out.d_p[k], hg.d_p[k], inv_b);
                add_scaled(out.d_a[k], hg.d_a[k], inv_b);
            }
        }
    } else {
        const LinearHead& head = std::get<LinearHead>(state.head);
        out.d_lin_W = Eigen::MatrixXd::Zero(head.W.rows(), head.W.cols());
        out.d_lin_b = Eigen::VectorXd::Zero(head.b.size());
        for (std::size_t i = 0; i < bsize; ++i) {
            Eigen::VectorXd f = features.row(static_cast<Eigen::Index>(i)).transpose();
            Eigen::VectorXd logits = head.W * f + head.b;
            const Vec logits_v(logits.data(), logits.data() + logits.size());
            SoftmaxLoss sl = softmax_cross_entropy(logits_v, batch[i].y);
            out.loss += sl.loss;
            const double fn = f.norm();
            out.mean_embed_norm += fn;
            out.max_embed_norm = std::max(out.max_embed_norm, fn);
            if (argmax_class(logits_v) == batch[i].y) ++correct;
            Eigen::Map<const Eigen::VectorXd> dl(sl.dlogits.data(), logits.size());
            out.d_lin_W += inv_b * dl * f.transpose();
            out.d_lin_b += inv_b * dl;
            d_features.row(static_cast<Eigen::Index>(i)) = inv_b * (head.W.transpose() * dl).transpose();
        }
    }

    out.loss *= inv_b;
    out.mean_embed_norm *= inv_b;
    out.accuracy = static_cast<double>(correct) * inv_b;
    out.enc = backward_batch(state.encoder, cache, d_features);
    out.encoder_grad_norm = std::sqrt(out.enc.squared_norm());
    if (!std::isfinite(out.loss) || !std::isfinite(out.encoder_grad_norm))
        throw NumericError("backward: non-finite batch loss or encoder gradient");
    return out;
}

void sgd_step(TrainState& state, const BatchGrads& grads) {
    for (std::size_t l = 0; l < state.encoder.layers.size(); ++l) {
        state.vel.W[l] = state.momentum * state.vel.W[l] + grads.enc.dW[l];
        state.vel.b[l] = state.momentum * state.vel.b[l] + grads.enc.db[l];
        state.encoder.layers[l].W -= state.lr_euclid * state.vel.W[l];
        state.encoder.layers[l].b -= state.lr_euclid * state.vel.b[l];
    }
    if (!state.hyperbolic()) {
        LinearHead& head = std::get<LinearHead>(state.head);
        state.vel.lin_W = state.momentum * state.vel.lin_W + grads.d_lin_W;
        state.vel.lin_b = state.momentum * state.vel.lin_b + grads.d_lin_b;
        head.W -= state.lr_euclid * state.vel.lin_W;
        head.b -= state.lr_euclid * state.vel.lin_b;
    }
}

void rsgd_step(MlrHead& head, const std::vector<Vec>& d_p, const std::vector<Vec>& d_a, double lr) {
    for (std::size_t k = 0; k < head.classes(); ++k) {
        TangentVector rg = riemannian_scale(head.p[k], d_p[k]);
        for (double& v : rg.v) v *= -lr;
        head.p[k] = exp_at(head.p[k], rg);
        add_scaled(head.a[k], d_a[k], -lr);
    }
}

StepRecord train_step(TrainState& state, std::span<const SampleRef> batch) {
    BatchGrads grads = backward(state, batch);
    if (state.hyperbolic())
        rsgd_step(std::get<MlrHead>(state.head), grads.d_p, grads.d_a, state.lr_hyp);
    sgd_step(state, grads);
    ++state.step;
    return StepRecord{grads.loss, grads.encoder_grad_norm, grads.mean_embed_norm,
                      grads.max_embed_norm, grads.accuracy};
}

double taylor_step_check(const TrainState& state, std::span<const SampleRef> batch, double eta) {
    if (!state.hyperbolic())
        throw std::invalid_argument("taylor_step_check: needs a hyperbolic head");
    BatchGrads grads = backward(state, batch);

    const SampleRef& probe = batch.front();
    const Vec f0 = encode(state.encoder, probe.x);
    const BallPoint x0 = lift(f0, state.clip, state.curv);

    // First-order prediction of the embedding after w <- w - eta*g.
    EncoderGrads direction = grads.enc;
    direction.scale(-eta);
    const Vec df = encode_jvp(state.encoder, probe.x, direction);
    const Vec dx = lift_jvp(f0, df, state.clip, state.curv);

    // Actual embedding after the step.
    Encoder stepped = state.encoder;
    for (std::size_t l = 0; l < stepped.layers.size(); ++l) {
        stepped.layers[l].W -= eta * grads.enc.dW[l];
        stepped.layers[l].b -= eta * grads.enc.db[l];
    }
    const Vec f1 = encode(stepped, probe.x);
    const BallPoint x1 = lift(f1, state.clip, state.curv);

    double dev2 = 0.0;
    for (std::size_t i = 0; i < x1.dim(); ++i) {
        const double d = x1.x[i] - (x0.x[i] + dx[i]);
        dev2 += d * d;
    }
    return std::sqrt(dev2);
}

Vec model_logits(const TrainState& state, std::span<const double> x) {
    const Vec features = encode(state.encoder, x);
    if (state.hyperbolic())
        return forward(std::get<MlrHead>(state.head), features, state.clip).logits;
    const LinearHead& head = std::get<LinearHead>(state.head);
    Eigen::Map<const Eigen::VectorXd> f(features.data(), static_cast<Eigen::Index>(features.size()));
    Eigen::VectorXd logits = head.W * f + head.b;
    return Vec(logits.data(), logits.data() + logits.size());
}

Vec input_gradient(const TrainState& state, std::span<const double> x, int y) {
    RowMat input(1, static_cast<Eigen::Index>(x.size()));
    for (std::size_t j = 0; j < x.size(); ++j) input(0, static_cast<Eigen::Index>(j)) = x[j];
    ForwardCache cache;
    RowMat features = encode_batch(state.encoder, input, &cache);

    RowMat d_features(1, features.cols());
    if (state.hyperbolic()) {
        HeadGrads hg = loss_and_grads(std::get<MlrHead>(state.head), row_span(features, 0), y,
                                      state.clip);
        for (std::size_t j = 0; j < hg.d_features.size(); ++j)
            d_features(0, static_cast<Eigen::Index>(j)) = hg.d_features[j];
    } else {
        const LinearHead& head = std::get<LinearHead>(state.head);
        Eigen::VectorXd f = features.row(0).transpose();
        Eigen::VectorXd logits = head.W * f + head.b;
        SoftmaxLoss sl = softmax_cross_entropy(Vec(logits.data(), logits.data() + logits.size()), y);
        Eigen::Map<const Eigen::VectorXd> dl(sl.dlogits.data(), logits.size());
        d_features.row(0) = (head.W.transpose() * dl).transpose();
    }

    RowMat d_input;
    backward_batch(state.encoder, cache, d_features, &d_input);
    Vec out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) out[j] = d_input(0, static_cast<Eigen::Index>(j));
    return out;
}

EvalResult evaluate(const TrainState& state, std::span<const SampleRef> samples) {
    EvalResult res;
    const std::size_t classes = state.classes();
    res.per_class_accuracy.assign(classes, 0.0);
    res.per_class_count.assign(classes, 0);
    std::vector<std::size_t> per_class_correct(classes, 0);
    std::size_t correct = 0;
    for (const SampleRef& s : samples) {
        const Vec logits = model_logits(state, s.x);
        res.mean_loss += softmax_cross_entropy(logits, s.y).loss;
        const int pred = argmax_class(logits);
        ++res.per_class_count[static_cast<std::size_t>(s.y)];
        if (pred == s.y) {
            ++correct;
            ++per_class_correct[static_cast<std::size_t>(s.y)];
        }
    }
    if (!samples.empty()) {
        res.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
        res.mean_loss /= static_cast<double>(samples.size());
    }
    for (std::size_t k = 0; k < classes; ++k)
        res.per_class_accuracy[k] = res.per_class_count[k] == 0
                                        ? 0.0
                                        : static_cast<double>(per_class_correct[k]) /
                                              static_cast<double>(res.per_class_count[k]);
    return res;
}

}  // namespace hyperball
