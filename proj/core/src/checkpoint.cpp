#include "hyperball/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "hyperball/errors.hpp"

namespace hyperball {

namespace {

constexpr char kMagic[8] = {'H', 'B', 'C', 'K', 'P', 'T', '0', '1'};

struct Writer {
    std::ofstream out;

    explicit Writer(const std::string& path) : out(path, std::ios::binary) {
        if (!out) throw ConfigError("cannot open checkpoint for writing: " + path);
    }
    void bytes(const void* p, std::size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }
    void doubles(const double* p, std::size_t n) { bytes(p, n * sizeof(double)); }
    void matrix(const Eigen::MatrixXd& m) {
        u32(static_cast<std::uint32_t>(m.rows()));
        u32(static_cast<std::uint32_t>(m.cols()));
        doubles(m.data(), static_cast<std::size_t>(m.size()));
    }
    void vector(const Eigen::VectorXd& v) {
        u32(static_cast<std::uint32_t>(v.size()));
        doubles(v.data(), static_cast<std::size_t>(v.size()));
    }
    void vec(const Vec& v) {
        u32(static_cast<std::uint32_t>(v.size()));
        doubles(v.data(), v.size());
    }
};

struct Reader {
    std::ifstream in;
    std::string path;

    explicit Reader(const std::string& p) : in(p, std::ios::binary), path(p) {
        if (!in) throw ConfigError("cannot open checkpoint: " + p);
    }
    void bytes(void* p, std::size_t n) {
        if (!in.read(static_cast<char*>(p), static_cast<std::streamsize>(n)))
            throw DataError(path + ": truncated checkpoint");
    }
    std::uint32_t u32() { std::uint32_t v; bytes(&v, sizeof v); return v; }
    std::uint64_t u64() { std::uint64_t v; bytes(&v, sizeof v); return v; }
    double f64() { double v; bytes(&v, sizeof v); return v; }
    Eigen::MatrixXd matrix() {
        const auto rows = u32();
        const auto cols = u32();
        Eigen::MatrixXd m(rows, cols);
        bytes(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
        return m;
    }
    Eigen::VectorXd vector() {
        const auto n = u32();
        Eigen::VectorXd v(n);
        bytes(v.data(), static_cast<std::size_t>(n) * sizeof(double));
        return v;
    }
    Vec vec() {
        const auto n = u32();
        Vec v(n);
        bytes(v.data(), static_cast<std::size_t>(n) * sizeof(double));
        return v;
    }
};

}  // namespace

void save_checkpoint(const TrainState& state, const std::string& path) {
    Writer w(path);
    w.bytes(kMagic, sizeof kMagic);
    w.u32(state.hyperbolic() ? 0u : 1u);
    w.u64(state.step);
    for (std::uint64_t s : state.rng.state()) w.u64(s);
    w.f64(state.lr_euclid);
    w.f64(state.lr_hyp);
    w.f64(state.momentum);
    w.f64(state.curv.c);
    w.u32(static_cast<std::uint32_t>(state.clip.mode));
    w.f64(state.clip.r);
    w.f64(state.clip.beta);
    w.f64(state.clip.temperature);

    w.u32(static_cast<std::uint32_t>(state.encoder.layers.size()));
    for (const DenseLayer& layer : state.encoder.layers) {
        w.u32(static_cast<std::uint32_t>(layer.act));
        w.matrix(layer.W);
        w.vector(layer.b);
    }
    for (std::size_t l = 0; l < state.encoder.layers.size(); ++l) {
        w.matrix(state.vel.W[l]);
        w.vector(state.vel.b[l]);
    }

    if (state.hyperbolic()) {
        const MlrHead& head = std::get<MlrHead>(state.head);
        w.u32(static_cast<std::uint32_t>(head.classes()));
        w.u32(static_cast<std::uint32_t>(head.dim()));
        for (std::size_t k = 0; k < head.classes(); ++k) {
            w.vec(head.p[k].x);
            w.vec(head.a[k]);
        }
    } else {
        const LinearHead& head = std::get<LinearHead>(state.head);
        w.matrix(head.W);
        w.vector(head.b);
        w.matrix(state.vel.lin_W);
        w.vector(state.vel.lin_b);
    }
    if (!w.out) throw ConfigError("failed writing checkpoint: " + path);
}

TrainState load_checkpoint(const std::string& path) {
    Reader r(path);
    char magic[8];
    r.bytes(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
        throw DataError(path + ": bad checkpoint magic");

    TrainState state;
    const std::uint32_t head_kind = r.u32();
    state.step = r.u64();
    std::array<std::uint64_t, 4> rng_state{};
    for (auto& s : rng_state) s = r.u64();
    state.rng.set_state(rng_state);
    state.lr_euclid = r.f64();
    state.lr_hyp = r.f64();
    state.momentum = r.f64();
    state.curv = Curvature(r.f64());
    state.clip.mode = static_cast<ClipMode>(r.u32());
    state.clip.r = r.f64();
    state.clip.beta = r.f64();
    state.clip.temperature = r.f64();

    const std::uint32_t n_layers = r.u32();
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        DenseLayer layer;
        layer.act = static_cast<Activation>(r.u32());
        layer.W = r.matrix();
        layer.b = r.vector();
        state.encoder.layers.push_back(std::move(layer));
    }
    for (std::uint32_t l = 0; l < n_layers; ++l) {
        state.vel.W.push_back(r.matrix());
        state.vel.b.push_back(r.vector());
    }

    if (head_kind == 0) {
        MlrHead head;
        head.curv = state.curv;
        const std::uint32_t classes = r.u32();
        const std::uint32_t dim = r.u32();
        (void)dim;
        for (std::uint32_t k = 0; k < classes; ++k) {
            head.p.emplace_back(r.vec(), state.curv);
            head.a.push_back(r.vec());
        }
        state.head = std::move(head);
    } else if (head_kind == 1) {
        LinearHead head;
        head.W = r.matrix();
        head.b = r.vector();
        state.vel.lin_W = r.matrix();
        state.vel.lin_b = r.vector();
        state.head = std::move(head);
    } else {
        throw DataError(path + ": unknown head kind");
    }
    state.encoder.validate();
    return state;
}

}  // namespace hyperball
