#include "hyperball/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hyperball/errors.hpp"
#include "hyperball/mlr.hpp"

namespace hyperball {

namespace {

bool hyperbolic_mode(EmbedMode mode) { return mode != EmbedMode::euclidean; }

// Distance between stored coordinate vectors plus the gradient w.r.t. both.
struct DistGrad {
    double d = 0.0;
    Vec du;
    Vec dv;
};

DistGrad dist_grad(const EmbeddingTable& table, int i, int j) {
    const Vec& u = table.points[static_cast<std::size_t>(i)];
    const Vec& v = table.points[static_cast<std::size_t>(j)];
    DistGrad out;
    out.du.assign(u.size(), 0.0);
    out.dv.assign(u.size(), 0.0);
    if (!hyperbolic_mode(table.mode)) {
        Vec diff = sub(u, v);
        out.d = norm(diff);
        if (out.d > 1e-12) {
            for (std::size_t t = 0; t < diff.size(); ++t) {
                out.du[t] = diff[t] / out.d;
                out.dv[t] = -diff[t] / out.d;
            }
        }
        return out;
    }
    const double c = table.curv.c;
    const double sc = table.curv.sqrt_c();
    Vec neg_u = negated(u);
    const detail::MobiusParts parts = detail::mobius_add_parts(neg_u, v, c);
    const double zn = norm(parts.z);
    out.d = 2.0 / sc * atanh_clamped(sc * zn);
    if (zn < 1e-12) return out;
    // d = (2/sc) * atanh(sc*||z||): d(dist)/dz = 2*z / ((1 - c||z||^2) * ||z||)
    const double q = 1.0 - c * zn * zn;
    if (!(q > 0.0)) throw NumericError("embedding distance: point pair at the ball boundary");
    Vec dz = scaled(parts.z, 2.0 / (q * zn));
    Vec d_neg_u(u.size(), 0.0);
    detail::mobius_add_vjp(parts, neg_u, v, c, dz, d_neg_u, out.dv);
    for (std::size_t t = 0; t < u.size(); ++t) out.du[t] = -d_neg_u[t];
    return out;
}

}  // namespace

Hierarchy Hierarchy::from_edge_list(std::istream& in) {
    Hierarchy h;
    std::map<std::string, int> index;
    auto intern = [&](const std::string& name) {
        auto [it, inserted] = index.try_emplace(name, static_cast<int>(h.nodes.size()));
        if (inserted) h.nodes.push_back(name);
        return it->second;
    };
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw DataError("edge list line " + std::to_string(lineno) + ": expected child<TAB>parent");
        const std::string child = line.substr(0, tab);
        const std::string parent = line.substr(tab + 1);
        if (child.empty() || parent.empty())
            throw DataError("edge list line " + std::to_string(lineno) + ": empty node name");
        if (child == parent)
            throw DataError("edge list line " + std::to_string(lineno) + ": self-loop on '" + child + "'");
        h.edges.emplace_back(intern(child), intern(parent));
    }
    h.validate();
    return h;
}

Hierarchy Hierarchy::from_edge_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open edge list file: " + path);
    return from_edge_list(in);
}

void Hierarchy::validate() const {
    const int n = static_cast<int>(nodes.size());
    for (const auto& [u, v] : edges) {
        if (u < 0 || u >= n || v < 0 || v >= n)
            throw DataError("hierarchy edge endpoint out of range");
        if (u == v) throw DataError("hierarchy contains a self-loop");
    }
}

std::vector<std::vector<int>> Hierarchy::partner_sets() const {
    std::vector<std::vector<int>> partners(nodes.size());
    for (const auto& [u, v] : edges) {
        partners[static_cast<std::size_t>(u)].push_back(v);
        partners[static_cast<std::size_t>(v)].push_back(u);
    }
    for (auto& set : partners) {
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
    }
    return partners;
}

EmbedMode embed_mode_from_string(const std::string& name) {
    if (name == "euclidean") return EmbedMode::euclidean;
    if (name == "hyperbolic") return EmbedMode::hyperbolic;
    if (name == "clipped") return EmbedMode::clipped;
    throw ConfigError("unknown embed mode '" + name + "' (expected euclidean|hyperbolic|clipped)");
}

std::string to_string(EmbedMode mode) {
    switch (mode) {
        case EmbedMode::euclidean: return "euclidean";
        case EmbedMode::hyperbolic: return "hyperbolic";
        case EmbedMode::clipped: return "clipped";
    }
    return "?";
}

double EmbeddingTable::dist(int i, int j) const { return dist_grad(*this, i, j).d; }

NceResult nce_loss(const EmbeddingTable& table, int u, int v, std::span<const int> negatives) {
    if (negatives.empty()) throw std::invalid_argument("nce_loss: empty negative set");
    for (int neg : negatives)
        if (neg == v) throw std::invalid_argument("nce_loss: negatives must exclude the target");

    const std::size_t n = table.dim();
    const std::size_t cand = 1 + negatives.size();
    std::vector<DistGrad> grads;
    grads.reserve(cand);
    grads.push_back(dist_grad(table, u, v));
    for (int neg : negatives) grads.push_back(dist_grad(table, u, neg));

    // softmax over -d_j; loss = d_pos + log sum_j exp(-d_j)
    double mx = -grads[0].d;
    for (const auto& g : grads) mx = std::max(mx, -g.d);
    double sum = 0.0;
    for (const auto& g : grads) sum += std::exp(-g.d - mx);
    const double lse = mx + std::log(sum);

    NceResult out;
    out.loss = grads[0].d + lse;
    out.d_u.assign(n, 0.0);
    out.d_v.assign(n, 0.0);
    out.d_neg.assign(negatives.size(), Vec(n, 0.0));

    for (std::size_t j = 0; j < cand; ++j) {
        const double w = std::exp(-grads[j].d - lse);
        const double dl_dd = (j == 0 ? 1.0 : 0.0) - w;
        add_scaled(out.d_u, grads[j].du, dl_dd);
        if (j == 0)
            add_scaled(out.d_v, grads[j].dv, dl_dd);
        else
            add_scaled(out.d_neg[j - 1], grads[j].dv, dl_dd);
    }
    return out;
}

EmbeddingTable train_embeddings(const Hierarchy& h, EmbedMode mode, const EmbedConfig& cfg) {
    h.validate();
    EmbeddingTable table;
    table.mode = mode;
    table.curv = cfg.curv;

    Xoshiro256pp rng(cfg.seed);
    const std::size_t n_nodes = h.nodes.size();

    // Uniform in the ball of radius init_radius.
    table.points.resize(n_nodes);
    for (auto& point : table.points) {
        point.resize(cfg.dim);
        for (double& x : point) x = rng.normal();
        const double nn = norm(point);
        const double radius =
            cfg.init_radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(cfg.dim));
        if (nn > 0.0)
            for (double& x : point) x *= radius / nn;
    }

    const auto partners = h.partner_sets();
    const double clip_norm = std::tanh(cfg.curv.sqrt_c() * cfg.clip_r) / cfg.curv.sqrt_c();

    auto apply_update = [&](int node, const Vec& grad, double lr) {
        Vec& point = table.points[static_cast<std::size_t>(node)];
        if (!hyperbolic_mode(mode)) {
            add_scaled(point, grad, -lr);
            return;
        }
        BallPoint p = BallPoint::projected(point, cfg.curv);
        TangentVector rg = riemannian_scale(p, grad);
        for (double& x : rg.v) x *= -lr;
        BallPoint moved = exp_at(p, rg);
        if (mode == EmbedMode::clipped) {
            Vec clipped = clip_features(moved.x, clip_norm);
            moved = BallPoint::projected(std::move(clipped), cfg.curv);
        }
        point = moved.x;
    };

    std::vector<std::size_t> order(h.edges.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<int> negatives;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = epoch < cfg.burn_in_epochs ? cfg.lr * cfg.burn_in_factor : cfg.lr;
        shuffle(order, rng);
        for (std::size_t e : order) {
            const auto [u, v] = h.edges[e];
            const auto& pu = partners[static_cast<std::size_t>(u)];
            if (pu.size() + 1 >= n_nodes) continue;  // no non-neighbors to sample

            negatives.clear();
            while (negatives.size() < static_cast<std::size_t>(cfg.negatives)) {
                const int cand = static_cast<int>(rng.below(n_nodes));
                if (cand == u || std::binary_search(pu.begin(), pu.end(), cand)) continue;
                negatives.push_back(cand);
            }

            NceResult res = nce_loss(table, u, v, negatives);
            apply_update(u, res.d_u, lr);
            apply_update(v, res.d_v, lr);
            for (std::size_t j = 0; j < negatives.size(); ++j)
                apply_update(negatives[j], res.d_neg[j], lr);
        }
    }
    return table;
}

double map_score(const EmbeddingTable& table, const Hierarchy& h, std::size_t* excluded) {
    const auto partners = h.partner_sets();
    const int n = static_cast<int>(h.nodes.size());
    double total = 0.0;
    std::size_t scored = 0;
    std::size_t skipped = 0;

    std::vector<std::pair<double, int>> ranked;
    for (int u = 0; u < n; ++u) {
        const auto& pu = partners[static_cast<std::size_t>(u)];
        if (pu.empty()) {
            ++skipped;
            std::fprintf(stderr, "map_score: node '%s' has no partners, excluded\n",
                         h.nodes[static_cast<std::size_t>(u)].c_str());
            continue;
        }
        ranked.clear();
        for (int v = 0; v < n; ++v)
            if (v != u) ranked.emplace_back(table.dist(u, v), v);
        std::sort(ranked.begin(), ranked.end());  // ties broken by node index

        double ap = 0.0;
        std::size_t hits = 0;
        for (std::size_t rank = 0; rank < ranked.size(); ++rank) {
            if (std::binary_search(pu.begin(), pu.end(), ranked[rank].second)) {
                ++hits;
                ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
            }
        }
        total += ap / static_cast<double>(pu.size());
        ++scored;
    }
    if (excluded) *excluded = skipped;
    return scored == 0 ? 0.0 : total / static_cast<double>(scored);
}

void write_embeddings(const EmbeddingTable& table, const Hierarchy& h, std::ostream& out) {
    char buf[64];
    for (std::size_t i = 0; i < h.nodes.size(); ++i) {
        out << h.nodes[i];
        for (double x : table.points[i]) {
            std::snprintf(buf, sizeof(buf), " %.9g", x);
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace hyperball
