#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hyperball/geometry.hpp"
#include "hyperball/rng.hpp"

namespace hyperball {

// Graph-reconstruction embedding trainer. Nodes of a hierarchy are embedded in
// Euclidean space, the Poincare ball, or a norm-clipped Poincare ball, by
// minimizing a negative-sampling softmax over distances; quality is scored by
// mean average precision of true neighbors under the distance ranking.

struct Hierarchy {
    std::vector<std::string> nodes;
    std::vector<std::pair<int, int>> edges;  // (child, parent) index pairs

    /// Parses UTF-8 text with one `child<TAB>parent` pair per line.
    static Hierarchy from_edge_list(std::istream& in);
    static Hierarchy from_edge_list_file(const std::string& path);

    /// Throws DataError on self-loops or out-of-range endpoints.
    void validate() const;

    /// Undirected partner sets (sorted, deduplicated).
    std::vector<std::vector<int>> partner_sets() const;
};

enum class EmbedMode { euclidean, hyperbolic, clipped };

EmbedMode embed_mode_from_string(const std::string& name);
std::string to_string(EmbedMode mode);

struct EmbedConfig {
    std::size_t dim = 10;
    int epochs = 200;
    double lr = 0.3;
    int negatives = 10;
    int burn_in_epochs = 10;
    double burn_in_factor = 0.1;
    Curvature curv;
    double clip_r = 1.0;     // clipped mode: points kept inside tanh(sqrt(c)*r)/sqrt(c)
    double init_radius = 1e-3;
    std::uint64_t seed = 0;
};

struct EmbeddingTable {
    EmbedMode mode = EmbedMode::hyperbolic;
    Curvature curv;
    std::vector<Vec> points;

    std::size_t dim() const { return points.empty() ? 0 : points[0].size(); }
    double dist(int i, int j) const;
};

struct NceResult {
    double loss = 0.0;
    Vec d_u;
    Vec d_v;
    std::vector<Vec> d_neg;
};

/// loss = -log( exp(-d(u,v)) / sum_{v' in {v} u negatives} exp(-d(u,v')) ),
/// with gradients for every involved point. Negatives must be non-empty and
/// must not contain v.
NceResult nce_loss(const EmbeddingTable& table, int u, int v, std::span<const int> negatives);

/// Deterministic for a fixed config; single-threaded by design (updates are
/// sequential and order-dependent).
EmbeddingTable train_embeddings(const Hierarchy& h, EmbedMode mode, const EmbedConfig& cfg);

/// Reconstruction mAP: per node, rank all other nodes by distance (ties by
/// node index) and take average precision of the true partners. Nodes without
/// partners are excluded (warning on stderr; count reported via excluded).
double map_score(const EmbeddingTable& table, const Hierarchy& h, std::size_t* excluded = nullptr);

/// Writes one line per node: name followed by the coordinates.
void write_embeddings(const EmbeddingTable& table, const Hierarchy& h, std::ostream& out);

}  // namespace hyperball
