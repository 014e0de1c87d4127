#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hyperball/geometry.hpp"
#include "hyperball/rng.hpp"
#include "hyperball/vecmath.hpp"

namespace hyperball {

// Hyperbolic multinomial logistic regression head. A Euclidean feature vector
// is (optionally) norm-clipped, lifted into the ball through exp0, and scored
// against one Poincare hyperplane (p_k, a_k) per class:
//
//   logit_k(x) = (lambda_{p_k} * ||a_k|| / sqrt(c))
//                * asinh( 2*sqrt(c)*<z, a_k> / ((1 - c*||z||^2) * ||a_k||) ),
//   z = (-p_k) (+)_c x.
//
// |logit_k| equals lambda_{p_k} * ||a_k|| times the geodesic distance of x to
// the hyperplane; the sign tells the side.

enum class ClipMode { none, hard_clip, soft_penalty, temperature };

struct ClipConfig {
    ClipMode mode = ClipMode::hard_clip;
    double r = 1.0;            // feature-norm threshold (hard_clip)
    double beta = 0.0;         // embedding-norm penalty weight (soft_penalty)
    double temperature = 1.0;  // logit divisor (temperature)

    static ClipConfig none();
    static ClipConfig hard(double r);
    static ClipConfig soft(double beta);
    static ClipConfig with_temperature(double t);

    /// Throws ConfigError on nonsensical settings (r <= 0, beta < 0, T <= 0).
    void validate() const;
};

struct MlrHead {
    std::vector<BallPoint> p;  // hyperplane offsets, one per class
    std::vector<Vec> a;        // hyperplane normals (tangent at p_k), nonzero
    Curvature curv;

    std::size_t classes() const { return p.size(); }
    std::size_t dim() const { return p.empty() ? 0 : p[0].dim(); }
    void validate() const;

    /// p_k = origin, a_k ~ N(0, 1/n) per coordinate.
    static MlrHead init(std::size_t classes, std::size_t dim, Curvature curv, Xoshiro256pp& rng);
};

/// min{1, r/||x||} * x; zero stays zero.
Vec clip_features(std::span<const double> x, double r);

/// Clip (hard mode only) then exp0. In hard mode the result norm is at most
/// tanh(sqrt(c)*r)/sqrt(c).
BallPoint lift(std::span<const double> x, const ClipConfig& cfg, Curvature curv);

/// Signed class score; positive on the side of the hyperplane a points to.
double signed_plane_score(const BallPoint& x, const BallPoint& p, std::span<const double> a);

/// Geodesic distance from x to the hyperplane through p with normal a.
double plane_distance(const BallPoint& x, const BallPoint& p, std::span<const double> a);

struct HeadForward {
    Vec logits;        // already divided by T in temperature mode
    BallPoint lifted;  // the hyperbolic embedding x^H
};

HeadForward forward(const MlrHead& head, std::span<const double> features, const ClipConfig& cfg);

struct SoftmaxLoss {
    double loss;
    Vec dlogits;  // softmax(logits) - onehot(label)
};

/// Numerically stable softmax cross-entropy.
SoftmaxLoss softmax_cross_entropy(std::span<const double> logits, int label);

struct HeadGrads {
    double loss = 0.0;
    Vec d_features;          // gradient w.r.t. the raw Euclidean features
    std::vector<Vec> d_p;    // per-class gradient w.r.t. p_k (Euclidean)
    std::vector<Vec> d_a;    // per-class gradient w.r.t. a_k
    Vec logits;
    BallPoint lifted;
};

/// Softmax cross-entropy with analytic gradients through asinh, Mobius
/// addition, exp0 and the feature clip. Soft mode adds beta*||x^H||^2 to the
/// loss. Throws NumericError if any intermediate is non-finite.
HeadGrads loss_and_grads(const MlrHead& head, std::span<const double> features, int label,
                         const ClipConfig& cfg);

/// Forward-mode directional derivative of lift() at features along dfeatures.
Vec lift_jvp(std::span<const double> features, std::span<const double> dfeatures,
             const ClipConfig& cfg, Curvature curv);

/// Euclidean-to-Riemannian gradient rescale at x: ((1 - c*||x||^2)^2 / 4) * g.
TangentVector riemannian_scale(const BallPoint& x, std::span<const double> euclid_grad);

/// The rescale factor (1 - c*||x||^2)^2 / 4 on its own; vanishes at the boundary.
double riemannian_factor(double sq_norm, Curvature curv);

int argmax_class(std::span<const double> logits);

}  // namespace hyperball
