#include "hyperball/mlr.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "hyperball/errors.hpp"

namespace hyperball {

namespace {

// Forward pieces of lift() kept around for the reverse pass.
struct LiftCache {
    Vec clipped;            // xc = clip(features) (hard mode) or a copy of features
    bool clip_active = false;
    double feat_norm = 0.0;
    double m = 0.0;         // ||xc||
    double f = 1.0;         // tanh(sc*m)/(sc*m), 1 in the m -> 0 limit
    Vec raw;                // f * xc, before boundary projection
    bool proj_active = false;
    double raw_norm = 0.0;
    BallPoint point;
};

LiftCache lift_cached(std::span<const double> features, const ClipConfig& cfg, Curvature curv) {
    LiftCache cache;
    cache.feat_norm = norm(features);
    if (cfg.mode == ClipMode::hard_clip && cache.feat_norm > cfg.r) {
        cache.clip_active = true;
        cache.clipped = scaled(features, cfg.r / cache.feat_norm);
    } else {
        cache.clipped.assign(features.begin(), features.end());
    }

    cache.m = norm(cache.clipped);
    const double sc = curv.sqrt_c();
    if (sc * cache.m >= 1e-12)
        cache.f = std::tanh(sc * cache.m) / (sc * cache.m);
    cache.raw = scaled(cache.clipped, cache.f);

    cache.raw_norm = norm(cache.raw);
    const double max_norm = (1.0 - kBoundaryEps) / sc;
    cache.proj_active = cache.raw_norm >= max_norm;
    cache.point = BallPoint::projected(cache.raw, curv);
    return cache;
}

// Reverse pass of lift_cached: boundary projection, exp0, clip.
Vec lift_vjp(const LiftCache& cache, const ClipConfig& cfg, Curvature curv, Vec grad) {
    if (cache.proj_active) {
        const double rho = (1.0 - kBoundaryEps) / curv.sqrt_c();
        const double inv = 1.0 / cache.raw_norm;
        const double radial = dot(cache.raw, grad) * inv * inv;
        for (std::size_t i = 0; i < grad.size(); ++i)
            grad[i] = rho * inv * (grad[i] - cache.raw[i] * radial);
    }

    const double sc = curv.sqrt_c();
    if (sc * cache.m >= 1e-12) {
        // x = f(m)*xc with f' = (sech^2(sc*m) - f)/m.
        const double t = std::tanh(sc * cache.m);
        const double fprime = ((1.0 - t * t) - cache.f) / cache.m;
        const double radial = dot(cache.clipped, grad) / cache.m;
        Vec out(grad.size());
        for (std::size_t i = 0; i < grad.size(); ++i)
            out[i] = cache.f * grad[i] + fprime * radial * cache.clipped[i] / cache.m;
        grad = std::move(out);
    }

    if (cache.clip_active) {
        const double scale = cfg.r / cache.feat_norm;
        // grad refers to xc = scale * features; the clip Jacobian keeps only the
        // tangential part, scaled.
        Vec unit = scaled(cache.clipped, 1.0 / cfg.r);  // features / ||features||
        const double radial = dot(unit, grad);
        for (std::size_t i = 0; i < grad.size(); ++i)
            grad[i] = scale * (grad[i] - unit[i] * radial);
    }
    return grad;
}

// Per-class score pieces shared by forward and backward.
struct ScoreParts {
    detail::MobiusParts mob;  // z = (-p) (+) x
    double s = 0.0;           // <z, a>
    double q = 0.0;           // 1 - c*||z||^2
    double a_norm = 0.0;
    double u = 0.0;           // 2*sqrt(c)*s / (q*||a||)
    double lambda_p = 0.0;
    double prefactor = 0.0;   // lambda_p*||a|| / sqrt(c)
    double asinh_u = 0.0;
    double logit = 0.0;
};

ScoreParts score_parts(std::span<const double> x, const BallPoint& p, std::span<const double> a,
                       Curvature curv) {
    if (x.size() != p.dim() || a.size() != p.dim())
        throw std::invalid_argument("hyperbolic MLR: dimension mismatch");
    ScoreParts parts;
    parts.a_norm = norm(a);
    if (parts.a_norm == 0.0)
        throw std::invalid_argument("hyperbolic MLR: hyperplane normal must be nonzero");
    const double c = curv.c;
    const double sc = curv.sqrt_c();
    Vec neg_p = negated(p.x);
    parts.mob = detail::mobius_add_parts(neg_p, x, c);
    parts.s = dot(parts.mob.z, a);
    parts.q = 1.0 - c * sqnorm(parts.mob.z);
    if (!(parts.q > 0.0) || !std::isfinite(parts.q))
        throw NumericError("hyperbolic MLR: embedding reached the ball boundary");
    parts.u = 2.0 * sc * parts.s / (parts.q * parts.a_norm);
    parts.lambda_p = conformal_factor(p);
    parts.prefactor = parts.lambda_p * parts.a_norm / sc;
    parts.asinh_u = std::asinh(parts.u);
    parts.logit = parts.prefactor * parts.asinh_u;
    return parts;
}

}  // namespace

ClipConfig ClipConfig::none() { return {ClipMode::none, 1.0, 0.0, 1.0}; }
ClipConfig ClipConfig::hard(double r) { return {ClipMode::hard_clip, r, 0.0, 1.0}; }
ClipConfig ClipConfig::soft(double beta) { return {ClipMode::soft_penalty, 1.0, beta, 1.0}; }
ClipConfig ClipConfig::with_temperature(double t) { return {ClipMode::temperature, 1.0, 0.0, t}; }

void ClipConfig::validate() const {
    if (mode == ClipMode::hard_clip && !(r > 0.0 && std::isfinite(r)))
        throw ConfigError("clip radius r must be finite and > 0");
    if (mode == ClipMode::soft_penalty && !(beta >= 0.0 && std::isfinite(beta)))
        throw ConfigError("soft penalty beta must be finite and >= 0");
    if (mode == ClipMode::temperature && !(temperature > 0.0 && std::isfinite(temperature)))
        throw ConfigError("softmax temperature must be finite and > 0");
}

void MlrHead::validate() const {
    if (p.size() != a.size() || p.empty())
        throw std::invalid_argument("MlrHead: needs one (p_k, a_k) pair per class");
    const std::size_t n = p[0].dim();
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k].dim() != n || a[k].size() != n)
            throw std::invalid_argument("MlrHead: inconsistent dimensions");
        if (!(p[k].curv == curv))
            throw std::invalid_argument("MlrHead: curvature mismatch");
        if (norm(a[k]) == 0.0)
            throw std::invalid_argument("MlrHead: hyperplane normal a_k must be nonzero");
    }
}

MlrHead MlrHead::init(std::size_t classes, std::size_t dim, Curvature curv, Xoshiro256pp& rng) {
    MlrHead head;
    head.curv = curv;
    const double sigma = 1.0 / std::sqrt(static_cast<double>(dim));
    for (std::size_t k = 0; k < classes; ++k) {
        head.p.push_back(BallPoint::origin(dim, curv));
        Vec a(dim);
        for (double& v : a) v = sigma * rng.normal();
        head.a.push_back(std::move(a));
    }
    return head;
}

Vec clip_features(std::span<const double> x, double r) {
    if (!(r > 0.0)) throw ConfigError("clip radius r must be > 0");
    const double n = norm(x);
    if (n <= r) return Vec(x.begin(), x.end());
    return scaled(x, r / n);
}

BallPoint lift(std::span<const double> x, const ClipConfig& cfg, Curvature curv) {
    cfg.validate();
    return lift_cached(x, cfg, curv).point;
}

double signed_plane_score(const BallPoint& x, const BallPoint& p, std::span<const double> a) {
    return score_parts(x.x, p, a, x.curv).logit;
}

double plane_distance(const BallPoint& x, const BallPoint& p, std::span<const double> a) {
    const ScoreParts parts = score_parts(x.x, p, a, x.curv);
    return std::asinh(std::fabs(parts.u)) / x.curv.sqrt_c();
}

HeadForward forward(const MlrHead& head, std::span<const double> features, const ClipConfig& cfg) {
    head.validate();
    cfg.validate();
    if (features.size() != head.dim())
        throw std::invalid_argument("forward: feature dimension does not match head");
    HeadForward out;
    out.lifted = lift(features, cfg, head.curv);
    out.logits.resize(head.classes());
    const double inv_t = cfg.mode == ClipMode::temperature ? 1.0 / cfg.temperature : 1.0;
    for (std::size_t k = 0; k < head.classes(); ++k)
        out.logits[k] = inv_t * score_parts(out.lifted.x, head.p[k], head.a[k], head.curv).logit;
    return out;
}

SoftmaxLoss softmax_cross_entropy(std::span<const double> logits, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size())
        throw std::invalid_argument("softmax_cross_entropy: label out of range");
    const double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    SoftmaxLoss out;
    out.loss = lse - logits[label];
    out.dlogits.resize(logits.size());
    for (std::size_t k = 0; k < logits.size(); ++k)
        out.dlogits[k] = std::exp(logits[k] - lse) - (static_cast<int>(k) == label ? 1.0 : 0.0);
    return out;
}

HeadGrads loss_and_grads(const MlrHead& head, std::span<const double> features, int label,
                         const ClipConfig& cfg) {
    head.validate();
    cfg.validate();
    if (features.size() != head.dim())
        throw std::invalid_argument("loss_and_grads: feature dimension does not match head");
    if (!all_finite(features))
        throw NumericError("loss_and_grads: non-finite feature input");

    const std::size_t n = head.dim();
    const std::size_t classes = head.classes();
    const double c = head.curv.c;
    const double sc = head.curv.sqrt_c();

    const LiftCache cache = lift_cached(features, cfg, head.curv);
    const Vec& x = cache.point.x;

    std::vector<ScoreParts> parts;
    parts.reserve(classes);
    Vec logits(classes);
    const double inv_t = cfg.mode == ClipMode::temperature ? 1.0 / cfg.temperature : 1.0;
    for (std::size_t k = 0; k < classes; ++k) {
        parts.push_back(score_parts(x, head.p[k], head.a[k], head.curv));
        logits[k] = inv_t * parts[k].logit;
    }

    const SoftmaxLoss sl = softmax_cross_entropy(logits, label);

    HeadGrads out;
    out.logits = logits;
    out.lifted = cache.point;
    out.loss = sl.loss;
    if (cfg.mode == ClipMode::soft_penalty) out.loss += cfg.beta * sqnorm(x);

    Vec dx(n, 0.0);
    out.d_p.assign(classes, Vec(n, 0.0));
    out.d_a.assign(classes, Vec(n, 0.0));

    for (std::size_t k = 0; k < classes; ++k) {
        const ScoreParts& pk = parts[k];
        const double g = sl.dlogits[k] * inv_t;  // d loss / d raw logit_k
        const double dasinh = 1.0 / std::sqrt(1.0 + pk.u * pk.u);
        const double dl_du = g * pk.prefactor * dasinh;
        const double dl_ds = dl_du * 2.0 * sc / (pk.q * pk.a_norm);
        const double dl_dq = -dl_du * pk.u / pk.q;

        // d loss / dz through s = <z,a> and q = 1 - c||z||^2.
        Vec dz(n);
        for (std::size_t i = 0; i < n; ++i)
            dz[i] = dl_ds * head.a[k][i] - 2.0 * c * dl_dq * pk.mob.z[i];

        Vec neg_p = negated(head.p[k].x);
        Vec d_neg_p(n, 0.0);
        detail::mobius_add_vjp(pk.mob, neg_p, x, c, dz, d_neg_p, dx);

        // p_k enters through the Mobius term (as -p_k) and through lambda_p;
        // d lambda/dp = c*lambda^2*p.
        const double dl_dlambda = g * pk.asinh_u * pk.a_norm / sc;
        for (std::size_t i = 0; i < n; ++i)
            out.d_p[k][i] = -d_neg_p[i] + dl_dlambda * c * pk.lambda_p * pk.lambda_p * head.p[k].x[i];

        // a_k enters through s, through the prefactor norm and through u's 1/||a||.
        const double dl_dnorm = g * pk.asinh_u * pk.lambda_p / sc - dl_du * pk.u / pk.a_norm;
        for (std::size_t i = 0; i < n; ++i)
            out.d_a[k][i] = dl_ds * pk.mob.z[i] + dl_dnorm * head.a[k][i] / pk.a_norm;
    }

    if (cfg.mode == ClipMode::soft_penalty)
        for (std::size_t i = 0; i < n; ++i) dx[i] += 2.0 * cfg.beta * x[i];

    out.d_features = lift_vjp(cache, cfg, head.curv, std::move(dx));

    if (!std::isfinite(out.loss) || !all_finite(out.d_features))
        throw NumericError("loss_and_grads: non-finite loss or feature gradient");
    for (std::size_t k = 0; k < classes; ++k)
        if (!all_finite(out.d_p[k]) || !all_finite(out.d_a[k]))
            throw NumericError("loss_and_grads: non-finite head gradient for class " +
                               std::to_string(k));
    return out;
}

Vec lift_jvp(std::span<const double> features, std::span<const double> dfeatures,
             const ClipConfig& cfg, Curvature curv) {
    cfg.validate();
    const LiftCache cache = lift_cached(features, cfg, curv);
    Vec d(dfeatures.begin(), dfeatures.end());

    if (cache.clip_active) {
        const double scale = cfg.r / cache.feat_norm;
        Vec unit = scaled(cache.clipped, 1.0 / cfg.r);
        const double radial = dot(unit, d);
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = scale * (d[i] - unit[i] * radial);
    }

    const double sc = curv.sqrt_c();
    if (sc * cache.m >= 1e-12) {
        const double t = std::tanh(sc * cache.m);
        const double fprime = ((1.0 - t * t) - cache.f) / cache.m;
        const double radial = dot(cache.clipped, d) / cache.m;
        Vec out(d.size());
        for (std::size_t i = 0; i < d.size(); ++i)
            out[i] = cache.f * d[i] + fprime * radial * cache.clipped[i] / cache.m;
        d = std::move(out);
    }

    if (cache.proj_active) {
        const double rho = (1.0 - kBoundaryEps) / sc;
        const double inv = 1.0 / cache.raw_norm;
        Vec unit = scaled(cache.raw, inv);
        const double radial = dot(unit, d);
        for (std::size_t i = 0; i < d.size(); ++i)
            d[i] = rho * inv * (d[i] - unit[i] * radial);
    }
    return d;
}

double riemannian_factor(double sq_norm, Curvature curv) {
    const double q = 1.0 - curv.c * sq_norm;
    return q * q / 4.0;
}

TangentVector riemannian_scale(const BallPoint& x, std::span<const double> euclid_grad) {
    if (euclid_grad.size() != x.dim())
        throw std::invalid_argument("riemannian_scale: dimension mismatch");
    const double factor = riemannian_factor(sqnorm(x.x), x.curv);
    return TangentVector{scaled(euclid_grad, factor), x};
}

int argmax_class(std::span<const double> logits) {
    int best = 0;
    for (std::size_t k = 1; k < logits.size(); ++k)
        if (logits[k] > logits[best]) best = static_cast<int>(k);
    return best;
}

}  // namespace hyperball
