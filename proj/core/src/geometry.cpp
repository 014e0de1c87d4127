#include "hyperball/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace hyperball {

namespace {

void require_same_frame(const BallPoint& u, const BallPoint& v, const char* op) {
    if (u.dim() != v.dim())
        throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                    std::to_string(u.dim()) + " vs " + std::to_string(v.dim()) + ")");
    if (!(u.curv == v.curv))
        throw std::invalid_argument(std::string(op) + ": curvature mismatch");
}

}  // namespace

namespace detail {

MobiusParts mobius_add_parts(std::span<const double> u, std::span<const double> v, double c) {
    const double uv = dot(u, v);
    MobiusParts parts;
    parts.alpha = 1.0 + 2.0 * c * uv + c * sqnorm(v);
    parts.beta = 1.0 - c * sqnorm(u);
    parts.den = 1.0 + 2.0 * c * uv + c * c * sqnorm(u) * sqnorm(v);
    parts.z.resize(u.size());
    for (std::size_t i = 0; i < u.size(); ++i)
        parts.z[i] = (parts.alpha * u[i] + parts.beta * v[i]) / parts.den;
    return parts;
}

void mobius_add_vjp(const MobiusParts& parts, std::span<const double> u,
                    std::span<const double> v, double c, std::span<const double> w,
                    Vec& du_acc, Vec& dv_acc) {
    const double uw = dot(u, w);
    const double vw = dot(v, w);
    const double zw = dot(parts.z, w);
    const double u2 = sqnorm(u);
    const double v2 = sqnorm(v);
    const double inv_den = 1.0 / parts.den;
    for (std::size_t i = 0; i < u.size(); ++i) {
        // d alpha/du = 2c*v, d beta/du = -2c*u, d den/du = 2c*v + 2c^2||v||^2*u
        du_acc[i] += inv_den * (2.0 * c * v[i] * uw + parts.alpha * w[i] -
                                2.0 * c * u[i] * vw -
                                (2.0 * c * v[i] + 2.0 * c * c * v2 * u[i]) * zw);
        // d alpha/dv = 2c*(u + v), d den/dv = 2c*u + 2c^2||u||^2*v
        dv_acc[i] += inv_den * (2.0 * c * (u[i] + v[i]) * uw + parts.beta * w[i] -
                                (2.0 * c * u[i] + 2.0 * c * c * u2 * v[i]) * zw);
    }
}

}  // namespace detail

double atanh_clamped(double z) {
    constexpr double lim = 1.0 - 1e-15;
    if (z > lim) z = lim;
    if (z < -lim) z = -lim;
    return 0.5 * std::log((1.0 + z) / (1.0 - z));
}

Curvature::Curvature(double magnitude) : c(magnitude) {
    if (!(std::isfinite(c) && c > 0.0))
        throw std::invalid_argument("curvature magnitude must be finite and > 0");
}

double Curvature::sqrt_c() const { return std::sqrt(c); }

BallPoint::BallPoint(Vec coords, Curvature k) : x(std::move(coords)), curv(k) {
    if (curv.c * sqnorm(x) >= 1.0)
        throw std::domain_error("point is not strictly inside the ball");
}

BallPoint BallPoint::origin(std::size_t dim, Curvature k) {
    BallPoint p;
    p.x.assign(dim, 0.0);
    p.curv = k;
    return p;
}

BallPoint BallPoint::projected(Vec coords, Curvature k) {
    const double max_norm = (1.0 - kBoundaryEps) / k.sqrt_c();
    const double n = hyperball::norm(coords);
    if (n >= max_norm) {
        const double s = max_norm / n;
        for (double& v : coords) v *= s;
    }
    BallPoint p;
    p.x = std::move(coords);
    p.curv = k;
    return p;
}

bool BallPoint::is_origin() const {
    for (double v : x)
        if (v != 0.0) return false;
    return true;
}

BallPoint negate(const BallPoint& u) {
    BallPoint out = u;
    for (double& v : out.x) v = -v;
    return out;
}

double conformal_factor(const BallPoint& x) {
    const double q = 1.0 - x.curv.c * sqnorm(x.x);
    if (q <= 0.0)
        throw std::domain_error("conformal_factor: point on or outside the ball");
    return 2.0 / q;
}

BallPoint mobius_add(const BallPoint& u, const BallPoint& v) {
    require_same_frame(u, v, "mobius_add");
    return BallPoint::projected(detail::mobius_add_parts(u.x, v.x, u.curv.c).z, u.curv);
}

BallPoint mobius_scalar_mul(double r, const BallPoint& v) {
    const double n = v.norm();
    if (n == 0.0 || r == 0.0) return BallPoint::origin(v.dim(), v.curv);
    // r (x) v = s * tanh(r * atanh(||v||/s)) * v/||v||, s = 1/sqrt(c); this is
    // the tanh form of ((1+t)^r - (1-t)^r) / ((1+t)^r + (1-t)^r) with t = ||v||/s.
    const double s = 1.0 / v.curv.sqrt_c();
    const double new_norm = s * std::tanh(r * atanh_clamped(n / s));
    return BallPoint::projected(scaled(v.x, new_norm / n), v.curv);
}

BallPoint exp0(std::span<const double> v, Curvature k) {
    const double m = norm(v);
    const double sc = k.sqrt_c();
    if (sc * m < 1e-12) {
        // limit tanh(sc*m)/(sc*m) -> 1
        return BallPoint::projected(Vec(v.begin(), v.end()), k);
    }
    const double f = std::tanh(sc * m) / (sc * m);
    return BallPoint::projected(scaled(v, f), k);
}

BallPoint exp_at(const BallPoint& x, const TangentVector& v) {
    if (v.base.dim() != x.dim() || !(v.base.curv == x.curv) || v.base.x != x.x)
        throw std::invalid_argument("exp_at: tangent vector not based at x");
    const double m = v.norm();
    if (m == 0.0) return x;
    const double sc = x.curv.sqrt_c();
    const double lam = conformal_factor(x);
    const double f = std::tanh(sc * lam * m / 2.0) / (sc * m);
    BallPoint step = BallPoint::projected(scaled(v.v, f), x.curv);
    return mobius_add(x, step);
}

TangentVector log_at(const BallPoint& x, const BallPoint& y) {
    require_same_frame(x, y, "log_at");
    const BallPoint z = mobius_add(negate(x), y);
    const double m = z.norm();
    if (m == 0.0) return TangentVector{Vec(x.dim(), 0.0), x};
    const double sc = x.curv.sqrt_c();
    const double lam = conformal_factor(x);
    const double f = 2.0 / (sc * lam) * atanh_clamped(sc * m) / m;
    return TangentVector{scaled(z.x, f), x};
}

double distance(const BallPoint& x, const BallPoint& y) {
    require_same_frame(x, y, "distance");
    const BallPoint z = mobius_add(negate(x), y);
    const double sc = x.curv.sqrt_c();
    return 2.0 / sc * atanh_clamped(sc * z.norm());
}

double origin_distance(const BallPoint& x) {
    const double s = 1.0 / x.curv.sqrt_c();
    const double n = x.norm();
    if (n >= s)
        throw std::domain_error("origin_distance: point on or outside the ball");
    return s * std::log((s + n) / (s - n));
}

BallPoint gyroline(const BallPoint& a, const BallPoint& b, double t) {
    require_same_frame(a, b, "gyroline");
    if (a.x == b.x) return a;
    return mobius_add(a, mobius_scalar_mul(t, mobius_add(negate(a), b)));
}

double angle(const BallPoint& at, const BallPoint& toward1, const BallPoint& toward2) {
    const TangentVector u = log_at(at, toward1);
    const TangentVector v = log_at(at, toward2);
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0)
        throw std::invalid_argument("angle: coincident points");
    double cosang = dot(u.v, v.v) / (nu * nv);
    if (cosang > 1.0) cosang = 1.0;
    if (cosang < -1.0) cosang = -1.0;
    return std::acos(cosang);
}

DefectResult triangle_defect(const BallPoint& a, const BallPoint& b, const BallPoint& c) {
    constexpr double eps = 1e-12;
    if (distance(a, b) < eps || distance(b, c) < eps || distance(a, c) < eps)
        return {0.0, true};
    const double aa = angle(a, b, c);
    const double ab = angle(b, a, c);
    const double ac = angle(c, a, b);
    // Collinear vertices: one angle is straight or the triangle has no area.
    constexpr double pi = 3.14159265358979323846;
    if (aa < eps || ab < eps || ac < eps || aa > pi - eps || ab > pi - eps || ac > pi - eps)
        return {0.0, true};
    return {pi - (aa + ab + ac), false};
}

}  // namespace hyperball
