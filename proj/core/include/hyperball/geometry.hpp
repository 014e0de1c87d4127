#pragma once

#include <cstddef>
#include <span>

#include "hyperball/vecmath.hpp"

namespace hyperball {

// Poincare ball geometry. The ball of curvature magnitude c is
// B^n_c = { x in R^n : c*||x||^2 < 1 } with conformal metric
// g_x = (2 / (1 - c*||x||^2))^2 * I. All operations here are pure functions on
// immutable values and safe to call concurrently.

/// Points whose squared norm would reach (1 - kBoundaryEps)^2 / c are rescaled
/// back to norm (1 - kBoundaryEps) / sqrt(c) whenever an operation returns one.
inline constexpr double kBoundaryEps = 1e-5;

/// atanh computed as 0.5*ln((1+z)/(1-z)) with |z| clamped to 1 - 1e-15.
double atanh_clamped(double z);

/// Magnitude of the (negative) curvature; the space has curvature -c.
struct Curvature {
    double c = 1.0;

    Curvature() = default;
    explicit Curvature(double magnitude);

    double sqrt_c() const;
    friend bool operator==(const Curvature&, const Curvature&) = default;
};

struct BallPoint {
    Vec x;
    Curvature curv;

    BallPoint() = default;
    /// Throws std::domain_error unless c*||coords||^2 < 1.
    BallPoint(Vec coords, Curvature k);

    static BallPoint origin(std::size_t dim, Curvature k = Curvature{});
    /// Builds a point, rescaling onto the (1 - kBoundaryEps)/sqrt(c) shell if
    /// the coordinates fall on or outside it.
    static BallPoint projected(Vec coords, Curvature k);

    std::size_t dim() const { return x.size(); }
    double norm() const { return hyperball::norm(x); }
    bool is_origin() const;
};

struct TangentVector {
    Vec v;
    BallPoint base;

    std::size_t dim() const { return v.size(); }
    double norm() const { return hyperball::norm(v); }
};

BallPoint negate(const BallPoint& u);

/// Conformal factor lambda_x = 2 / (1 - c*||x||^2). Throws std::domain_error
/// for points on or outside the ball.
double conformal_factor(const BallPoint& x);

/// Mobius addition u (+)_c v. Throws std::invalid_argument on dimension or
/// curvature mismatch.
BallPoint mobius_add(const BallPoint& u, const BallPoint& v);

/// Mobius scalar multiplication r (x)_c v; r (x) 0 = 0 for any r.
BallPoint mobius_scalar_mul(double r, const BallPoint& v);

/// Exponential map at the origin: tanh(sqrt(c)*||v||) * v / (sqrt(c)*||v||),
/// with exp0(0) = 0 taken as the limit (no division by zero).
BallPoint exp0(std::span<const double> v, Curvature k);

/// Exponential map at x; exp_at(x, 0) = x. Throws if v is not based at x.
BallPoint exp_at(const BallPoint& x, const TangentVector& v);

/// Logarithmic map at x, the inverse of exp_at; log_at(x, x) = 0.
TangentVector log_at(const BallPoint& x, const BallPoint& y);

/// Geodesic distance (2/sqrt(c)) * atanh(sqrt(c) * ||(-x) (+) y||).
double distance(const BallPoint& x, const BallPoint& y);

/// Distance to the origin in closed form: s * ln((s + ||x||)/(s - ||x||)) with
/// s = 1/sqrt(c). Agrees with distance(origin, x).
double origin_distance(const BallPoint& x);

/// Point a (+) ((-a (+) b) (x) t): the geodesic through a and b, with
/// gyroline(a, b, 0) = a and gyroline(a, b, 1) = b. Returns a when a == b.
BallPoint gyroline(const BallPoint& a, const BallPoint& b, double t);

/// Angle at `at` between the geodesics toward toward1 and toward2, in [0, pi].
/// The model is conformal, so this is the Euclidean angle of the log vectors.
double angle(const BallPoint& at, const BallPoint& toward1, const BallPoint& toward2);

struct DefectResult {
    double defect = 0.0;   // pi minus the interior angle sum, radians
    bool degenerate = false;
};

/// Triangle defect; strictly positive for non-degenerate triangles.
/// Coincident or collinear vertices yield defect 0 with the flag set.
DefectResult triangle_defect(const BallPoint& a, const BallPoint& b, const BallPoint& c);

namespace detail {

// Mobius addition on raw coordinates, kept unprojected so gradient code can
// differentiate the exact closed form. z = (alpha*u + beta*v) / den with
// alpha = 1 + 2c<u,v> + c||v||^2, beta = 1 - c||u||^2,
// den = 1 + 2c<u,v> + c^2 ||u||^2 ||v||^2.
struct MobiusParts {
    Vec z;
    double alpha = 0.0;
    double beta = 0.0;
    double den = 0.0;
};

MobiusParts mobius_add_parts(std::span<const double> u, std::span<const double> v, double c);

/// Reverse-mode product: accumulates d(loss)/du and d(loss)/dv into the given
/// buffers, where w = d(loss)/dz.
void mobius_add_vjp(const MobiusParts& parts, std::span<const double> u,
                    std::span<const double> v, double c, std::span<const double> w,
                    Vec& du_acc, Vec& dv_acc);

}  // namespace detail

}  // namespace hyperball
