#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <stdexcept>
#include <vector>

#include "clvmap/geometry.hpp"

namespace clv {

/// Jacobian of a planar map at a point, together with the gradients of its
/// entries (needed by the second-order tangent evolution) and its determinant.
struct Jacobian2 {
    double a = 1.0, b = 0.0, c = 0.0, d = 1.0;
    Vec2 grad_a{}, grad_b{}, grad_c{}, grad_d{};
    double det = 1.0;
};

class McMillanMap;

/// A C^2 map of the plane or 2-torus.
class MapModel {
public:
    virtual ~MapModel() = default;

    Geometry geometry() const { return geom_; }

    virtual PlanarPoint step(PlanarPoint p) const = 0;
    virtual PlanarPoint inverse_step(PlanarPoint p) const = 0;
    virtual Jacobian2 jacobian(PlanarPoint p) const = 0;

    /// Non-null when the map is of standard-like (McMillan) form.
    virtual const McMillanMap* mcmillan() const { return nullptr; }

protected:
    explicit MapModel(Geometry g) : geom_(g) {}

    static void require_finite(PlanarPoint p) {
        if (!finite_point(p)) throw std::domain_error("non-finite map coordinates");
    }

    Geometry geom_;
};

/// Standard-like map (x, y) -> (f(x) - y, x). Area preserving and reversible
/// by the reflection (x, y) -> (y, x) for any f; the Jacobian is
/// [[f'(x), -1], [1, 0]] and depends on the first coordinate only.
class McMillanMap : public MapModel {
public:
    virtual double f(double x) const = 0;
    virtual double fprime(double x) const = 0;
    virtual double fsecond(double x) const = 0;

    PlanarPoint step(PlanarPoint p) const override {
        require_finite(p);
        return wrap_point({f(p.x) - p.y, p.x}, geom_);
    }

    PlanarPoint inverse_step(PlanarPoint p) const override {
        require_finite(p);
        return wrap_point({p.y, f(p.y) - p.x}, geom_);
    }

    Jacobian2 jacobian(PlanarPoint p) const override {
        require_finite(p);
        Jacobian2 j;
        j.a = fprime(p.x);
        j.b = -1.0;
        j.c = 1.0;
        j.d = 0.0;
        j.grad_a = {fsecond(p.x), 0.0};
        j.grad_b = j.grad_c = j.grad_d = Vec2{0.0, 0.0};
        j.det = j.a * j.d - j.b * j.c;  // exactly 1
        return j;
    }

    const McMillanMap* mcmillan() const override { return this; }

protected:
    using MapModel::MapModel;
};

/// Chirikov-Taylor standard map: f(x) = 2x + K sin(x), mod 2pi on the torus.
class CtMap final : public McMillanMap {
public:
    explicit CtMap(double K, Geometry g = Geometry::Torus) : McMillanMap(g), k_(K) {
        if (!std::isfinite(K)) throw std::invalid_argument("CT map parameter K must be finite");
    }

    double K() const { return k_; }
    double f(double x) const override { return 2.0 * x + k_ * std::sin(x); }
    double fprime(double x) const override { return 2.0 + k_ * std::cos(x); }
    double fsecond(double x) const override { return -k_ * std::sin(x); }

private:
    double k_;
};

/// McMillan map with f(x) = c1 x + cs sin(x) + cc cos(x) + cq x^2 / 2.
/// Covers the synthetic test maps (pure linear, linear + quadratic) and
/// small custom variants reachable from the CLI.
class CoeffMcMillanMap final : public McMillanMap {
public:
    CoeffMcMillanMap(double linear, double sine, double cosine, double quadratic,
                     Geometry g = Geometry::Plane)
        : McMillanMap(g), c1_(linear), cs_(sine), cc_(cosine), cq_(quadratic) {
        if (!std::isfinite(c1_ + cs_ + cc_ + cq_))
            throw std::invalid_argument("McMillan coefficients must be finite");
    }

    double f(double x) const override {
        return c1_ * x + cs_ * std::sin(x) + cc_ * std::cos(x) + 0.5 * cq_ * x * x;
    }
    double fprime(double x) const override {
        return c1_ + cs_ * std::cos(x) - cc_ * std::sin(x) + cq_ * x;
    }
    double fsecond(double x) const override {
        return -cs_ * std::sin(x) - cc_ * std::cos(x) + cq_;
    }

private:
    double c1_, cs_, cc_, cq_;
};

/// McMillan map defined by user-supplied callables for f, f', f''.
class CallbackMcMillanMap final : public McMillanMap {
public:
    using Fn = std::function<double(double)>;

    CallbackMcMillanMap(Fn f, Fn fp, Fn fs, Geometry g = Geometry::Plane)
        : McMillanMap(g), f_(std::move(f)), fp_(std::move(fp)), fs_(std::move(fs)) {
        if (!f_ || !fp_ || !fs_) throw std::invalid_argument("null McMillan callback");
    }

    double f(double x) const override { return f_(x); }
    double fprime(double x) const override { return fp_(x); }
    double fsecond(double x) const override { return fs_(x); }

private:
    Fn f_, fp_, fs_;
};

/// Generic C^2 map given by callables for the image, its inverse (optional)
/// and the Jacobian with analytic entry gradients.
class CallbackGenericMap final : public MapModel {
public:
    using StepFn = std::function<PlanarPoint(PlanarPoint)>;
    using JacFn = std::function<Jacobian2(PlanarPoint)>;

    CallbackGenericMap(StepFn fwd, StepFn inv, JacFn jac, Geometry g = Geometry::Plane)
        : MapModel(g), fwd_(std::move(fwd)), inv_(std::move(inv)), jac_(std::move(jac)) {
        if (!fwd_ || !jac_) throw std::invalid_argument("null generic-map callback");
    }

    PlanarPoint step(PlanarPoint p) const override {
        require_finite(p);
        return wrap_point(fwd_(p), geom_);
    }
    PlanarPoint inverse_step(PlanarPoint p) const override {
        if (!inv_) throw std::runtime_error("generic map has no inverse callback");
        require_finite(p);
        return wrap_point(inv_(p), geom_);
    }
    Jacobian2 jacobian(PlanarPoint p) const override {
        require_finite(p);
        return jac_(p);
    }

private:
    StepFn fwd_, inv_;
    JacFn jac_;
};

/// Henon map (x, y) -> (1 - a x^2 + y, b x): the stock non-symplectic example
/// for the general tangent engine.
class HenonMap final : public MapModel {
public:
    HenonMap(double a, double b) : MapModel(Geometry::Plane), a_(a), b_(b) {
        if (!std::isfinite(a) || !std::isfinite(b) || b == 0.0)
            throw std::invalid_argument("Henon map requires finite a and nonzero b");
    }

    PlanarPoint step(PlanarPoint p) const override {
        require_finite(p);
        return {1.0 - a_ * p.x * p.x + p.y, b_ * p.x};
    }
    PlanarPoint inverse_step(PlanarPoint p) const override {
        require_finite(p);
        double x = p.y / b_;
        return {x, p.x - 1.0 + a_ * x * x};
    }
    Jacobian2 jacobian(PlanarPoint p) const override {
        require_finite(p);
        Jacobian2 j;
        j.a = -2.0 * a_ * p.x;
        j.b = 1.0;
        j.c = b_;
        j.d = 0.0;
        j.grad_a = {-2.0 * a_, 0.0};
        j.grad_b = j.grad_c = j.grad_d = Vec2{0.0, 0.0};
        j.det = j.a * j.d - j.b * j.c;  // -b
        return j;
    }

private:
    double a_, b_;
};

enum class StabilityClass { Hyperbolic, Elliptic, Parabolic };

/// Fixed point of a standard-like map with its linear stability data.
struct FixedPointReport {
    PlanarPoint location;
    double trace = 0.0;  // f' at the fixed point
    StabilityClass cls = StabilityClass::Parabolic;
    std::complex<double> chi_plus{1.0, 0.0};
    std::complex<double> chi_minus{1.0, 0.0};
    double lyapunov = 0.0;     // ln|chi_plus|
    double slope_plus = 0.0;   // eigen-slope chi_plus (NaN when elliptic)
    double slope_minus = 0.0;  // eigen-slope chi_minus (NaN when elliptic)
};

/// Classify a fixed point from its trace. |trace/2| within `parabolic_tol`
/// of 1 is reported parabolic.
FixedPointReport classify_fixed_point(double trace, double parabolic_tol = 1e-9);

/// All fixed points of a standard-like map: roots of f(x) - 2x = 0 (mod 2pi
/// on the torus) paired with y = x. Uniform scan at `resolution` samples
/// refined by bisection. On plane geometry the scan covers [-2pi, 2pi].
std::vector<FixedPointReport> fixed_points(const McMillanMap& m, int resolution = 10000);

}  // namespace clv
