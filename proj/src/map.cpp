#include "clvmap/map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace clv {

FixedPointReport classify_fixed_point(double trace, double parabolic_tol) {
    if (!std::isfinite(trace)) throw std::domain_error("non-finite trace");
    FixedPointReport r;
    r.trace = trace;
    const double half = std::fabs(trace) / 2.0;
    const double sgn = trace < 0.0 ? -1.0 : 1.0;
    if (std::fabs(half - 1.0) <= parabolic_tol) {
        r.cls = StabilityClass::Parabolic;
        r.chi_plus = r.chi_minus = {sgn, 0.0};
        r.lyapunov = 0.0;
        r.slope_plus = r.slope_minus = sgn;
    } else if (half > 1.0) {
        r.cls = StabilityClass::Hyperbolic;
        const double lam = std::acosh(half);
        r.chi_plus = {sgn * std::exp(lam), 0.0};
        r.chi_minus = {sgn * std::exp(-lam), 0.0};
        r.lyapunov = lam;
        r.slope_plus = r.chi_plus.real();
        r.slope_minus = r.chi_minus.real();
    } else {
        r.cls = StabilityClass::Elliptic;
        const double ang = std::acos(half);
        r.chi_plus = sgn * std::complex<double>{std::cos(ang), std::sin(ang)};
        r.chi_minus = std::conj(r.chi_plus);
        r.lyapunov = 0.0;
        r.slope_plus = r.slope_minus = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

namespace {

// f(x) - 2x, the force whose zeros (mod 2pi on the torus) are fixed points.
double force(const McMillanMap& m, double x) { return m.f(x) - 2.0 * x; }

// Bisect force(x) - 2pi*branch on [a, b]; both endpoints assumed bracketing.
double bisect(const McMillanMap& m, double a, double b, double branch) {
    auto g = [&](double x) { return force(m, x) - kTwoPi * branch; };
    double fa = g(a);
    for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
        double mid = 0.5 * (a + b);
        double fm = g(mid);
        if ((fa <= 0.0) == (fm <= 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

std::vector<FixedPointReport> fixed_points(const McMillanMap& m, int resolution) {
    if (resolution < 2) throw std::invalid_argument("fixed_points: resolution must be >= 2");

    const bool torus = m.geometry() == Geometry::Torus;
    const double lo = torus ? 0.0 : -kTwoPi;
    const double hi = torus ? kTwoPi : kTwoPi;
    const double h = (hi - lo) / resolution;

    std::vector<double> roots;
    for (int i = 0; i < resolution; ++i) {
        const double a = lo + i * h;
        const double b = a + h;
        // Choose the branch from the midpoint so wrap jumps of the mod-2pi
        // condition do not fake sign changes.
        double branch = 0.0;
        if (torus) branch = std::nearbyint(force(m, 0.5 * (a + b)) / kTwoPi);
        const double ga = force(m, a) - kTwoPi * branch;
        const double gb = force(m, b) - kTwoPi * branch;
        if (ga == 0.0) {
            roots.push_back(a);
        } else if ((ga < 0.0) != (gb < 0.0) || gb == 0.0) {
            roots.push_back(bisect(m, a, b, branch));
        }
    }

    auto residual = [&](double x) {
        const double F = force(m, x);
        return torus ? std::fabs(std::remainder(F, kTwoPi)) : std::fabs(F);
    };

    // Where the force is tangent to a branch line the root is double and
    // bisection stalls in the fp noise floor around sqrt(eps); such a root is
    // a simple zero of F' = f' - 2, so polish on the derivative instead.
    auto polish_tangency = [&](double x) {
        auto dforce = [&](double t) { return m.fprime(t) - 2.0; };
        double a = x - h, b = x + h;
        double fa = dforce(a), fb = dforce(b);
        if ((fa < 0.0) == (fb < 0.0)) return x;
        for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
            const double mid = 0.5 * (a + b);
            const double fm = dforce(mid);
            if ((fa <= 0.0) == (fm <= 0.0)) {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
        }
        const double y = 0.5 * (a + b);
        return (residual(y) < 1e-10 && residual(y) <= residual(x)) ? y : x;
    };
    for (double& x : roots) x = polish_tangency(x);

    // Deduplicate within 1e-6 (well below the scan spacing), keeping the
    // candidate with the smaller residual of the fixed-point condition.
    std::sort(roots.begin(), roots.end());
    std::vector<double> unique;
    for (double x : roots) {
        if (torus) x = wrap_angle(x);
        bool dup = false;
        for (double& u : unique) {
            const double d = torus ? circle_distance(x, u) : std::fabs(x - u);
            if (d < 1e-6) {
                if (residual(x) < residual(u) ||
                    (residual(x) == residual(u) && std::fabs(m.fprime(x) - 2.0) < std::fabs(m.fprime(u) - 2.0)))
                    u = x;
                dup = true;
                break;
            }
        }
        if (!dup) unique.push_back(x);
    }
    std::sort(unique.begin(), unique.end());
    std::vector<FixedPointReport> out;
    for (double x : unique) {
        FixedPointReport r = classify_fixed_point(m.fprime(x));
        r.location = {x, x};
        out.push_back(r);
    }
    return out;
}

}  // namespace clv
