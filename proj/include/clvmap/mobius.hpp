#pragma once

#include <cmath>
#include <cstdint>
#include <span>

#include "clvmap/map.hpp"
#include "clvmap/tangent.hpp"

namespace clv {

/// The Moebius factor gamma = C psi + D that scales the slope update and
/// drives both the orientation flip and the reduced exponent.
inline double mobius_gamma(double psi, double c, double d) { return c * psi + d; }

struct MobiusSlopeResult {
    double psi = 0.0;
    int sigma = +1;
    double gamma = 0.0;
    bool singular = false;
};

/// Projective slope step psi' = (A psi + B) / (C psi + D), sigma' = sign(gamma) sigma.
/// When D = 0 the fraction is evaluated as A/C - (det/C)/gamma, which reduces
/// bit for bit to the standard-like recursion f' - 1/psi for the entries
/// (f', -1, 1, 0).
inline MobiusSlopeResult mobius_slope_step(double psi, int sigma, const Jacobian2& j) {
    MobiusSlopeResult r;
    r.gamma = mobius_gamma(psi, j.c, j.d);
    double g = r.gamma;
    if (std::fabs(g) < kSingularGuard) {
        r.singular = true;
        g = g == 0.0 ? kSingularGuard : std::copysign(kSingularGuard, g);
    }
    if (j.d == 0.0 && j.c != 0.0) {
        r.psi = j.a / j.c - (j.det / j.c) / g;
    } else {
        r.psi = (j.a * psi + j.b) / g;
    }
    r.sigma = g < 0.0 ? -sigma : sigma;
    return r;
}

/// Second-order step eta' = (det(J) eta + a + b psi + c psi^2) / gamma^3 with
///   a = v.(D grad B - B grad D), b = v.(D grad A - A grad D + C grad B - B grad C),
///   c = v.(C grad A - A grad C), v = (psi, 1).
/// The polynomial is expanded into monomials and divided through ratio powers
/// (psi/gamma)^k, so the standard-like case (gamma = psi) reduces bit for bit
/// to f'' + eta/psi^3.
inline double mobius_eta_step(double eta, double psi, const Jacobian2& j,
                              bool* singular = nullptr) {
    double gamma = mobius_gamma(psi, j.c, j.d);
    if (std::fabs(gamma) < kSingularGuard) {
        if (singular) *singular = true;
        gamma = gamma == 0.0 ? kSingularGuard : std::copysign(kSingularGuard, gamma);
    }

    const double ax = j.d * j.grad_b.x - j.b * j.grad_d.x;
    const double ay = j.d * j.grad_b.y - j.b * j.grad_d.y;
    const double bx = j.d * j.grad_a.x - j.a * j.grad_d.x + j.c * j.grad_b.x - j.b * j.grad_c.x;
    const double by = j.d * j.grad_a.y - j.a * j.grad_d.y + j.c * j.grad_b.y - j.b * j.grad_c.y;
    const double cx = j.c * j.grad_a.x - j.a * j.grad_c.x;
    const double cy = j.c * j.grad_a.y - j.a * j.grad_c.y;

    const double r1 = psi / gamma;
    if (std::fabs(gamma) < kEtaExtendedGuard || std::fabs(r1) > 1e100) {
        const long double g = gamma;
        const long double p = psi;
        const long double poly = static_cast<long double>(ay) + (ax + by) * p +
                                 (bx + cy) * p * p + static_cast<long double>(cx) * p * p * p;
        return detail::clamp_extended(
            (static_cast<long double>(j.det) * eta + poly) / (g * g * g));
    }

    const double g2 = gamma * gamma;
    const double g3 = g2 * gamma;
    const double r2 = r1 * r1;
    const double r3 = r2 * r1;
    return (j.det * eta) / g3 + ay / g3 + (ax + by) * (r1 / g2) + (bx + cy) * (r2 / gamma) +
           cx * r3;
}

/// Reduced finite-time exponent (1/k) sum ln|gamma_n|.
double mobius_ftle(std::span<const double> gammas);

enum class OrbitKind { Hyperbolic, PurelyExpansive, PurelyContractive };

/// Convergence rates and classification of the slope/curvature recursions on
/// an orbit with exponents lambda_plus >= lambda_minus.
struct ConvergenceClass {
    double lambda_plus = 0.0;
    double lambda_minus = 0.0;
    OrbitKind kind = OrbitKind::Hyperbolic;
    double psi_rate = 0.0;        // -(lambda_plus - lambda_minus)
    double eta_rate_plus = 0.0;   // -(lambda_plus - lambda_minus) - lambda_plus
    double eta_rate_minus = 0.0;  // -(lambda_plus - lambda_minus) + lambda_minus
    bool psi_converges = false;
    bool eta_converges_plus = false;
    bool eta_converges_minus = false;
};

ConvergenceClass classify_convergence(double lambda_plus, double lambda_minus);

/// General-map counterpart of evolve_scalar: advances point and tangent state
/// through the Moebius action of the Jacobian, accumulating ln|gamma_n|.
template <class Sink>
TangentState evolve_general(const MapModel& m, PlanarPoint& p, TangentState s,
                            std::uint64_t steps, FtleAccumulator& acc, Sink&& sink) {
    const bool plane = m.geometry() == Geometry::Plane;
    for (std::uint64_t n = 0; n < steps; ++n) {
        const Jacobian2 j = m.jacobian(p);
        bool singular = false;
        const MobiusSlopeResult r = mobius_slope_step(s.psi, s.sigma, j);
        const double eta_next = mobius_eta_step(s.eta, s.psi, j, &singular);
        if (r.singular || singular) {
            acc.add_singular();
            singular = true;
        } else {
            acc.add(std::log(std::fabs(r.gamma)));
        }
        p = m.step(p);
        if (plane && !finite_point(p))
            throw std::runtime_error("orbit diverged to non-finite coordinates");
        s = TangentState{r.psi, r.sigma, eta_next, singular};
        sink(n + 1, p, s);
    }
    return s;
}

inline TangentState evolve_general(const MapModel& m, PlanarPoint& p, TangentState s,
                                   std::uint64_t steps, FtleAccumulator& acc) {
    return evolve_general(m, p, s, steps, acc, [](std::uint64_t, PlanarPoint, TangentState) {});
}

}  // namespace clv
