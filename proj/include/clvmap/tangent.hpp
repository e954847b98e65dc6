#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "clvmap/map.hpp"
#include "clvmap/rng.hpp"

namespace clv {

/// Below this magnitude a slope (or Moebius factor gamma) is treated as
/// singular: the step is flagged, the sample is excluded from statistics and
/// the evolution continues on a substituted value. Singular slopes are
/// isolated along any orbit, so skipping them does not bias averages.
inline constexpr double kSingularGuard = 1e-300;

/// |psi| below this uses extended precision for the eta update, whose 1/psi^3
/// would otherwise overflow through a denormal cube.
inline constexpr double kEtaExtendedGuard = 1e-100;

/// Scalar splitting state at a point: slope cotangent psi, orientation sigma,
/// curvature auxiliary eta = dpsi/dy, and the singular flag of the last step.
struct TangentState {
    double psi = 1.0;
    int sigma = +1;
    double eta = 0.0;
    bool singular = false;
};

/// Running sum of ln|psi_q| (or ln|gamma_q|). Merging accumulators reproduces
/// the additive cocycle property of the finite-time exponent exactly.
struct FtleAccumulator {
    double sum_log = 0.0;
    std::uint64_t steps = 0;
    std::uint64_t singular_events = 0;

    void add(double log_abs_slope) {
        sum_log += log_abs_slope;
        ++steps;
    }
    void add_singular() { ++singular_events; }

    void merge(const FtleAccumulator& o) {
        sum_log += o.sum_log;
        steps += o.steps;
        singular_events += o.singular_events;
    }

    /// Reduced finite-time Lyapunov exponent (1/k) * sum ln|psi_q|.
    double value() const {
        if (steps == 0) throw std::runtime_error("FTLE accumulator is empty");
        return sum_log / static_cast<double>(steps);
    }
};

namespace detail {
inline double guarded_slope(double psi) {
    return psi == 0.0 ? kSingularGuard : std::copysign(kSingularGuard, psi);
}
inline double clamp_extended(long double v) {
    constexpr double hi = std::numeric_limits<double>::max();
    if (v > static_cast<long double>(hi)) return hi;
    if (v < -static_cast<long double>(hi)) return -hi;
    return static_cast<double>(v);
}
}  // namespace detail

/// One slope step: psi' = f'(x) - 1/psi.
inline double slope_step(double psi, double fprime, bool* singular = nullptr) {
    if (std::fabs(psi) < kSingularGuard) {
        if (singular) *singular = true;
        psi = detail::guarded_slope(psi);
    }
    return fprime - 1.0 / psi;
}

/// Orientation step: sigma' = sign(psi) * sigma.
inline int sign_step(int sigma, double psi, bool* singular = nullptr) {
    if (std::fabs(psi) < kSingularGuard) {
        if (singular) *singular = true;
        psi = detail::guarded_slope(psi);
    }
    return psi < 0.0 ? -sigma : sigma;
}

/// One curvature-auxiliary step: eta' = f''(x) + eta / psi^3.
inline double eta_step(double eta, double psi, double fsecond, bool* singular = nullptr) {
    double apsi = std::fabs(psi);
    if (apsi < kSingularGuard) {
        if (singular) *singular = true;
        psi = detail::guarded_slope(psi);
        apsi = kSingularGuard;
    }
    if (apsi < kEtaExtendedGuard) {
        const long double p = psi;
        return detail::clamp_extended(static_cast<long double>(fsecond) +
                                      static_cast<long double>(eta) / (p * p * p));
    }
    return fsecond + eta / (psi * psi * psi);
}

/// Curvature kappa = |eta| / (1 + psi^2)^(3/2).
inline double curvature(double psi, double eta) {
    const double h = std::hypot(1.0, psi);
    return std::fabs(eta) / h / h / h;
}

/// ln kappa, evaluated without overflowing the (1 + psi^2)^(3/2) factor.
inline double log_curvature(double psi, double eta) {
    return std::log(std::fabs(eta)) - 3.0 * std::log(std::hypot(1.0, psi));
}

/// One-step exponent lambda^1 = ln|psi| = ln|cot(alpha)|. Divergent (-inf)
/// for a vertical tangent, +inf for a horizontal one.
inline double one_step_exponent(double psi) { return std::log(std::fabs(psi)); }

/// Local expanding factor |psi_n| sqrt((1+psi_{n+1}^2)/(1+psi_n^2)) > 0.
inline double expanding_factor(double psi_n, double psi_next, bool* singular = nullptr) {
    if (std::fabs(psi_n) < kSingularGuard) {
        if (singular) *singular = true;
        psi_n = detail::guarded_slope(psi_n);
    }
    return std::fabs(psi_n) * (std::hypot(1.0, psi_next) / std::hypot(1.0, psi_n));
}

/// Direction angle alpha = arccot(psi), mapped into (-pi/2, pi/2].
inline double direction_angle(double psi) {
    if (psi == 0.0) return kPi / 2.0;
    return std::atan(1.0 / psi);
}

/// Unit tangent vector sigma/sqrt(1+psi^2) * (psi, 1).
inline Vec2 direction_vector(double psi, int sigma) {
    const double h = std::hypot(1.0, psi);
    const double s = sigma < 0 ? -1.0 : 1.0;
    return {s * psi / h, s / h};
}

/// Wrap an angle difference into (-pi/2, pi/2] (directions are lines mod pi).
inline double wrap_direction(double a) {
    while (a > kPi / 2.0) a -= kPi;
    while (a <= -kPi / 2.0) a += kPi;
    return a;
}

/// Full finite-time Lyapunov exponent: reduced value minus the transient
/// term (1/k) ln|sin(alpha_k)/sin(alpha_0)|. Equals the direct matrix-norm
/// exponent exactly when the slope orbit is seeded with cot(alpha_0).
inline double full_ftle(const FtleAccumulator& acc, double alpha_0, double alpha_k) {
    const double s0 = std::sin(alpha_0);
    const double sk = std::sin(alpha_k);
    if (s0 == 0.0 || sk == 0.0) throw std::domain_error("full_ftle: horizontal tangent");
    const double k = static_cast<double>(acc.steps);
    return acc.value() - std::log(std::fabs(sk / s0)) / k;
}

/// Random seed state: psi = cot(alpha) with alpha uniform in (-pi/2, pi/2),
/// eta = 0, sigma = +1.
inline TangentState seeded_state(SplitMix64& rng) {
    for (;;) {
        const double alpha = (rng.uniform() - 0.5) * kPi;
        const double t = std::tan(alpha);
        if (t != 0.0 && std::isfinite(t)) return TangentState{1.0 / t, +1, 0.0, false};
    }
}

/// Advance point and scalar tangent state for `steps` iterations of a
/// standard-like map. Per step the drives f'(x_n), f''(x_n) are read at the
/// current point, then x, psi, sigma, eta are updated in that order. The
/// accumulator receives ln|psi_n| of the pre-step slope, so after k steps it
/// holds exactly psi_0 .. psi_{k-1}. The sink is called after each step with
/// (step index, point, state).
template <class Sink>
TangentState evolve_scalar(const McMillanMap& m, PlanarPoint& p, TangentState s,
                           std::uint64_t steps, FtleAccumulator& acc, Sink&& sink) {
    const bool plane = m.geometry() == Geometry::Plane;
    for (std::uint64_t n = 0; n < steps; ++n) {
        const double fp = m.fprime(p.x);
        const double fs = m.fsecond(p.x);
        bool singular = false;
        const double psi = s.psi;
        if (std::fabs(psi) < kSingularGuard) {
            acc.add_singular();
            singular = true;
        } else {
            acc.add(std::log(std::fabs(psi)));
        }
        p = m.step(p);
        if (plane && !finite_point(p))
            throw std::runtime_error("orbit diverged to non-finite coordinates");
        const double psi_next = slope_step(psi, fp, &singular);
        const int sigma_next = sign_step(s.sigma, psi, &singular);
        const double eta_next = eta_step(s.eta, psi, fs, &singular);
        s = TangentState{psi_next, sigma_next, eta_next, singular};
        sink(n + 1, p, s);
    }
    return s;
}

inline TangentState evolve_scalar(const McMillanMap& m, PlanarPoint& p, TangentState s,
                                  std::uint64_t steps, FtleAccumulator& acc) {
    return evolve_scalar(m, p, s, steps, acc, [](std::uint64_t, PlanarPoint, TangentState) {});
}

}  // namespace clv
