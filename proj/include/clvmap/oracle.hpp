#pragma once

#include <cstdint>
#include <span>
#include <utility>

#include "clvmap/map.hpp"

namespace clv {

/// Reference implementations kept deliberately independent of the scalar
/// engines: matrix-vector iteration with renormalization, two-sided vector
/// iteration for the covariant directions, and circumcircle curvature.

/// FTLE by tangent-vector iteration: (1/k) sum ln ||J_n v_n|| with per-step
/// renormalization, seeded with w0.
double benettin_ftle(const MapModel& m, PlanarPoint start, std::uint64_t steps, Vec2 w0);

/// Covariant directions at p as slope cotangents (psi_plus, psi_minus).
/// The unstable direction comes from forward vector iteration started
/// `warmup` steps in the past, the stable one from inverse-Jacobian iteration
/// swept back from `warmup` steps in the future. Throws if the two probe
/// vectors fail to collapse (degenerate spectrum).
std::pair<double, double> clv_directions(const MapModel& m, PlanarPoint p, std::uint64_t warmup);

/// Curvature of the circle through consecutive point triples, averaged along
/// the sampled curve. Collinear triples contribute zero.
double fd_curvature(std::span<const double> xs, std::span<const double> ys);

}  // namespace clv
