#pragma once

#include <cmath>

namespace clv {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 3.1415926535897932384626433832795;

enum class Geometry { Torus, Plane };

/// A phase-space point. On torus geometry both coordinates live in [0, 2pi).
struct PlanarPoint {
    double x = 0.0;
    double y = 0.0;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double wrap_angle(double v) {
    double w = std::fmod(v, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;  // fmod of tiny negatives can round up to 2pi
    return w;
}

inline PlanarPoint wrap_point(PlanarPoint p, Geometry g) {
    if (g == Geometry::Torus) {
        p.x = wrap_angle(p.x);
        p.y = wrap_angle(p.y);
    }
    return p;
}

/// Shortest distance between two angles on the circle of circumference 2pi.
inline double circle_distance(double a, double b) {
    double d = std::fabs(a - b);
    return d > kTwoPi - d ? kTwoPi - d : d;
}

inline bool finite_point(PlanarPoint p) {
    return std::isfinite(p.x) && std::isfinite(p.y);
}

}  // namespace clv
