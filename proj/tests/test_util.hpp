#pragma once

#include <array>
#include <cmath>

#include "clvmap/map.hpp"

namespace testutil {

// Minimal 2x2 matrix helpers for cocycle / reversibility checks.
struct Mat2 {
    double a = 1, b = 0, c = 0, d = 1;

    static Mat2 identity() { return {}; }
    static Mat2 from(const clv::Jacobian2& j) { return {j.a, j.b, j.c, j.d}; }
    static Mat2 reflection() { return {0, 1, 1, 0}; }

    Mat2 operator*(const Mat2& o) const {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    Mat2 inverse_unit_det() const { return {d, -b, -c, a}; }  // valid when det == 1
    double det() const { return a * d - b * c; }
    double max_abs_diff(const Mat2& o) const {
        return std::max(std::max(std::fabs(a - o.a), std::fabs(b - o.b)),
                        std::max(std::fabs(c - o.c), std::fabs(d - o.d)));
    }
    double max_abs() const {
        return std::max(std::max(std::fabs(a), std::fabs(b)), std::max(std::fabs(c), std::fabs(d)));
    }
    // entrywise difference relative to the matrix scale; iterated Jacobians
    // grow exponentially, so an absolute tolerance is meaningless for them
    double scaled_diff(const Mat2& o) const { return max_abs_diff(o) / std::max(1.0, max_abs()); }
};

// Jacobian of the k-th map iterate, as the ordered product of step Jacobians.
inline Mat2 iterated_jacobian(const clv::MapModel& m, clv::PlanarPoint p, int k) {
    Mat2 f = Mat2::identity();
    for (int i = 0; i < k; ++i) {
        f = Mat2::from(m.jacobian(p)) * f;
        p = m.step(p);
    }
    return f;
}

// Jacobian of the k-th inverse-map iterate: product of inverse Jacobians at
// the stored backward orbit points (unit determinant assumed).
inline Mat2 iterated_inverse_jacobian(const clv::MapModel& m, clv::PlanarPoint q, int k) {
    Mat2 f = Mat2::identity();
    for (int i = 0; i < k; ++i) {
        q = m.inverse_step(q);
        f = Mat2::from(m.jacobian(q)).inverse_unit_det() * f;
    }
    return f;
}

inline clv::PlanarPoint iterate(const clv::MapModel& m, clv::PlanarPoint p, int k) {
    for (int i = 0; i < k; ++i) p = m.step(p);
    return p;
}

inline clv::PlanarPoint iterate_inverse(const clv::MapModel& m, clv::PlanarPoint p, int k) {
    for (int i = 0; i < k; ++i) p = m.inverse_step(p);
    return p;
}

inline double point_distance(clv::PlanarPoint a, clv::PlanarPoint b, clv::Geometry g) {
    if (g == clv::Geometry::Torus)
        return std::max(clv::circle_distance(a.x, b.x), clv::circle_distance(a.y, b.y));
    return std::max(std::fabs(a.x - b.x), std::fabs(a.y - b.y));
}

}  // namespace testutil
