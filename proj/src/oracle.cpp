#include "clvmap/oracle.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace clv {

namespace {

Vec2 apply(const Jacobian2& j, Vec2 v) { return {j.a * v.x + j.b * v.y, j.c * v.x + j.d * v.y}; }

// Inverse Jacobian. For standard-like entries (f', -1, 1, 0) this is the
// exact reflection conjugate [[0, 1], [-1, f']]; the general case uses the
// adjugate over the determinant.
Vec2 apply_inverse(const Jacobian2& j, Vec2 v) {
    if (j.b == -1.0 && j.c == 1.0 && j.d == 0.0)
        return {v.y, -v.x + j.a * v.y};
    if (j.det == 0.0) throw std::runtime_error("singular Jacobian");
    return {(j.d * v.x - j.b * v.y) / j.det, (-j.c * v.x + j.a * v.y) / j.det};
}

Vec2 normalized(Vec2 v) {
    const double h = std::hypot(v.x, v.y);
    if (h == 0.0 || !std::isfinite(h)) throw std::runtime_error("degenerate tangent vector");
    return {v.x / h, v.y / h};
}

double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

double cotangent(Vec2 v) { return v.x / v.y; }

constexpr double kCollapseTol = 1e-6;

}  // namespace

double benettin_ftle(const MapModel& m, PlanarPoint start, std::uint64_t steps, Vec2 w0) {
    if (steps == 0) throw std::invalid_argument("benettin_ftle: steps must be >= 1");
    Vec2 v = normalized(w0);
    PlanarPoint p = start;
    double sum = 0.0;
    for (std::uint64_t n = 0; n < steps; ++n) {
        const Vec2 u = apply(m.jacobian(p), v);
        const double g = std::hypot(u.x, u.y);
        if (g == 0.0 || !std::isfinite(g)) throw std::runtime_error("benettin_ftle: vector collapsed");
        sum += std::log(g);
        v = {u.x / g, u.y / g};
        p = m.step(p);
    }
    return sum / static_cast<double>(steps);
}

std::pair<double, double> clv_directions(const MapModel& m, PlanarPoint p, std::uint64_t warmup) {
    if (warmup == 0) throw std::invalid_argument("clv_directions: warmup must be >= 1");

    // Unstable: run two probes forward along the stored backward orbit of p.
    // Jacobians are taken at the stored points; replaying the preimage through
    // the map instead would diverge from the orbit through p exponentially.
    std::vector<PlanarPoint> past(warmup);
    PlanarPoint q = p;
    for (std::uint64_t i = 0; i < warmup; ++i) {
        q = m.inverse_step(q);
        past[warmup - 1 - i] = q;  // past[0] = f^-warmup(p), past.back() = f^-1(p)
    }
    Vec2 u1{1.0, 0.0}, u2{0.0, 1.0};
    for (std::uint64_t i = 0; i < warmup; ++i) {
        const Jacobian2 j = m.jacobian(past[i]);
        u1 = normalized(apply(j, u1));
        u2 = normalized(apply(j, u2));
    }
    if (std::fabs(cross(u1, u2)) > kCollapseTol)
        throw std::runtime_error("clv_directions: forward iteration did not converge");

    // Stable: store the future orbit and sweep inverse Jacobians back to p.
    std::vector<PlanarPoint> future(warmup);
    q = p;
    for (std::uint64_t i = 0; i < warmup; ++i) {
        future[i] = q;
        q = m.step(q);
    }
    Vec2 s1{1.0, 0.0}, s2{0.0, 1.0};
    for (std::uint64_t i = warmup; i-- > 0;) {
        const Jacobian2 j = m.jacobian(future[i]);
        s1 = normalized(apply_inverse(j, s1));
        s2 = normalized(apply_inverse(j, s2));
    }
    if (std::fabs(cross(s1, s2)) > kCollapseTol)
        throw std::runtime_error("clv_directions: backward iteration did not converge");

    return {cotangent(u1), cotangent(s1)};
}

double fd_curvature(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw std::invalid_argument("fd_curvature: need at least 3 points");
    double sum = 0.0;
    std::size_t triples = 0;
    for (std::size_t i = 0; i + 2 < xs.size(); ++i) {
        const Vec2 ab{xs[i + 1] - xs[i], ys[i + 1] - ys[i]};
        const Vec2 bc{xs[i + 2] - xs[i + 1], ys[i + 2] - ys[i + 1]};
        const Vec2 ac{xs[i + 2] - xs[i], ys[i + 2] - ys[i]};
        const double la = std::hypot(ab.x, ab.y);
        const double lb = std::hypot(bc.x, bc.y);
        const double lc = std::hypot(ac.x, ac.y);
        if (la == 0.0 || lb == 0.0 || lc == 0.0)
            throw std::invalid_argument("fd_curvature: points must be pairwise distinct");
        sum += 2.0 * std::fabs(cross(ab, bc)) / (la * lb * lc);
        ++triples;
    }
    return sum / static_cast<double>(triples);
}

}  // namespace clv
