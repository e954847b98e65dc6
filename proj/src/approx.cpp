#include "clvmap/approx.hpp"

#include <cmath>
#include <stdexcept>

#include "clvmap/tangent.hpp"

namespace clv {

std::vector<double> preimage_chain(const McMillanMap& m, PlanarPoint p, std::uint32_t order) {
    if (order > kMaxApproxOrder) throw std::invalid_argument("preimage_chain: order too large");
    std::vector<double> ys;
    ys.reserve(order + 1);
    ys.push_back(p.y);
    PlanarPoint q = p;
    for (std::uint32_t i = 0; i < order; ++i) {
        q = m.inverse_step(q);
        if (m.geometry() == Geometry::Plane && !finite_point(q))
            throw std::runtime_error("preimage_chain: preimage diverged");
        ys.push_back(q.y);
    }
    return ys;
}

double cf_slope(const McMillanMap& m, PlanarPoint p, std::uint32_t order,
                bool* truncation_singular) {
    const std::vector<double> ys = preimage_chain(m, p, order);
    double t = m.fprime(ys[order]);
    for (std::uint32_t q = order; q-- > 0;) {
        if (std::fabs(t) < kSingularGuard) {
            if (truncation_singular) *truncation_singular = true;
            t = t == 0.0 ? kSingularGuard : std::copysign(kSingularGuard, t);
        }
        t = m.fprime(ys[q]) - 1.0 / t;
    }
    return t;
}

double series_weight_bound(double lambda, std::uint32_t order, double fprime_max) {
    if (!(lambda > 0.0)) throw std::invalid_argument("series_weight_bound: lambda must be > 0");
    return fprime_max * std::exp(-2.0 * static_cast<double>(order) * lambda);
}

}  // namespace clv
