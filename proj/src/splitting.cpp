#include "clvmap/splitting.hpp"

namespace clv {

BackwardSweepResult backward_slope_sweep(std::span<const double> xs, const McMillanMap& m,
                                         double seed_slope, std::size_t dropped_tail) {
    if (xs.empty()) throw std::invalid_argument("backward_slope_sweep: empty orbit");
    if (!std::isfinite(seed_slope)) throw std::invalid_argument("backward_slope_sweep: bad seed");

    BackwardSweepResult out;
    out.psi_minus.resize(xs.size());
    out.singular.assign(xs.size(), 0);
    out.dropped_tail = std::min(dropped_tail, xs.size());

    double next = seed_slope;
    for (std::size_t i = xs.size(); i-- > 0;) {
        double denom = m.fprime(xs[i]) - next;
        if (std::fabs(denom) < kSingularGuard) {
            out.singular[i] = 1;
            denom = denom == 0.0 ? kSingularGuard : std::copysign(kSingularGuard, denom);
        }
        next = 1.0 / denom;
        out.psi_minus[i] = next;
    }
    return out;
}

ThetaField grid_split_field(const MeanField& psi_plus) {
    if (psi_plus.nx() != psi_plus.ny())
        throw std::invalid_argument("grid_split_field: grid must be square");
    const std::size_t n = psi_plus.nx();

    ThetaField out;
    out.n = n;
    out.theta.assign(n * n, std::numeric_limits<double>::quiet_NaN());
    out.status.assign(n * n, static_cast<std::uint8_t>(ThetaCell::Empty));

    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            if (psi_plus.count(j, k) == 0 || psi_plus.count(k, j) == 0) continue;
            const double p1 = psi_plus.mean(j, k);
            const double p2 = psi_plus.mean(k, j);
            const double denom = p1 * p2 - 1.0;
            if (std::fabs(denom) < 1e-12) {
                out.theta[j * n + k] = 0.0;
                out.status[j * n + k] = static_cast<std::uint8_t>(ThetaCell::Tangency);
                continue;
            }
            const double cot_theta = (p1 + p2) / denom;
            out.theta[j * n + k] = direction_angle(cot_theta);
            out.status[j * n + k] = static_cast<std::uint8_t>(ThetaCell::Ok);
        }
    }
    return out;
}

namespace detail {

std::uint64_t auto_transient(const McMillanMap& m, PlanarPoint start, std::uint64_t seed,
                             std::uint64_t steps) {
    const std::uint64_t pilot = std::min<std::uint64_t>(10000, steps);
    SplitMix64 rng(seed);
    TangentState s = seeded_state(rng);
    PlanarPoint p = start;
    FtleAccumulator acc;
    evolve_scalar(m, p, s, pilot, acc);
    double lambda = 0.0;
    if (acc.steps > 0) lambda = acc.value();
    std::uint64_t t = 100;
    if (lambda > 0.0) t = std::max<std::uint64_t>(100, static_cast<std::uint64_t>(std::ceil(30.0 / lambda)));
    else t = 3000;  // non-expansive pilot: fall back to a long transient
    return std::min<std::uint64_t>(t, std::max<std::uint64_t>(1, steps / 4));
}

}  // namespace detail

}  // namespace clv
