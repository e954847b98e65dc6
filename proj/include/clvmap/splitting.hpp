#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "clvmap/map.hpp"
#include "clvmap/stats.hpp"
#include "clvmap/tangent.hpp"

namespace clv {

/// Splitting angle theta = alpha_minus - alpha_plus wrapped into
/// (-pi/2, pi/2]. Equal slopes give theta = 0 (a tangency, not an error).
inline double splitting_angle(double psi_plus, double psi_minus) {
    return wrap_direction(direction_angle(psi_minus) - direction_angle(psi_plus));
}

struct BackwardSweepResult {
    std::vector<double> psi_minus;       // aligned with the input x sequence
    std::vector<std::uint8_t> singular;  // per-entry singular-denominator flag
    std::size_t dropped_tail = 0;        // final unconverged entries
};

/// Stable slopes along a stored forward orbit by the backward sweep
/// psi_n = 1 / (f'(x_n) - psi_{n+1}), seeded past the final point. The last
/// `dropped_tail` entries are within the seed transient and marked dropped.
BackwardSweepResult backward_slope_sweep(std::span<const double> xs, const McMillanMap& m,
                                         double seed_slope, std::size_t dropped_tail = 0);

enum class ThetaCell : std::uint8_t { Ok = 0, Empty = 1, Tangency = 2 };

struct ThetaField {
    std::size_t n = 0;  // square grid
    std::vector<double> theta;
    std::vector<std::uint8_t> status;

    double at(std::size_t j, std::size_t k) const { return theta[j * n + k]; }
    ThetaCell cell_status(std::size_t j, std::size_t k) const {
        return static_cast<ThetaCell>(status[j * n + k]);
    }
};

/// Grid-transposition splitting angles: theta(j,k) from the cell-averaged
/// unstable slope and its transpose via
///   cot(theta) = (psi(j,k) + psi(k,j)) / (psi(j,k) psi(k,j) - 1).
/// Cells empty on either side stay empty; a near-zero denominator marks a
/// tangency cell. The output is exactly transpose symmetric.
ThetaField grid_split_field(const MeanField& psi_plus);

/// One matched sample of both slopes at a point.
struct ObservableRecord {
    std::uint64_t step = 0;
    PlanarPoint point;
    double psi_plus = 0.0;
    double psi_minus = 0.0;
    double eta = 0.0;
    double theta = 0.0;
    double lambda1 = 0.0;
    double log_kappa = 0.0;
    int sigma = +1;
    bool singular_plus = false;
    bool singular_minus = false;
    bool tangency = false;
};

struct ObservableOptions {
    std::uint64_t steps = 1000000;
    /// Initial steps dropped while the forward slope converges;
    /// kAutoTransient recomputes max(100, ceil(30/lambda)) from a pilot run.
    std::uint64_t transient = kAutoTransient;
    std::uint64_t window = 1000000;  // backward-sweep chunk length
    std::uint64_t overlap = 1000;    // lookahead re-seeding the sweep
    std::uint64_t seed = 1;

    static constexpr std::uint64_t kAutoTransient = ~std::uint64_t{0};
};

struct ObservableSummary {
    std::uint64_t emitted = 0;
    std::uint64_t transient_used = 0;
    std::uint64_t singular_plus = 0;
    std::uint64_t singular_minus = 0;
    std::uint64_t tangencies = 0;
    FtleAccumulator ftle;  // over the emitted range
};

namespace detail {
std::uint64_t auto_transient(const McMillanMap& m, PlanarPoint start, std::uint64_t seed,
                             std::uint64_t steps);
}

/// Stream matched (psi_plus, psi_minus, theta, lambda1, ln kappa) samples
/// along one orbit. The forward slope runs through the whole orbit; the
/// stable slope is swept backward over stored windows with `overlap` steps of
/// lookahead re-seeding, so both slopes refer to identical points. Samples
/// with index < transient are dropped.
template <class Sink>
ObservableSummary run_observables(const McMillanMap& m, PlanarPoint start,
                                  const ObservableOptions& opt, Sink&& sink) {
    if (opt.steps == 0) throw std::invalid_argument("run_observables: steps must be >= 1");
    if (opt.window == 0) throw std::invalid_argument("run_observables: window must be >= 1");

    ObservableSummary sum;
    std::uint64_t transient = opt.transient;
    if (transient == ObservableOptions::kAutoTransient)
        transient = detail::auto_transient(m, start, opt.seed, opt.steps);
    sum.transient_used = transient;
    const std::uint64_t overlap = std::max<std::uint64_t>(opt.overlap, transient);

    SplitMix64 rng(opt.seed);
    TangentState state = seeded_state(rng);
    PlanarPoint p = start;

    // Converge the forward slope before the sampled range.
    FtleAccumulator warm;
    if (transient > 0) state = evolve_scalar(m, p, state, transient, warm);

    std::vector<PlanarPoint> pts;
    std::vector<double> xs;
    std::uint64_t n = transient;  // absolute index of p
    while (n < opt.steps) {
        const std::uint64_t len = std::min<std::uint64_t>(opt.window, opt.steps - n);
        const std::uint64_t total = len + overlap;
        pts.clear();
        xs.clear();
        pts.reserve(total);
        xs.reserve(total);
        PlanarPoint q = p;
        for (std::uint64_t i = 0; i < total; ++i) {
            pts.push_back(q);
            xs.push_back(q.x);
            q = m.step(q);
            if (m.geometry() == Geometry::Plane && !finite_point(q))
                throw std::runtime_error("orbit diverged to non-finite coordinates");
        }

        BackwardSweepResult bwd = backward_slope_sweep(xs, m, 1.0, overlap);

        for (std::uint64_t i = 0; i < len; ++i) {
            ObservableRecord r;
            r.step = n + i;
            r.point = pts[i];
            r.psi_plus = state.psi;
            r.sigma = state.sigma;
            r.eta = state.eta;
            r.psi_minus = bwd.psi_minus[i];
            r.singular_minus = bwd.singular[i] != 0;
            r.tangency = r.psi_plus == r.psi_minus;
            r.theta = r.tangency ? 0.0 : splitting_angle(r.psi_plus, r.psi_minus);
            r.lambda1 = one_step_exponent(r.psi_plus);
            r.log_kappa = log_curvature(r.psi_plus, r.eta);

            bool singular = false;
            if (std::fabs(state.psi) < kSingularGuard) {
                sum.ftle.add_singular();
                singular = true;
            } else {
                sum.ftle.add(r.lambda1);
            }
            const double fp = m.fprime(pts[i].x);
            const double fs = m.fsecond(pts[i].x);
            const double psi = state.psi;
            state.psi = slope_step(psi, fp, &singular);
            state.sigma = sign_step(state.sigma, psi, &singular);
            state.eta = eta_step(state.eta, psi, fs, &singular);
            state.singular = singular;
            r.singular_plus = singular;

            if (singular) ++sum.singular_plus;
            if (r.singular_minus) ++sum.singular_minus;
            if (r.tangency) ++sum.tangencies;
            ++sum.emitted;
            sink(r);
        }
        p = pts.size() > len ? pts[len] : q;
        n += len;
    }
    return sum;
}

}  // namespace clv
