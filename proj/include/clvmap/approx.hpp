#pragma once

#include <cstdint>
#include <vector>

#include "clvmap/map.hpp"

namespace clv {

/// Maximum continued-fraction truncation depth accepted by cf_slope.
inline constexpr std::uint32_t kMaxApproxOrder = 16;

/// y-coordinates of the preimage chain (y_0 = y, y_-1, ..., y_-N) obtained by
/// iterating the inverse map, with y_-1 = f(y) - x.
std::vector<double> preimage_chain(const McMillanMap& m, PlanarPoint p, std::uint32_t order);

/// Depth-N continued-fraction slope approximant, evaluated bottom-up:
/// t = f'(y_-N); t = f'(y_-q) - 1/t for q = N-1 .. 0. Order 0 is f'(y).
/// A vanishing intermediate raises the truncation-singular flag and the
/// evaluation continues on a guarded value.
double cf_slope(const McMillanMap& m, PlanarPoint p, std::uint32_t order,
                bool* truncation_singular = nullptr);

/// Error proxy for the depth-N truncation: fprime_max * exp(-2 N lambda),
/// the weight of the first discarded series term.
double series_weight_bound(double lambda, std::uint32_t order, double fprime_max);

}  // namespace clv
