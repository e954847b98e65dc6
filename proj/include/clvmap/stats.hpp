#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "clvmap/map.hpp"

namespace clv {

/// 1D binned counter with underflow/overflow/non-finite buckets. Every sample
/// increments exactly one counter, so the total is conserved and merging is
/// exact integer addition.
class Histogram1D {
public:
    Histogram1D(double lo, double hi, std::uint32_t bins);

    void add(double v);
    void merge(const Histogram1D& o);

    std::uint32_t bins() const { return bins_; }
    double lo() const { return lo_; }
    double hi() const { return hi_; }
    double bin_left(std::uint32_t i) const { return lo_ + (hi_ - lo_) * i / bins_; }
    double bin_right(std::uint32_t i) const { return lo_ + (hi_ - lo_) * (i + 1) / bins_; }
    std::uint64_t bin_count(std::uint32_t i) const { return counts_[i]; }
    std::uint64_t underflow() const { return underflow_; }
    std::uint64_t overflow() const { return overflow_; }
    std::uint64_t non_finite() const { return non_finite_; }
    std::uint64_t total() const { return total_; }
    std::uint64_t in_range() const { return total_ - underflow_ - overflow_ - non_finite_; }

    /// L1 distance of the in-range normalized bin masses of two histograms.
    static double l1_distance(const Histogram1D& a, const Histogram1D& b);

private:
    double lo_, hi_;
    std::uint32_t bins_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t underflow_ = 0, overflow_ = 0, non_finite_ = 0, total_ = 0;
};

/// 2D binned counter; out-of-range samples are routed to per-axis buckets
/// (x checked first), non-finite samples to a single bucket.
class Histogram2D {
public:
    Histogram2D(double x_lo, double x_hi, std::uint32_t x_bins, double y_lo, double y_hi,
                std::uint32_t y_bins);

    void add(double x, double y);
    void merge(const Histogram2D& o);

    std::uint32_t x_bins() const { return xb_; }
    std::uint32_t y_bins() const { return yb_; }
    std::uint64_t bin_count(std::uint32_t i, std::uint32_t j) const { return counts_[std::size_t(i) * yb_ + j]; }
    std::uint64_t x_underflow() const { return xu_; }
    std::uint64_t x_overflow() const { return xo_; }
    std::uint64_t y_underflow() const { return yu_; }
    std::uint64_t y_overflow() const { return yo_; }
    std::uint64_t non_finite() const { return non_finite_; }
    std::uint64_t total() const { return total_; }

private:
    double xlo_, xhi_, ylo_, yhi_;
    std::uint32_t xb_, yb_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t xu_ = 0, xo_ = 0, yu_ = 0, yo_ = 0, non_finite_ = 0, total_ = 0;
};

/// Phase-space grid of per-cell running means (stored as sum and count, so
/// mean = sum/count exactly). Empty cells are marked by count = 0; samples
/// with non-finite value are counted separately and excluded from means.
class MeanField {
public:
    MeanField(double x_lo, double x_hi, double y_lo, double y_hi, std::uint32_t nx,
              std::uint32_t ny);

    /// Torus-default convenience: [0, 2pi) x [0, 2pi).
    static MeanField torus(std::uint32_t nx, std::uint32_t ny);

    void add(double x, double y, double value);
    void merge(const MeanField& o);

    std::uint32_t nx() const { return nx_; }
    std::uint32_t ny() const { return ny_; }
    std::uint64_t count(std::uint32_t i, std::uint32_t j) const { return count_[idx(i, j)]; }
    double mean(std::uint32_t i, std::uint32_t j) const;
    std::uint64_t outside() const { return outside_; }
    std::uint64_t non_finite() const { return non_finite_; }

private:
    std::size_t idx(std::uint32_t i, std::uint32_t j) const { return std::size_t(i) * ny_ + j; }

    double xlo_, xhi_, ylo_, yhi_;
    std::uint32_t nx_, ny_;
    std::vector<double> sum_;
    std::vector<std::uint64_t> count_;
    std::uint64_t outside_ = 0, non_finite_ = 0;
};

/// Conditional histograms of a value split on the sign of the one-step
/// exponent; lambda1 = 0 (or NaN) samples go to a separate bucket.
class ConditionalSplit1D {
public:
    ConditionalSplit1D(double lo, double hi, std::uint32_t bins)
        : positive_(lo, hi, bins), negative_(lo, hi, bins) {}

    void add(double lambda1, double value) {
        if (lambda1 > 0.0)
            positive_.add(value);
        else if (lambda1 < 0.0)
            negative_.add(value);
        else
            ++zero_;
    }
    void merge(const ConditionalSplit1D& o) {
        positive_.merge(o.positive_);
        negative_.merge(o.negative_);
        zero_ += o.zero_;
    }

    const Histogram1D& positive() const { return positive_; }
    const Histogram1D& negative() const { return negative_; }
    std::uint64_t zero_bucket() const { return zero_; }
    std::uint64_t total() const { return positive_.total() + negative_.total() + zero_; }

private:
    Histogram1D positive_, negative_;
    std::uint64_t zero_ = 0;
};

enum class FitModel { Auto, Exponential, PowerLaw };

struct DecayFit {
    FitModel model = FitModel::Exponential;
    double rate = 0.0;      // d ln(v)/dt, or the power-law exponent
    double residual = 0.0;  // rms residual of the log fit
    std::size_t first = 0;  // fitted window [first, last)
    std::size_t last = 0;
};

/// Least-squares slope of ln(value) against t (exponential) or ln t (power
/// law). Non-positive values are trimmed from the window first; fewer than 5
/// surviving points is an error. Auto picks the model with smaller residual.
DecayFit rate_fit(std::span<const double> times, std::span<const double> values,
                  FitModel model = FitModel::Auto);

enum class EnsembleQuantity { Psi, Eta };

/// Spread of an ensemble of tangent seeds driven along one fixed orbit.
struct DecaySeries {
    std::vector<double> times;
    std::vector<double> spread;  // ensemble standard deviation per sampled time
    std::uint32_t members = 0;
    std::uint64_t singular_events = 0;
};

/// Run `members` copies of the scalar recursion along the single orbit
/// starting at `start` (after `warmup` steps that converge a common tangent
/// state) and record the ensemble spread at the sampled times.
/// Quantity Psi varies the slope seeds (cot of uniform angles, eta = 0);
/// quantity Eta varies eta seeds uniformly in (-1, 1) over the common
/// converged slope sequence. Results are independent of `workers`.
DecaySeries ensemble_decay(const McMillanMap& m, PlanarPoint start, EnsembleQuantity quantity,
                           std::uint32_t members, std::uint64_t steps,
                           std::span<const std::uint64_t> sample_times, std::uint64_t seed,
                           std::uint32_t workers = 1, std::uint64_t warmup = 100);

/// Fitted-window policy: start where the spread first falls below half its
/// initial value, stop at the 1e3 * epsilon floor, then rate_fit.
DecayFit fit_decay_window(const DecaySeries& series, FitModel model = FitModel::Auto);

}  // namespace clv
