#include "clvmap/stats.hpp"

#include <algorithm>
#include <limits>
#include <thread>

#include "clvmap/rng.hpp"
#include "clvmap/tangent.hpp"

namespace clv {

Histogram1D::Histogram1D(double lo, double hi, std::uint32_t bins) : lo_(lo), hi_(hi), bins_(bins) {
    if (!(lo < hi) || bins == 0) throw std::invalid_argument("Histogram1D: bad range or bins");
    counts_.assign(bins, 0);
}

void Histogram1D::add(double v) {
    ++total_;
    if (!std::isfinite(v)) {
        ++non_finite_;
    } else if (v < lo_) {
        ++underflow_;
    } else if (v > hi_) {
        ++overflow_;
    } else {
        auto i = static_cast<std::uint32_t>((v - lo_) / (hi_ - lo_) * bins_);
        if (i >= bins_) i = bins_ - 1;  // right edge inclusive
        ++counts_[i];
    }
}

void Histogram1D::merge(const Histogram1D& o) {
    if (o.lo_ != lo_ || o.hi_ != hi_ || o.bins_ != bins_)
        throw std::invalid_argument("Histogram1D: merge shape mismatch");
    for (std::uint32_t i = 0; i < bins_; ++i) counts_[i] += o.counts_[i];
    underflow_ += o.underflow_;
    overflow_ += o.overflow_;
    non_finite_ += o.non_finite_;
    total_ += o.total_;
}

double Histogram1D::l1_distance(const Histogram1D& a, const Histogram1D& b) {
    if (a.bins_ != b.bins_) throw std::invalid_argument("l1_distance: bin mismatch");
    const double na = static_cast<double>(a.in_range());
    const double nb = static_cast<double>(b.in_range());
    if (na == 0.0 || nb == 0.0) throw std::invalid_argument("l1_distance: empty histogram");
    double d = 0.0;
    for (std::uint32_t i = 0; i < a.bins_; ++i)
        d += std::fabs(a.counts_[i] / na - b.counts_[i] / nb);
    return d;
}

Histogram2D::Histogram2D(double x_lo, double x_hi, std::uint32_t x_bins, double y_lo, double y_hi,
                         std::uint32_t y_bins)
    : xlo_(x_lo), xhi_(x_hi), ylo_(y_lo), yhi_(y_hi), xb_(x_bins), yb_(y_bins) {
    if (!(x_lo < x_hi) || !(y_lo < y_hi) || x_bins == 0 || y_bins == 0)
        throw std::invalid_argument("Histogram2D: bad range or bins");
    counts_.assign(std::size_t(xb_) * yb_, 0);
}

void Histogram2D::add(double x, double y) {
    ++total_;
    if (!std::isfinite(x) || !std::isfinite(y)) {
        ++non_finite_;
        return;
    }
    if (x < xlo_) {
        ++xu_;
        return;
    }
    if (x > xhi_) {
        ++xo_;
        return;
    }
    if (y < ylo_) {
        ++yu_;
        return;
    }
    if (y > yhi_) {
        ++yo_;
        return;
    }
    auto i = static_cast<std::uint32_t>((x - xlo_) / (xhi_ - xlo_) * xb_);
    auto j = static_cast<std::uint32_t>((y - ylo_) / (yhi_ - ylo_) * yb_);
    if (i >= xb_) i = xb_ - 1;
    if (j >= yb_) j = yb_ - 1;
    ++counts_[std::size_t(i) * yb_ + j];
}

void Histogram2D::merge(const Histogram2D& o) {
    if (o.xlo_ != xlo_ || o.xhi_ != xhi_ || o.ylo_ != ylo_ || o.yhi_ != yhi_ || o.xb_ != xb_ ||
        o.yb_ != yb_)
        throw std::invalid_argument("Histogram2D: merge shape mismatch");
    for (std::size_t k = 0; k < counts_.size(); ++k) counts_[k] += o.counts_[k];
    xu_ += o.xu_;
    xo_ += o.xo_;
    yu_ += o.yu_;
    yo_ += o.yo_;
    non_finite_ += o.non_finite_;
    total_ += o.total_;
}

MeanField::MeanField(double x_lo, double x_hi, double y_lo, double y_hi, std::uint32_t nx,
                     std::uint32_t ny)
    : xlo_(x_lo), xhi_(x_hi), ylo_(y_lo), yhi_(y_hi), nx_(nx), ny_(ny) {
    if (!(x_lo < x_hi) || !(y_lo < y_hi) || nx == 0 || ny == 0)
        throw std::invalid_argument("MeanField: bad range or grid");
    sum_.assign(std::size_t(nx_) * ny_, 0.0);
    count_.assign(std::size_t(nx_) * ny_, 0);
}

MeanField MeanField::torus(std::uint32_t nx, std::uint32_t ny) {
    return MeanField(0.0, kTwoPi, 0.0, kTwoPi, nx, ny);
}

void MeanField::add(double x, double y, double value) {
    if (!std::isfinite(value)) {
        ++non_finite_;
        return;
    }
    if (!std::isfinite(x) || !std::isfinite(y) || x < xlo_ || x >= xhi_ || y < ylo_ || y >= yhi_) {
        ++outside_;
        return;
    }
    auto i = static_cast<std::uint32_t>((x - xlo_) / (xhi_ - xlo_) * nx_);
    auto j = static_cast<std::uint32_t>((y - ylo_) / (yhi_ - ylo_) * ny_);
    if (i >= nx_) i = nx_ - 1;
    if (j >= ny_) j = ny_ - 1;
    sum_[idx(i, j)] += value;
    ++count_[idx(i, j)];
}

void MeanField::merge(const MeanField& o) {
    if (o.nx_ != nx_ || o.ny_ != ny_ || o.xlo_ != xlo_ || o.xhi_ != xhi_ || o.ylo_ != ylo_ ||
        o.yhi_ != yhi_)
        throw std::invalid_argument("MeanField: merge shape mismatch");
    for (std::size_t k = 0; k < sum_.size(); ++k) {
        sum_[k] += o.sum_[k];
        count_[k] += o.count_[k];
    }
    outside_ += o.outside_;
    non_finite_ += o.non_finite_;
}

double MeanField::mean(std::uint32_t i, std::uint32_t j) const {
    const std::uint64_t c = count_[idx(i, j)];
    if (c == 0) return std::numeric_limits<double>::quiet_NaN();
    return sum_[idx(i, j)] / static_cast<double>(c);
}

namespace {

struct LineFit {
    double slope = 0.0;
    double residual = 0.0;
};

LineFit least_squares(std::span<const double> xs, std::span<const double> ys) {
    const std::size_t n = xs.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("rate_fit: degenerate abscissa");
    LineFit f;
    f.slope = sxy / sxx;
    const double b = my - f.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (f.slope * xs[i] + b);
        rss += r * r;
    }
    f.residual = std::sqrt(rss / n);
    return f;
}

}  // namespace

DecayFit rate_fit(std::span<const double> times, std::span<const double> values, FitModel model) {
    if (times.size() != values.size()) throw std::invalid_argument("rate_fit: size mismatch");
    std::vector<double> t, lv;
    t.reserve(times.size());
    lv.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (values[i] > 0.0 && std::isfinite(values[i])) {
            t.push_back(times[i]);
            lv.push_back(std::log(values[i]));
        }
    }
    if (t.size() < 5) throw std::runtime_error("rate_fit: fewer than 5 positive points");

    DecayFit out;
    out.last = t.size();
    if (model == FitModel::Exponential || model == FitModel::Auto) {
        const LineFit f = least_squares(t, lv);
        out.model = FitModel::Exponential;
        out.rate = f.slope;
        out.residual = f.residual;
    }
    if (model == FitModel::PowerLaw || model == FitModel::Auto) {
        std::vector<double> logt;
        std::vector<double> ylog;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] > 0.0) {
                logt.push_back(std::log(t[i]));
                ylog.push_back(lv[i]);
            }
        }
        if (logt.size() >= 5) {
            const LineFit f = least_squares(logt, ylog);
            if (model == FitModel::PowerLaw || f.residual < out.residual) {
                out.model = FitModel::PowerLaw;
                out.rate = f.slope;
                out.residual = f.residual;
            }
        } else if (model == FitModel::PowerLaw) {
            throw std::runtime_error("rate_fit: fewer than 5 positive times for power law");
        }
    }
    return out;
}

namespace {

// Streaming Welford accumulator per sampled time.
struct Welford {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double v) {
        ++n;
        const double d = v - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (v - mean);
    }
    void merge(const Welford& o) {
        if (o.n == 0) return;
        if (n == 0) {
            *this = o;
            return;
        }
        const double d = o.mean - mean;
        const double nn = static_cast<double>(n + o.n);
        m2 += o.m2 + d * d * (static_cast<double>(n) * static_cast<double>(o.n)) / nn;
        mean += d * static_cast<double>(o.n) / nn;
        n += o.n;
    }
    double stddev() const {
        if (n < 2) return 0.0;
        return std::sqrt(std::max(0.0, m2 / static_cast<double>(n - 1)));
    }
};

constexpr std::uint32_t kEnsembleBlock = 64;

}  // namespace

DecaySeries ensemble_decay(const McMillanMap& m, PlanarPoint start, EnsembleQuantity quantity,
                           std::uint32_t members, std::uint64_t steps,
                           std::span<const std::uint64_t> sample_times, std::uint64_t seed,
                           std::uint32_t workers, std::uint64_t warmup) {
    if (members < 100) throw std::invalid_argument("ensemble_decay: members must be >= 100");
    if (sample_times.empty()) throw std::invalid_argument("ensemble_decay: no sample times");
    for (std::size_t i = 0; i < sample_times.size(); ++i) {
        if (sample_times[i] > steps || (i > 0 && sample_times[i] <= sample_times[i - 1]))
            throw std::invalid_argument("ensemble_decay: sample times must increase and stay <= steps");
    }
    if (workers == 0) workers = 1;

    // Common tangent state converged over the warmup stretch; it provides the
    // shared slope sequence for the eta ensemble and positions the orbit.
    SplitMix64 rng(subseed(seed, members));  // stream disjoint from member seeds
    TangentState common = seeded_state(rng);
    PlanarPoint p = start;
    FtleAccumulator warm;
    if (warmup > 0) common = evolve_scalar(m, p, common, warmup, warm);

    // Fixed drive sequences along the measured stretch.
    std::vector<double> fp(steps), fs(steps);
    std::vector<double> inv_psi3;  // common 1/psi^3 sequence for the eta ensemble
    if (quantity == EnsembleQuantity::Eta) inv_psi3.resize(steps);
    {
        PlanarPoint q = p;
        TangentState st = common;
        for (std::uint64_t i = 0; i < steps; ++i) {
            fp[i] = m.fprime(q.x);
            fs[i] = m.fsecond(q.x);
            if (quantity == EnsembleQuantity::Eta) {
                const double c = st.psi * st.psi * st.psi;
                inv_psi3[i] = 1.0 / c;
                st.psi = slope_step(st.psi, fp[i]);
            }
            q = m.step(q);
        }
    }

    const std::size_t ns = sample_times.size();
    const std::uint32_t blocks = (members + kEnsembleBlock - 1) / kEnsembleBlock;
    std::vector<Welford> acc(std::size_t(blocks) * ns);
    std::vector<std::uint64_t> singular(blocks, 0);

    auto run_block = [&](std::uint32_t blk) {
        const std::uint32_t lo = blk * kEnsembleBlock;
        const std::uint32_t hi = std::min(members, lo + kEnsembleBlock);
        Welford* a = acc.data() + std::size_t(blk) * ns;
        for (std::uint32_t midx = lo; midx < hi; ++midx) {
            SplitMix64 g(subseed(seed, midx));
            double psi, eta;
            if (quantity == EnsembleQuantity::Psi) {
                psi = seeded_state(g).psi;
                eta = 0.0;
            } else {
                psi = common.psi;
                eta = g.uniform(-1.0, 1.0);
            }
            std::size_t si = 0;
            for (std::uint64_t t = 0; t <= steps && si < ns; ++t) {
                if (t == sample_times[si]) {
                    a[si].add(quantity == EnsembleQuantity::Psi ? psi : eta);
                    ++si;
                }
                if (t == steps) break;
                if (quantity == EnsembleQuantity::Psi) {
                    bool sing = false;
                    psi = slope_step(psi, fp[t], &sing);
                    if (sing) ++singular[blk];
                } else {
                    eta = fs[t] + eta * inv_psi3[t];
                }
            }
        }
    };

    if (workers <= 1 || blocks <= 1) {
        for (std::uint32_t b = 0; b < blocks; ++b) run_block(b);
    } else {
        std::vector<std::thread> pool;
        const std::uint32_t nw = std::min(workers, blocks);
        for (std::uint32_t w = 0; w < nw; ++w) {
            pool.emplace_back([&, w] {
                for (std::uint32_t b = w; b < blocks; b += nw) run_block(b);
            });
        }
        for (auto& th : pool) th.join();
    }

    DecaySeries out;
    out.members = members;
    out.times.resize(ns);
    out.spread.resize(ns);
    for (std::size_t si = 0; si < ns; ++si) {
        Welford total;
        for (std::uint32_t b = 0; b < blocks; ++b) total.merge(acc[std::size_t(b) * ns + si]);
        out.times[si] = static_cast<double>(sample_times[si]);
        out.spread[si] = total.stddev();
    }
    for (std::uint32_t b = 0; b < blocks; ++b) out.singular_events += singular[b];
    return out;
}

DecayFit fit_decay_window(const DecaySeries& series, FitModel model) {
    if (series.spread.empty()) throw std::invalid_argument("fit_decay_window: empty series");
    const double initial = series.spread.front();
    const double floor = 1e3 * std::numeric_limits<double>::epsilon();
    std::size_t first = 0;
    while (first < series.spread.size() && series.spread[first] >= 0.5 * initial) ++first;
    std::size_t last = first;
    while (last < series.spread.size() && series.spread[last] > floor) ++last;
    if (last - first < 5) throw std::runtime_error("fit_decay_window: window too short");
    DecayFit fit = rate_fit(std::span(series.times).subspan(first, last - first),
                            std::span(series.spread).subspan(first, last - first), model);
    fit.first = first;
    fit.last = last;
    return fit;
}

}  // namespace clv
