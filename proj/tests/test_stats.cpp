#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "clvmap/rng.hpp"
#include "clvmap/stats.hpp"
#include "clvmap/tangent.hpp"

using namespace clv;

TEST_CASE("histogram routes every sample to exactly one counter") {
    Histogram1D h(0.0, 10.0, 10);
    h.add(3.5);  // center of bin 3
    CHECK(h.bin_count(3) == 1);
    h.add(INFINITY);
    CHECK(h.non_finite() == 1);
    h.add(-1.0);
    h.add(42.0);
    h.add(std::nan(""));
    CHECK(h.underflow() == 1);
    CHECK(h.overflow() == 1);
    CHECK(h.non_finite() == 2);
    std::uint64_t binned = 0;
    for (std::uint32_t i = 0; i < h.bins(); ++i) binned += h.bin_count(i);
    CHECK(binned + h.underflow() + h.overflow() + h.non_finite() == h.total());
    CHECK(h.total() == 5);
    // right edge lands in the top bin
    h.add(10.0);
    CHECK(h.bin_count(9) == 1);
}

TEST_CASE("histogram merge of split halves equals the single stream") {
    SplitMix64 rng(201);
    Histogram1D whole(-3.0, 3.0, 64), a(-3.0, 3.0, 64), b(-3.0, 3.0, 64);
    for (int i = 0; i < 10000; ++i) {
        const double v = std::tan(rng.uniform(-1.5, 1.5));
        whole.add(v);
        (i % 2 == 0 ? a : b).add(v);
    }
    a.merge(b);
    for (std::uint32_t i = 0; i < whole.bins(); ++i) CHECK(a.bin_count(i) == whole.bin_count(i));
    CHECK(a.total() == whole.total());
    CHECK_THROWS_AS(a.merge(Histogram1D(0.0, 1.0, 64)), std::invalid_argument);
}

TEST_CASE("histogram merge is associative and commutative") {
    SplitMix64 rng(202);
    auto make = [&](int n) {
        Histogram1D h(-2.0, 2.0, 16);
        for (int i = 0; i < n; ++i) h.add(rng.uniform(-2.5, 2.5));
        return h;
    };
    const Histogram1D h1 = make(100), h2 = make(200), h3 = make(300);
    Histogram1D left = h1;
    left.merge(h2);
    left.merge(h3);
    Histogram1D right23 = h2;
    right23.merge(h3);
    Histogram1D right = h1;
    right.merge(right23);
    Histogram1D swapped = h3;
    swapped.merge(h1);
    swapped.merge(h2);
    for (std::uint32_t i = 0; i < 16; ++i) {
        CHECK(left.bin_count(i) == right.bin_count(i));
        CHECK(left.bin_count(i) == swapped.bin_count(i));
    }
}

TEST_CASE("2D histogram buckets") {
    Histogram2D h(0.0, 1.0, 4, 0.0, 1.0, 4);
    h.add(0.1, 0.9);
    CHECK(h.bin_count(0, 3) == 1);
    h.add(-1.0, 0.5);
    CHECK(h.x_underflow() == 1);
    h.add(0.5, 2.0);
    CHECK(h.y_overflow() == 1);
    h.add(std::nan(""), 0.5);
    CHECK(h.non_finite() == 1);
    CHECK(h.total() == 4);
}

TEST_CASE("conditional split routes by the sign of lambda1") {
    ConditionalSplit1D c(-10.0, 10.0, 20);
    c.add(1.0, 2.0);
    c.add(2.5, -3.0);
    c.add(-0.5, 4.0);
    c.add(0.0, 5.0);
    CHECK(c.positive().total() == 2);
    CHECK(c.negative().total() == 1);
    CHECK(c.zero_bucket() == 1);
    CHECK(c.total() == 4);

    // all-positive stream leaves the negative conditional empty
    ConditionalSplit1D pos(-1.0, 1.0, 4);
    for (int i = 0; i < 50; ++i) pos.add(0.3, 0.1);
    CHECK(pos.negative().total() == 0);
}

TEST_CASE("conditionals plus zero bucket reassemble the unconditional histogram") {
    SplitMix64 rng(203);
    ConditionalSplit1D c(-5.0, 5.0, 32);
    Histogram1D unconditional(-5.0, 5.0, 32);
    for (int i = 0; i < 5000; ++i) {
        const double lam = rng.uniform(-1.0, 1.0);
        const double v = rng.uniform(-6.0, 6.0);
        c.add(lam, v);
        unconditional.add(v);
    }
    Histogram1D sum = c.positive();
    sum.merge(c.negative());
    CHECK(sum.total() + c.zero_bucket() == unconditional.total());
}

TEST_CASE("mean field accumulates exact per-cell means") {
    MeanField f(0.0, 1.0, 0.0, 1.0, 2, 2);
    f.add(0.25, 0.25, 2.0);
    CHECK(f.mean(0, 0) == 2.0);
    CHECK(f.count(0, 0) == 1);
    f.add(0.25, 0.25, 4.0);
    CHECK(f.mean(0, 0) == 3.0);  // (2+4)/2 exactly
    CHECK(std::isnan(f.mean(1, 1)));
    f.add(0.75, 0.75, INFINITY);
    CHECK(f.non_finite() == 1);
    CHECK(f.count(1, 1) == 0);
}

TEST_CASE("uniform value gives that value in every visited cell") {
    SplitMix64 rng(204);
    MeanField f = MeanField::torus(8, 8);
    for (int i = 0; i < 2000; ++i) f.add(rng.uniform(0.0, kTwoPi), rng.uniform(0.0, kTwoPi), 7.5);
    for (std::uint32_t i = 0; i < 8; ++i)
        for (std::uint32_t j = 0; j < 8; ++j)
            if (f.count(i, j) > 0) CHECK(f.mean(i, j) == 7.5);
}

TEST_CASE("rate_fit on synthetic data") {
    std::vector<double> t, v;
    SUBCASE("exact exponential") {
        for (int i = 0; i <= 40; ++i) {
            t.push_back(i);
            v.push_back(std::exp(-2.344 * i));
        }
        const DecayFit f = rate_fit(t, v, FitModel::Exponential);
        CHECK(f.rate == doctest::Approx(-2.344).epsilon(1e-9));
        CHECK(f.residual < 1e-9);
    }
    SUBCASE("exact power law") {
        for (int i = 1; i <= 60; ++i) {
            t.push_back(i);
            v.push_back(1.0 / (double(i) * i));
        }
        const DecayFit f = rate_fit(t, v, FitModel::PowerLaw);
        CHECK(f.rate == doctest::Approx(-2.0).epsilon(1e-9));
    }
    SUBCASE("auto picks the better model") {
        for (int i = 1; i <= 60; ++i) {
            t.push_back(i);
            v.push_back(std::pow(double(i), -1.5));
        }
        const DecayFit f = rate_fit(t, v, FitModel::Auto);
        CHECK(f.model == FitModel::PowerLaw);
        CHECK(f.rate == doctest::Approx(-1.5).epsilon(1e-6));
    }
    SUBCASE("oscillating exponential stays within 10 percent") {
        for (int i = 0; i <= 50; ++i) {
            t.push_back(i);
            v.push_back(std::exp(-2.0 * i) * (1.0 + 0.3 * std::sin(5.0 * i)));
        }
        const DecayFit f = rate_fit(t, v, FitModel::Exponential);
        CHECK(f.rate == doctest::Approx(-2.0).epsilon(0.1));
    }
    SUBCASE("non-positive values are trimmed before fitting") {
        const double r = std::log(0.5);
        for (int i = 0; i <= 8; ++i) {
            t.push_back(i);
            v.push_back(i == 3 ? -1.0 : std::exp(r * i));  // one bad point
        }
        const DecayFit f = rate_fit(t, v, FitModel::Exponential);
        CHECK(f.rate == doctest::Approx(r).epsilon(1e-9));
    }
}

TEST_CASE("rate_fit rejects windows below five points") {
    const std::vector<double> t{0, 1, 2, 3, 4, 5};
    const std::vector<double> v{1.0, 0.5, -1.0, 0.25, 0.0, 0.125};
    CHECK_THROWS_AS(rate_fit(t, v, FitModel::Exponential), std::runtime_error);
}

TEST_CASE("ensemble spread at step zero equals the seed spread") {
    CtMap ct(kTwoPi);
    const std::uint32_t members = 400;
    std::vector<std::uint64_t> times{0, 1, 2, 3, 4, 5};
    const DecaySeries s =
        ensemble_decay(ct, {1e-3, 2e-3}, EnsembleQuantity::Psi, members, 5, times, 33, 1);

    // recompute the seeds and their sample deviation independently
    std::vector<double> seeds;
    for (std::uint32_t m = 0; m < members; ++m) {
        SplitMix64 g(subseed(33, m));
        seeds.push_back(seeded_state(g).psi);
    }
    const double mean = std::accumulate(seeds.begin(), seeds.end(), 0.0) / members;
    double m2 = 0.0;
    for (double v : seeds) m2 += (v - mean) * (v - mean);
    const double sd = std::sqrt(m2 / (members - 1));
    CHECK(s.spread[0] == doctest::Approx(sd).epsilon(1e-12));
}

TEST_CASE("ensemble results are independent of the worker count") {
    CtMap ct(kTwoPi);
    std::vector<std::uint64_t> times;
    for (std::uint64_t i = 0; i <= 30; ++i) times.push_back(i);
    const DecaySeries one =
        ensemble_decay(ct, {1e-3, 2e-3}, EnsembleQuantity::Psi, 500, 30, times, 7, 1);
    const DecaySeries four =
        ensemble_decay(ct, {1e-3, 2e-3}, EnsembleQuantity::Psi, 500, 30, times, 7, 4);
    REQUIRE(one.spread.size() == four.spread.size());
    for (std::size_t i = 0; i < one.spread.size(); ++i) CHECK(one.spread[i] == four.spread[i]);
}

TEST_CASE("ensemble decay rates on a strongly chaotic orbit") {
    CtMap ct(kTwoPi);
    std::vector<std::uint64_t> times;
    for (std::uint64_t i = 0; i <= 60; ++i) times.push_back(i);

    // orbit FTLE reference over a long stretch
    SplitMix64 rng(5);
    PlanarPoint p{1e-3, 2e-3};
    TangentState st = seeded_state(rng);
    FtleAccumulator acc;
    evolve_scalar(ct, p, st, 200000, acc);
    const double lambda = acc.value();

    const DecaySeries psi =
        ensemble_decay(ct, {1e-3, 2e-3}, EnsembleQuantity::Psi, 2000, 60, times, 12, 1);
    const DecayFit fpsi = fit_decay_window(psi, FitModel::Exponential);
    CHECK(fpsi.rate == doctest::Approx(-2.0 * lambda).epsilon(0.25));

    const DecaySeries eta =
        ensemble_decay(ct, {1e-3, 2e-3}, EnsembleQuantity::Eta, 2000, 60, times, 12, 1);
    const DecayFit feta = fit_decay_window(eta, FitModel::Exponential);
    CHECK(feta.rate == doctest::Approx(-3.0 * lambda).epsilon(0.25));
}
