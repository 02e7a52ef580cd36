#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "cmos/periodicity.hpp"
#include "cmos/synth.hpp"

using namespace cmos;

TEST_CASE("sine generator closed form", "[synth]") {
    const Dataset ds = gen_sine(16, 4, 1.0, 0.0, 1);
    const double expect[4] = {0.0, 1.0, 0.0, -1.0};
    for (std::size_t t = 0; t < 16; ++t)
        REQUIRE(ds.at(t, 0) == Catch::Approx(expect[t % 4]).margin(1e-12));
}

TEST_CASE("opposite-phase channels cancel", "[synth]") {
    // Two channels with base phase 0 get phases 0 and pi.
    const Dataset ds = gen_sine(64, 8, 1.0, 0.0, 2);
    for (std::size_t t = 0; t < ds.steps; ++t)
        REQUIRE(ds.at(t, 0) + ds.at(t, 1) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("sine autocorrelation peaks at the period", "[synth]") {
    const Dataset ds = gen_sine(2400, 24, 2.0, 0.7, 1);
    std::vector<double> x(ds.steps);
    for (std::size_t t = 0; t < ds.steps; ++t) x[t] = ds.at(t, 0);
    const std::vector<double> r = acf(x, 48);
    REQUIRE(r[24] > 0.99);
}

TEST_CASE("gaussian noise is seeded and unbiased", "[synth]") {
    const Dataset base = gen_sine(100, 10, 1.0, 0.0, 1);
    SECTION("sigma zero is the identity") {
        const Dataset out = add_gaussian_noise(base, 0.0, 0.0, 42);
        REQUIRE(out.values == base.values);
    }
    SECTION("same seed, same draw") {
        const Dataset a = add_gaussian_noise(base, 0.0, 1.0, 42);
        const Dataset b = add_gaussian_noise(base, 0.0, 1.0, 42);
        REQUIRE(a.values == b.values);
        const Dataset c = add_gaussian_noise(base, 0.0, 1.0, 43);
        REQUIRE(a.values != c.values);
    }
    SECTION("sample mean concentrates at mu") {
        Dataset wide = gen_sine(1000000, 10, 0.0, 0.0, 1);  // zero amplitude: pure noise
        const double mu = 0.25, sigma = 1.0;
        const Dataset noisy = add_gaussian_noise(wide, mu, sigma, 7);
        double mean = 0.0;
        for (double v : noisy.values) mean += v;
        mean /= static_cast<double>(noisy.values.size());
        REQUIRE(std::abs(mean - mu) < 4.0 * sigma / 1000.0);
    }
}

TEST_CASE("gpd sampler matches its analytic distribution", "[synth]") {
    const double scale = 1.0, shape = 0.2;
    const std::size_t n = 100000;
    Rng rng = make_rng(11, 11);
    std::vector<double> draws(n);
    for (double& v : draws) v = gpd_sample(uniform01(rng), scale, shape);
    std::sort(draws.begin(), draws.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double cdf = 1.0 - std::pow(1.0 + shape * draws[i] / scale, -1.0 / shape);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
        const double lo = static_cast<double>(i) / static_cast<double>(n);
        ks = std::max({ks, std::abs(cdf - hi), std::abs(cdf - lo)});
    }
    REQUIRE(ks < 0.01);
}

TEST_CASE("exponential tail at shape zero has mean equal to scale", "[synth]") {
    Rng rng = make_rng(12, 12);
    const std::size_t n = 1000000;
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += gpd_sample(uniform01(rng), 1.0, 0.0);
    mean /= static_cast<double>(n);
    REQUIRE(std::abs(mean - 1.0) < 4.0 / 1000.0);
}

TEST_CASE("burst noise arrival statistics", "[synth]") {
    const std::size_t T = 200000;
    Dataset base = gen_sine(T, 24, 1.0, 0.0, 1);
    BurstSpec spec;
    spec.intensity = 0.01;
    const Dataset noisy = add_burst_noise(base, spec, 5);

    std::size_t bursts = 0;
    for (std::size_t t = 0; t < T; ++t)
        if (noisy.at(t, 0) != base.at(t, 0)) ++bursts;

    const double lambda_T = spec.intensity * static_cast<double>(T);
    REQUIRE(std::abs(static_cast<double>(bursts) - lambda_T) < 3.0 * std::sqrt(lambda_T));

    // Burst magnitudes always clear the threshold.
    for (std::size_t t = 0; t < T; ++t) {
        const double d = noisy.at(t, 0) - base.at(t, 0);
        if (d != 0.0) REQUIRE(std::abs(d) >= spec.threshold);
    }
}

TEST_CASE("burst noise leaves quiet positions bit-identical", "[synth]") {
    Dataset base = gen_sine(5000, 24, 1.0, 0.3, 2);
    BurstSpec spec;
    spec.intensity = 0.02;
    const Dataset noisy = add_burst_noise(base, spec, 9);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < base.values.size(); ++i) {
        if (noisy.values[i] != base.values[i]) ++changed;
    }
    REQUIRE(changed > 0);
    // Identity at intensity zero.
    const Dataset still = add_burst_noise(base, BurstSpec{3.0, 1.0, 0.2, 0.0}, 9);
    REQUIRE(still.values == base.values);
}

TEST_CASE("generators are pure functions of spec and seed", "[synth]") {
    BurstSpec spec;
    const Dataset a = add_burst_noise(gen_sine(1000, 24, 1.0, 0.0, 2), spec, 31);
    const Dataset b = add_burst_noise(gen_sine(1000, 24, 1.0, 0.0, 2), spec, 31);
    REQUIRE(a.values == b.values);
}

TEST_CASE("generator input validation", "[synth]") {
    REQUIRE_THROWS_AS(gen_sine(10, 1, 1.0, 0.0, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(gen_sine(5, 4, 1.0, 0.0, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(add_gaussian_noise(gen_sine(16, 4), 0.0, -1.0, 1), std::invalid_argument);
    BurstSpec bad;
    bad.intensity = 2.0;
    REQUIRE_THROWS_AS(bad.validate(), std::invalid_argument);
}
