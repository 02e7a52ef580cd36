#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cmos/periodicity.hpp"
#include "cmos/rng.hpp"
#include "cmos/synth.hpp"

using namespace cmos;

TEST_CASE("acf is one at lag zero and peaks at the generator period", "[periodicity]") {
    std::vector<double> x(2400);
    for (std::size_t t = 0; t < x.size(); ++t)
        x[t] = std::sin(2.0 * M_PI * static_cast<double>(t) / 24.0);
    const std::vector<double> r = acf(x, 100);
    REQUIRE(r[0] == Catch::Approx(1.0));
    REQUIRE(r[24] > 0.99);
}

TEST_CASE("acf of white noise stays inside the sampling band", "[periodicity]") {
    Rng rng = make_rng(2024, 1);
    std::vector<double> x(10000);
    for (double& v : x) v = gaussian(rng);
    const std::vector<double> r = acf(x, 100);
    for (std::size_t tau = 1; tau <= 100; ++tau) REQUIRE(std::abs(r[tau]) < 0.05);
}

TEST_CASE("acf rejects constant series and bad lags", "[periodicity]") {
    REQUIRE_THROWS_AS(acf(std::vector<double>(50, 3.0), 10), std::invalid_argument);
    REQUIRE_THROWS_AS(acf(std::vector<double>{1, 2}, 5), std::invalid_argument);
}

TEST_CASE("period estimation averages channels", "[periodicity]") {
    // Two phase-shifted copies of the same 12-step cycle.
    const Dataset ds = gen_sine(1200, 12, 1.0, 0.4, 2);
    const PeriodEstimate est = estimate_period(ds, 900, 60);
    REQUIRE(est.period == 12);
    REQUIRE(est.acf_value > 0.9);
    REQUIRE_FALSE(est.candidates.empty());
}

TEST_CASE("period estimation is invariant to affine channel rescaling", "[periodicity]") {
    Dataset ds = gen_sine(1200, 24, 1.0, 0.0, 2);
    const PeriodEstimate before = estimate_period(ds, 900, 120);
    for (std::size_t t = 0; t < ds.steps; ++t) {
        ds.at(t, 0) = 37.0 * ds.at(t, 0) - 11.0;
        ds.at(t, 1) = 0.05 * ds.at(t, 1) + 400.0;
    }
    const PeriodEstimate after = estimate_period(ds, 900, 120);
    REQUIRE(after.period == before.period);
    REQUIRE(after.acf_value == Catch::Approx(before.acf_value).margin(1e-9));
}

TEST_CASE("period estimation reports failure on trend-only data", "[periodicity]") {
    Dataset ds;
    ds.steps = 500;
    ds.channels = 1;
    ds.channel_names = {"t"};
    ds.values.resize(500);
    for (std::size_t t = 0; t < 500; ++t) ds.values[t] = static_cast<double>(t);
    REQUIRE_THROWS_WITH(estimate_period(ds, 400, 50),
                        Catch::Matchers::ContainsSubstring("no local maximum"));
}

TEST_CASE("injection reproduces the pseudocode by hand", "[periodicity]") {
    // L=8, S=2, p=4, H=4: chunk grid is 2x4, p/L = 0.5.
    Matrix strict(2, 4, 0.0);
    inject(strict.view(), 4, 2, 8, 4, /*inclusive=*/false);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            const double expect = (i == 0 && j == 2) ? 0.5 : 0.0;
            REQUIRE(strict(i, j) == expect);
        }

    Matrix incl(2, 4, 0.0);
    inject(incl.view(), 4, 2, 8, 4, /*inclusive=*/true);
    REQUIRE(incl(0, 2) == 0.5);
    REQUIRE(incl(1, 3) == 0.5);
    std::size_t nonzeros = 0;
    for (double v : incl.a) nonzeros += v != 0.0;
    REQUIRE(nonzeros == 2);
}

TEST_CASE("injection is idempotent and writes only p/L", "[periodicity]") {
    for (const bool inclusive : {false, true}) {
        Matrix m(6, 12, 0.0);  // L=48, S=4, H=24, p=12
        inject(m.view(), 12, 4, 48, 24, inclusive);
        Matrix twice = m;
        inject(twice.view(), 12, 4, 48, 24, inclusive);
        REQUIRE(twice.a == m.a);
        for (double v : m.a) REQUIRE((v == 0.0 || v == 12.0 / 48.0));
    }
}

TEST_CASE("injected positions sit at period-aligned chunk lags", "[periodicity]") {
    // L = 2p, H = p across several valid chunk sizes.
    for (const std::size_t S : {1u, 2u, 4u, 8u}) {
        const std::size_t p = 16, L = 32, H = 16;
        const std::size_t LS = L / S, HS = H / S, pS = p / S;
        Matrix m(HS, LS, 0.0);
        inject(m.view(), p, S, L, H, false);
        for (std::size_t i = 1; i <= HS; ++i)
            for (std::size_t k = 1; k <= LS; ++k)
                if (m(i - 1, k - 1) != 0.0) {
                    REQUIRE(m(i - 1, k - 1) == static_cast<double>(p) / static_cast<double>(L));
                    REQUIRE((LS + i - k) % pS == 0);
                }
    }
}

TEST_CASE("injection validates inputs", "[periodicity]") {
    Matrix m(2, 4, 0.0);
    REQUIRE_THROWS_AS(inject(m.view(), 3, 2, 8, 4), std::invalid_argument);   // S does not divide p
    REQUIRE_THROWS_AS(inject(m.view(), 16, 2, 8, 4), std::invalid_argument);  // p > L
    Matrix wrong(3, 4, 0.0);
    REQUIRE_THROWS_AS(inject(wrong.view(), 4, 2, 8, 4), std::invalid_argument);
}

TEST_CASE("init_params applies injection to the first matrix only", "[periodicity]") {
    Config cfg;
    cfg.lookback_len = 48;
    cfg.horizon_len = 24;
    cfg.chunk_size = 4;
    cfg.num_experts = 3;
    cfg.kernel_size = 8;
    cfg.channels = 2;
    cfg.pi_enabled = true;
    cfg.pi_period = 12;

    const Params p = init_params(cfg, 99);
    for (double v : p.theta(0).flat()) REQUIRE((v == 0.0 || v == 0.25));
    bool theta1_random = false;
    for (double v : p.theta(1).flat()) theta1_random |= (v != 0.0 && v != 0.25);
    REQUIRE(theta1_random);
}
