#include <catch2/catch_amalgamated.hpp>

#include "cmos/model.hpp"
#include "helpers.hpp"

using namespace cmos;

TEST_CASE("loss and gradient vanish when prediction equals target", "[grad]") {
    Config cfg;
    cfg.lookback_len = 8;
    cfg.horizon_len = 4;
    cfg.chunk_size = 2;
    cfg.num_experts = 2;
    cfg.kernel_size = 2;
    cfg.channels = 1;

    // Zero correlation weights predict the window mean; a constant window and
    // a matching constant target make that prediction exact.
    Params p = Params::shaped_like(cfg);
    WindowBatch b;
    b.batch = 1;
    b.channels = 1;
    b.lookback_len = 8;
    b.horizon_len = 4;
    b.lookback.assign(8, 5.0);
    b.target.assign(4, 5.0);
    b.origin_indices = {7};

    const LossGrad lg = loss_and_grad(b, p, cfg, 1);
    REQUIRE(lg.loss == Catch::Approx(0.0).margin(1e-24));
    for (double g : lg.grad.flat) REQUIRE(g == Catch::Approx(0.0).margin(1e-15));
}

TEST_CASE("analytic gradients match central finite differences", "[grad]") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        testutil::TinyInstance t = testutil::random_tiny(seed + 5000);
        worst = std::max(worst, testutil::gradient_max_rel_err(t));
    }
    INFO("max relative error " << worst);
    REQUIRE(worst < 1e-4);
}

TEST_CASE("duplicated windows leave the mean-reduced gradient unchanged", "[grad]") {
    testutil::TinyInstance t = testutil::random_tiny(77);
    // Rebuild the batch as a single window, then duplicate it.
    WindowBatch one;
    one.batch = 1;
    one.channels = t.cfg.channels;
    one.lookback_len = t.cfg.lookback_len;
    one.horizon_len = t.cfg.horizon_len;
    const std::size_t lb = one.channels * one.lookback_len;
    const std::size_t tg = one.channels * one.horizon_len;
    one.lookback.assign(t.batch.lookback.begin(), t.batch.lookback.begin() + lb);
    one.target.assign(t.batch.target.begin(), t.batch.target.begin() + tg);
    one.origin_indices = {0};

    WindowBatch two = one;
    two.batch = 2;
    two.lookback.insert(two.lookback.end(), one.lookback.begin(), one.lookback.end());
    two.target.insert(two.target.end(), one.target.begin(), one.target.end());
    two.origin_indices = {0, 0};

    const LossGrad g1 = loss_and_grad(one, t.params, t.cfg, 1);
    const LossGrad g2 = loss_and_grad(two, t.params, t.cfg, 1);
    REQUIRE(g2.loss == Catch::Approx(g1.loss).margin(1e-14));
    for (std::size_t i = 0; i < g1.grad.flat.size(); ++i) {
        const double tol = 1e-12 * std::max(1.0, std::abs(g1.grad.flat[i]));
        REQUIRE(std::abs(g2.grad.flat[i] - g1.grad.flat[i]) <= tol);
    }
}

TEST_CASE("multithreaded gradients agree with single-threaded", "[grad]") {
    testutil::TinyInstance t = testutil::random_tiny(88);
    const LossGrad g1 = loss_and_grad(t.batch, t.params, t.cfg, 1);
    const LossGrad g4 = loss_and_grad(t.batch, t.params, t.cfg, 4);
    REQUIRE(g4.loss == Catch::Approx(g1.loss).margin(1e-10));
    for (std::size_t i = 0; i < g1.grad.flat.size(); ++i)
        REQUIRE(g4.grad.flat[i] == Catch::Approx(g1.grad.flat[i]).margin(1e-10));
}
