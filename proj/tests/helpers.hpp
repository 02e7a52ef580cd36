#pragma once

#include <cstdint>
#include <vector>

#include "cmos/config.hpp"
#include "cmos/model.hpp"
#include "cmos/params.hpp"
#include "cmos/rng.hpp"
#include "cmos/windows.hpp"

namespace testutil {

struct TinyInstance {
    cmos::Config cfg;
    cmos::Params params;
    cmos::WindowBatch batch;
};

/// Random small-but-varied model instance with standardized-scale data.
/// Biases are randomized away from their zero init so gradient checks
/// exercise them.
inline TinyInstance random_tiny(std::uint64_t seed) {
    cmos::Rng rng = cmos::make_rng(seed, 0x74696e79u);
    auto pick = [&](std::initializer_list<std::size_t> opts) {
        std::vector<std::size_t> v(opts);
        return v[cmos::uniform_index(rng, v.size())];
    };

    TinyInstance t;
    t.cfg.chunk_size = pick({1, 2, 4});
    t.cfg.lookback_len = t.cfg.chunk_size * pick({2, 3, 4});
    t.cfg.horizon_len = t.cfg.chunk_size * pick({1, 2});
    t.cfg.num_experts = pick({1, 2, 3});
    t.cfg.channels = pick({1, 2});
    t.cfg.kernel_size = 2;  // even, divides 2L, fits any lookback here
    t.cfg.eps = 1e-5;
    t.cfg.validate();

    t.params = cmos::init_params(t.cfg, rng());
    for (std::size_t k = 0; k < t.cfg.num_experts; ++k)
        for (double& b : t.params.bias(k).flat()) b = cmos::uniform(rng, -0.5, 0.5);

    const std::size_t B = pick({1, 2, 3});
    t.batch.batch = B;
    t.batch.channels = t.cfg.channels;
    t.batch.lookback_len = t.cfg.lookback_len;
    t.batch.horizon_len = t.cfg.horizon_len;
    t.batch.lookback.resize(B * t.cfg.channels * t.cfg.lookback_len);
    t.batch.target.resize(B * t.cfg.channels * t.cfg.horizon_len);
    t.batch.origin_indices.assign(B, 0);
    for (double& v : t.batch.lookback) v = cmos::gaussian(rng);
    for (double& v : t.batch.target) v = cmos::gaussian(rng);
    return t;
}

/// Max relative error between the analytic gradient and central finite
/// differences of the loss, using the usual max(1, |a|, |n|) denominator.
inline double gradient_max_rel_err(TinyInstance& t, double h = 1e-4) {
    const cmos::LossGrad lg = cmos::loss_and_grad(t.batch, t.params, t.cfg, /*threads=*/1);
    double worst = 0.0;
    for (std::size_t i = 0; i < t.params.flat.size(); ++i) {
        const double saved = t.params.flat[i];
        t.params.flat[i] = saved + h;
        const double lp = cmos::loss_and_grad(t.batch, t.params, t.cfg, 1).loss;
        t.params.flat[i] = saved - h;
        const double lm = cmos::loss_and_grad(t.batch, t.params, t.cfg, 1).loss;
        t.params.flat[i] = saved;
        const double numeric = (lp - lm) / (2.0 * h);
        const double analytic = lg.grad.flat[i];
        const double denom = std::max({1.0, std::abs(numeric), std::abs(analytic)});
        worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
    return worst;
}

}  // namespace testutil
