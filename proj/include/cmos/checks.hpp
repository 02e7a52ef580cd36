#pragma once

#include <cstdint>
#include <vector>

#include "cmos/metrics.hpp"
#include "cmos/model.hpp"
#include "cmos/params.hpp"
#include "cmos/rng.hpp"

namespace cmos {

/// A self-contained random model instance small enough for finite-difference
/// sweeps over every parameter.
struct CheckInstance {
    Config cfg;
    Params params;
    WindowBatch batch;
};

inline CheckInstance random_check_instance(std::uint64_t seed) {
    Rng rng = make_rng(seed, 0x74696e79u);
    auto pick = [&](std::initializer_list<std::size_t> opts) {
        std::vector<std::size_t> v(opts);
        return v[uniform_index(rng, v.size())];
    };

    CheckInstance t;
    t.cfg.chunk_size = pick({1, 2, 4});
    t.cfg.lookback_len = t.cfg.chunk_size * pick({2, 3, 4});
    t.cfg.horizon_len = t.cfg.chunk_size * pick({1, 2});
    t.cfg.num_experts = pick({1, 2, 3});
    t.cfg.channels = pick({1, 2});
    t.cfg.kernel_size = 2;
    t.cfg.eps = 1e-5;
    t.cfg.validate();

    t.params = init_params(t.cfg, rng());
    for (std::size_t k = 0; k < t.cfg.num_experts; ++k)
        for (double& b : t.params.bias(k).flat()) b = uniform(rng, -0.5, 0.5);

    const std::size_t B = pick({1, 2, 3});
    t.batch.batch = B;
    t.batch.channels = t.cfg.channels;
    t.batch.lookback_len = t.cfg.lookback_len;
    t.batch.horizon_len = t.cfg.horizon_len;
    t.batch.lookback.resize(B * t.cfg.channels * t.cfg.lookback_len);
    t.batch.target.resize(B * t.cfg.channels * t.cfg.horizon_len);
    t.batch.origin_indices.assign(B, 0);
    for (double& v : t.batch.lookback) v = gaussian(rng);
    for (double& v : t.batch.target) v = gaussian(rng);
    return t;
}

/// Max relative error between the analytic gradient and central finite
/// differences of the loss over every parameter of one instance.
inline double gradient_check_one(CheckInstance& t, double h = 1e-4) {
    const LossGrad lg = loss_and_grad(t.batch, t.params, t.cfg, /*threads=*/1);
    double worst = 0.0;
    for (std::size_t i = 0; i < t.params.flat.size(); ++i) {
        const double saved = t.params.flat[i];
        t.params.flat[i] = saved + h;
        const double lp = loss_and_grad(t.batch, t.params, t.cfg, 1).loss;
        t.params.flat[i] = saved - h;
        const double lm = loss_and_grad(t.batch, t.params, t.cfg, 1).loss;
        t.params.flat[i] = saved;
        const double numeric = (lp - lm) / (2.0 * h);
        const double analytic = lg.grad.flat[i];
        const double denom = std::max({1.0, std::abs(numeric), std::abs(analytic)});
        worst = std::max(worst, std::abs(numeric - analytic) / denom);
    }
    return worst;
}

struct GradientCheckReport {
    std::size_t instances = 0;
    double max_rel_err = 0.0;
    bool passed = false;
};

inline GradientCheckReport run_gradient_check(std::size_t instances, double tolerance = 1e-4,
                                              std::uint64_t seed0 = 5000) {
    GradientCheckReport r;
    r.instances = instances;
    for (std::size_t i = 0; i < instances; ++i) {
        CheckInstance t = random_check_instance(seed0 + i);
        r.max_rel_err = std::max(r.max_rel_err, gradient_check_one(t));
    }
    r.passed = r.max_rel_err < tolerance;
    return r;
}

struct TheoremFuzzReport {
    std::size_t trials = 0;
    std::size_t equality_cases = 0;
    std::size_t violations = 0;        // inequality failures
    std::size_t stray_equalities = 0;  // equality with more than one nonzero weight
    bool passed = false;
};

/// Fuzz the averaging inequality. A quarter of the draws use a one-hot
/// averaging vector, half of those with the weights parallel to it, which is
/// the exact-equality regime; equality anywhere else is an error.
inline TheoremFuzzReport run_theorem_fuzz(std::size_t trials, std::uint64_t seed = 20250101) {
    TheoremFuzzReport r;
    r.trials = trials;
    Rng rng = make_rng(seed, 0x7468656fu);
    for (std::size_t trial = 0; trial < trials; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 16);
        std::vector<double> theta(n), alpha(n);
        for (double& v : theta) v = 10.0 * gaussian(rng);
        const bool sparse = uniform01(rng) < 0.25;
        if (sparse) {
            std::fill(alpha.begin(), alpha.end(), 0.0);
            const std::size_t idx = uniform_index(rng, n);
            alpha[idx] = uniform(rng, 0.1, 5.0);
            if (uniform01(rng) < 0.5) {
                std::fill(theta.begin(), theta.end(), 0.0);
                theta[idx] = 10.0 * gaussian(rng);
            }
        } else {
            double sum = 0.0;
            for (double& v : alpha) {
                v = uniform01(rng) < 0.2 ? 0.0 : uniform(rng, 0.0, 5.0);
                sum += v;
            }
            if (sum == 0.0) alpha[0] = 1.0;
        }
        const AveragingCheck c = check_averaging_theorem(theta, alpha);
        if (!c.holds) {
            ++r.violations;
            continue;
        }
        // Equality up to rounding of the weighted average itself.
        const bool equal = std::abs(c.lhs - c.rhs) <= 1e-12 * std::max(std::abs(c.rhs), 1.0);
        if (equal) {
            ++r.equality_cases;
            std::size_t nonzero_alpha = 0;
            for (double v : alpha) nonzero_alpha += v != 0.0;
            if (nonzero_alpha > 1) ++r.stray_equalities;
        }
    }
    r.passed = r.violations == 0 && r.stray_equalities == 0 && r.equality_cases > 0;
    return r;
}

}  // namespace cmos
