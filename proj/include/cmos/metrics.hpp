#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "cmos/config.hpp"
#include "cmos/model.hpp"
#include "cmos/windows.hpp"

namespace cmos {

inline double mse(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw std::invalid_argument("mse: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - truth[i];
        acc += e * e;
    }
    return acc / static_cast<double>(pred.size());
}

inline double mae(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size() || pred.empty())
        throw std::invalid_argument("mae: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += std::abs(pred[i] - truth[i]);
    return acc / static_cast<double>(pred.size());
}

/// Error sums that merge exactly across evaluation shards.
struct EvalAccum {
    std::size_t horizon_len = 0;
    std::size_t count = 0;  // number of (window, channel) pairs
    double sum_sq = 0.0;
    double sum_abs = 0.0;
    std::vector<double> step_sq;   // per horizon step, summed over windows/channels
    std::vector<double> step_abs;

    void merge(const EvalAccum& o) {
        if (horizon_len == 0) *this = o;
        else {
            if (o.horizon_len != horizon_len) throw std::invalid_argument("EvalAccum: horizon mismatch");
            count += o.count;
            sum_sq += o.sum_sq;
            sum_abs += o.sum_abs;
            for (std::size_t h = 0; h < horizon_len; ++h) {
                step_sq[h] += o.step_sq[h];
                step_abs[h] += o.step_abs[h];
            }
        }
    }
};

struct EvalMetrics {
    double mse = 0.0;
    double mae = 0.0;
    std::vector<double> per_step_mse;  // averaged over windows and channels, per horizon step
    std::vector<double> per_step_mae;
    std::size_t windows = 0;
};

inline EvalMetrics finalize(const EvalAccum& a, std::size_t channels) {
    EvalMetrics m;
    const double total = static_cast<double>(a.count) * static_cast<double>(a.horizon_len);
    m.mse = a.sum_sq / total;
    m.mae = a.sum_abs / total;
    m.per_step_mse.resize(a.horizon_len);
    m.per_step_mae.resize(a.horizon_len);
    for (std::size_t h = 0; h < a.horizon_len; ++h) {
        m.per_step_mse[h] = a.step_sq[h] / static_cast<double>(a.count);
        m.per_step_mae[h] = a.step_abs[h] / static_cast<double>(a.count);
    }
    m.windows = channels == 0 ? 0 : a.count / channels;
    return m;
}

/// Error sums of a model over every stride-`stride` window of a zone.
/// Accumulation runs in global window order, so the result is bit-identical
/// for any batch size.
inline EvalAccum evaluate_accum(const Dataset& ds, const SplitRange& zone, const Params& p,
                                const Config& cfg, std::size_t batch_size = 256,
                                int threads = 0, std::size_t stride = 1) {
    const std::vector<std::size_t> origins = window_origins(zone, cfg.lookback_len, cfg.horizon_len, stride);
    EvalAccum acc;
    acc.horizon_len = cfg.horizon_len;
    acc.step_sq.assign(cfg.horizon_len, 0.0);
    acc.step_abs.assign(cfg.horizon_len, 0.0);
    for (const auto span : batch_spans(origins, batch_size)) {
        const WindowBatch batch = make_batch(ds, span, cfg.lookback_len, cfg.horizon_len);
        const ForwardResult fr = forward(batch, p, cfg, threads);
        for (std::size_t b = 0; b < batch.batch; ++b)
            for (std::size_t n = 0; n < batch.channels; ++n) {
                const double* pred = fr.prediction.data() + (b * batch.channels + n) * cfg.horizon_len;
                const auto truth = batch.target_of(b, n);
                for (std::size_t h = 0; h < cfg.horizon_len; ++h) {
                    const double e = pred[h] - truth[h];
                    acc.sum_sq += e * e;
                    acc.sum_abs += std::abs(e);
                    acc.step_sq[h] += e * e;
                    acc.step_abs[h] += std::abs(e);
                }
                acc.count += 1;
            }
    }
    return acc;
}

inline EvalMetrics evaluate(const Dataset& ds, const SplitRange& zone, const Params& p,
                            const Config& cfg, std::size_t batch_size = 256, int threads = 0,
                            std::size_t stride = 1) {
    return finalize(evaluate_accum(ds, zone, p, cfg, batch_size, threads, stride), cfg.channels);
}

// ---------------------------------------------------------------------------
// Parameter accounting
// ---------------------------------------------------------------------------

/// Breakdown of the learnable parameter count. `total` follows the headline
/// three-part formula (correlations + aggregators + allocator); bias blocks
/// are tracked separately and included only in `total_with_bias`.
struct ParamCount {
    std::size_t correlation_part = 0;  // K * (L/S) * (H/S)
    std::size_t aggregators_part = 0;  // N * c
    std::size_t allocator_part = 0;    // ((2L - c)/c) * K
    std::size_t bias_part = 0;         // K * H
    std::size_t total = 0;
    std::size_t total_with_bias = 0;
};

inline ParamCount count_params(const Config& cfg) {
    cfg.validate();
    ParamCount c;
    c.correlation_part = cfg.num_experts * cfg.lookback_chunks() * cfg.horizon_chunks();
    c.aggregators_part = cfg.channels * cfg.kernel_size;
    c.allocator_part = cfg.summary_len() * cfg.num_experts;
    c.bias_part = cfg.num_experts * cfg.horizon_len;
    c.total = c.correlation_part + c.aggregators_part + c.allocator_part;
    c.total_with_bias = c.total + c.bias_part;
    return c;
}

// ---------------------------------------------------------------------------
// Noise-sensitivity checkers
// ---------------------------------------------------------------------------

/// Output variance of a linear model theta^T x under i.i.d. Gaussian input
/// noise of standard deviation sigma: sigma^2 * ||theta||_2^2.
inline double noise_sensitivity(std::span<const double> theta, double sigma) {
    if (sigma < 0) throw std::invalid_argument("noise_sensitivity: sigma must be nonnegative");
    double ss = 0.0;
    for (double t : theta) ss += t * t;
    return sigma * sigma * ss;
}

struct AveragingCheck {
    double lhs = 0.0;  // squared weighted average of the weights
    double rhs = 0.0;  // sum of squared weights
    bool holds = false;
};

/// Noise-sensitivity comparison for chunk-averaged weights: the squared
/// weighted average of point weights never exceeds their sum of squares for
/// nonnegative averaging weights (Cauchy-Schwarz).
inline AveragingCheck check_averaging_theorem(std::span<const double> theta,
                                              std::span<const double> alpha) {
    if (theta.size() != alpha.size() || theta.empty())
        throw std::invalid_argument("check_averaging_theorem: shape mismatch");
    double alpha_sum = 0.0;
    for (double a : alpha) {
        if (a < 0) throw std::invalid_argument("check_averaging_theorem: alpha must be nonnegative");
        alpha_sum += a;
    }
    if (alpha_sum == 0) throw std::invalid_argument("check_averaging_theorem: alpha sums to zero");
    double weighted = 0.0;
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        weighted += alpha[i] * theta[i];
        sum_sq += theta[i] * theta[i];
    }
    const double avg = weighted / alpha_sum;
    AveragingCheck r;
    r.lhs = avg * avg;
    r.rhs = sum_sq;
    r.holds = r.lhs <= r.rhs * (1.0 + 1e-12) + 1e-300;  // exact up to FP rounding
    return r;
}

}  // namespace cmos
