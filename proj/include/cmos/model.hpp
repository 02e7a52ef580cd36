#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "cmos/config.hpp"
#include "cmos/params.hpp"
#include "cmos/parallel.hpp"
#include "cmos/windows.hpp"

namespace cmos {

/// Per-window, per-channel normalization statistics. `sigma` holds the
/// population variance; both directions of the transform divide/multiply by
/// sqrt(sigma + eps) so the round trip is exact.
struct NormStats {
    std::size_t batch = 0;
    std::size_t channels = 0;
    double eps = 1e-5;
    std::vector<double> mu;
    std::vector<double> sigma;

    double scale(std::size_t b, std::size_t n) const {
        return std::sqrt(sigma[b * channels + n] + eps);
    }
};

/// Raw gating scores and their softmax per window and channel, kept around
/// for interpretability exports.
struct MixWeights {
    std::size_t batch = 0;
    std::size_t channels = 0;
    std::size_t num_experts = 0;
    std::vector<double> gamma;
    std::vector<double> w;

    std::span<const double> weights_of(std::size_t b, std::size_t n) const {
        return {w.data() + (b * channels + n) * num_experts, num_experts};
    }
};

namespace detail {

inline void normalize_one(std::span<const double> x, double eps, std::span<double> out,
                          double& mu, double& var) {
    const auto len = static_cast<double>(x.size());
    double sum = 0.0;
    for (double v : x) sum += v;
    mu = sum / len;
    double ss = 0.0;
    for (double v : x) {
        const double d = v - mu;
        ss += d * d;
    }
    var = ss / len;
    const double s = std::sqrt(var + eps);
    for (std::size_t t = 0; t < x.size(); ++t) out[t] = (x[t] - mu) / s;
}

}  // namespace detail

/// Instance normalization over a [batch][channel][time] tensor.
inline std::pair<std::vector<double>, NormStats> normalize(std::span<const double> window,
                                                           std::size_t batch, std::size_t channels,
                                                           std::size_t len, double eps) {
    if (window.size() != batch * channels * len)
        throw std::invalid_argument("normalize: tensor size does not match dimensions");
    std::vector<double> out(window.size());
    NormStats st;
    st.batch = batch;
    st.channels = channels;
    st.eps = eps;
    st.mu.resize(batch * channels);
    st.sigma.resize(batch * channels);
    for (std::size_t b = 0; b < batch; ++b)
        for (std::size_t n = 0; n < channels; ++n) {
            const std::size_t i = b * channels + n;
            detail::normalize_one(window.subspan(i * len, len), eps, {out.data() + i * len, len},
                                  st.mu[i], st.sigma[i]);
        }
    return {std::move(out), st};
}

/// Inverse of `normalize` for predictions shaped [batch][channel][horizon].
inline std::vector<double> denormalize(std::span<const double> pred, const NormStats& stats) {
    const std::size_t cells = stats.batch * stats.channels;
    if (cells == 0 || pred.size() % cells != 0)
        throw std::invalid_argument("denormalize: prediction shape does not match stats");
    const std::size_t len = pred.size() / cells;
    std::vector<double> out(pred.size());
    for (std::size_t i = 0; i < cells; ++i) {
        const double s = std::sqrt(stats.sigma[i] + stats.eps);
        const double mu = stats.mu[i];
        for (std::size_t t = 0; t < len; ++t) out[i * len + t] = pred[i * len + t] * s + mu;
    }
    return out;
}

/// Strided valid cross-correlation: kernel size c, stride c/2, no bias.
/// Output length is (2L - c)/c.
inline std::vector<double> aggregate(std::span<const double> x, std::span<const double> kernel) {
    const std::size_t L = x.size();
    const std::size_t c = kernel.size();
    if (c == 0 || c % 2 != 0) throw std::invalid_argument("aggregate: kernel size must be even");
    if (c > L || (L - c) % (c / 2) != 0)
        throw std::invalid_argument("aggregate: kernel/stride does not tile the input");
    const std::size_t M = (2 * L - c) / c;
    std::vector<double> z(M, 0.0);
    for (std::size_t m = 0; m < M; ++m) {
        const double* base = x.data() + m * (c / 2);
        double acc = 0.0;
        for (std::size_t u = 0; u < c; ++u) acc += kernel[u] * base[u];
        z[m] = acc;
    }
    return z;
}

/// Shared linear map from the aggregated summary to K gating scores.
inline std::vector<double> allocate(std::span<const double> z, ConstMat allocator) {
    if (z.size() != allocator.rows)
        throw std::invalid_argument("allocate: summary length does not match allocator");
    std::vector<double> gamma(allocator.cols, 0.0);
    for (std::size_t m = 0; m < allocator.rows; ++m) {
        const double zm = z[m];
        for (std::size_t k = 0; k < allocator.cols; ++k) gamma[k] += zm * allocator(m, k);
    }
    return gamma;
}

/// Numerically stable softmax.
inline std::vector<double> mixing_weights(std::span<const double> gamma) {
    std::vector<double> w(gamma.size());
    double mx = gamma[0];
    for (double g : gamma) mx = std::max(mx, g);
    double sum = 0.0;
    for (std::size_t k = 0; k < gamma.size(); ++k) {
        w[k] = std::exp(gamma[k] - mx);
        sum += w[k];
    }
    for (double& v : w) v /= sum;
    return w;
}

namespace detail {

/// Reusable per-thread buffers for the window kernel.
struct Scratch {
    std::vector<double> xnorm;    // L
    std::vector<double> z;        // M
    std::vector<double> gamma;    // K
    std::vector<double> w;        // K
    std::vector<double> expert;   // K x H, per-expert outputs in normalized units
    std::vector<double> mixed;    // H
    std::vector<double> gnorm;    // H, dLoss/d(mixed)
    std::vector<double> gc;       // (H/S) x (L/S), reusable inner products
    std::vector<double> dgamma;   // K
    std::vector<double> dz;       // M

    explicit Scratch(const Config& cfg)
        : xnorm(cfg.lookback_len),
          z(cfg.summary_len()),
          gamma(cfg.num_experts),
          w(cfg.num_experts),
          expert(cfg.num_experts * cfg.horizon_len),
          mixed(cfg.horizon_len),
          gnorm(cfg.horizon_len),
          gc(cfg.horizon_chunks() * cfg.lookback_chunks()),
          dgamma(cfg.num_experts),
          dz(cfg.summary_len()) {}
};

struct WindowMoments {
    double mu = 0.0;
    double var = 0.0;
    double scale = 1.0;  // sqrt(var + eps)
};

/// Core affine map: given the normalized lookback and fixed mixing weights,
/// fill per-expert outputs and their weighted mixture (normalized units).
inline void mixture_output(std::span<const double> xnorm, std::span<const double> w,
                           const Params& p, const Config& cfg, std::span<double> expert_buf,
                           std::span<double> mixed) {
    const std::size_t S = cfg.chunk_size;
    const std::size_t HS = cfg.horizon_chunks();
    const std::size_t LS = cfg.lookback_chunks();
    const std::size_t K = cfg.num_experts;
    std::fill(mixed.begin(), mixed.end(), 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        const ConstMat theta = p.theta(k);
        const ConstMat bias = p.bias(k);
        double* ek = expert_buf.data() + k * cfg.horizon_len;
        for (std::size_t i = 0; i < HS; ++i) {
            double* row = ek + i * S;
            for (std::size_t u = 0; u < S; ++u) row[u] = bias(i, u);
            for (std::size_t j = 0; j < LS; ++j) {
                const double th = theta(i, j);
                if (th == 0.0) continue;
                const double* cj = xnorm.data() + j * S;
                for (std::size_t u = 0; u < S; ++u) row[u] += th * cj[u];
            }
        }
        const double wk = w[k];
        for (std::size_t h = 0; h < cfg.horizon_len; ++h) mixed[h] += wk * ek[h];
    }
}

/// Forward pass for one (window, channel) pair. Fills the scratch with every
/// intermediate the backward pass needs and returns the window moments.
inline WindowMoments forward_one(std::span<const double> x, const Params& p,
                                 const Config& cfg, std::size_t channel, Scratch& s) {
    const std::size_t K = cfg.num_experts;
    const std::size_t M = cfg.summary_len();
    const std::size_t half = cfg.kernel_size / 2;

    WindowMoments wm;
    normalize_one(x, cfg.eps, s.xnorm, wm.mu, wm.var);
    wm.scale = std::sqrt(wm.var + cfg.eps);

    const auto kernel = p.kernel(channel);
    for (std::size_t m = 0; m < M; ++m) {
        const double* base = s.xnorm.data() + m * half;
        double acc = 0.0;
        for (std::size_t u = 0; u < cfg.kernel_size; ++u) acc += kernel[u] * base[u];
        s.z[m] = acc;
    }

    const ConstMat A = p.allocator();
    std::fill(s.gamma.begin(), s.gamma.end(), 0.0);
    for (std::size_t m = 0; m < M; ++m) {
        const double zm = s.z[m];
        for (std::size_t k = 0; k < K; ++k) s.gamma[k] += zm * A(m, k);
    }

    double mx = s.gamma[0];
    for (double g : s.gamma) mx = std::max(mx, g);
    double wsum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        s.w[k] = std::exp(s.gamma[k] - mx);
        wsum += s.w[k];
    }
    for (std::size_t k = 0; k < K; ++k) s.w[k] /= wsum;

    mixture_output(s.xnorm, s.w, p, cfg, s.expert, s.mixed);
    return wm;
}

/// Backward pass for one (window, channel) pair. `dpred` is dLoss/dprediction
/// in raw units; contributions are accumulated into `grad`.
inline void backward_one(std::span<const double> dpred, double scale, const Params& p,
                         const Config& cfg, std::size_t channel, Scratch& s, Grad& grad) {
    const std::size_t H = cfg.horizon_len;
    const std::size_t S = cfg.chunk_size;
    const std::size_t HS = cfg.horizon_chunks();
    const std::size_t LS = cfg.lookback_chunks();
    const std::size_t K = cfg.num_experts;
    const std::size_t M = cfg.summary_len();
    const std::size_t half = cfg.kernel_size / 2;

    // Normalization statistics are treated as constants of the window, so the
    // only path through denormalization is the scale factor.
    for (std::size_t h = 0; h < H; ++h) s.gnorm[h] = dpred[h] * scale;

    // Inner products <gnorm_i, chunk_j> shared by every expert's theta grad.
    for (std::size_t i = 0; i < HS; ++i)
        for (std::size_t j = 0; j < LS; ++j) {
            const double* gi = s.gnorm.data() + i * S;
            const double* cj = s.xnorm.data() + j * S;
            double acc = 0.0;
            for (std::size_t u = 0; u < S; ++u) acc += gi[u] * cj[u];
            s.gc[i * LS + j] = acc;
        }

    double dw_dot_w = 0.0;
    std::vector<double>& dw = s.dgamma;  // reuse: first holds dLoss/dw, then dLoss/dgamma
    for (std::size_t k = 0; k < K; ++k) {
        const double wk = s.w[k];
        const double* ek = s.expert.data() + k * H;
        Mat gtheta = grad.theta(k);
        Mat gbias = grad.bias(k);
        double dk = 0.0;
        for (std::size_t h = 0; h < H; ++h) dk += s.gnorm[h] * ek[h];
        dw[k] = dk;
        dw_dot_w += wk * dk;
        for (std::size_t i = 0; i < HS; ++i) {
            for (std::size_t j = 0; j < LS; ++j) gtheta(i, j) += wk * s.gc[i * LS + j];
            const double* gi = s.gnorm.data() + i * S;
            for (std::size_t u = 0; u < S; ++u) gbias(i, u) += wk * gi[u];
        }
    }
    for (std::size_t k = 0; k < K; ++k) dw[k] = s.w[k] * (dw[k] - dw_dot_w);  // softmax backward

    const ConstMat A = p.allocator();
    Mat gA = grad.allocator();
    for (std::size_t m = 0; m < M; ++m) {
        const double zm = s.z[m];
        double acc = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            gA(m, k) += zm * dw[k];
            acc += A(m, k) * dw[k];
        }
        s.dz[m] = acc;
    }

    auto gkernel = grad.kernel(channel);
    for (std::size_t m = 0; m < M; ++m) {
        const double dzm = s.dz[m];
        if (dzm == 0.0) continue;
        const double* base = s.xnorm.data() + m * half;
        for (std::size_t u = 0; u < cfg.kernel_size; ++u) gkernel[u] += dzm * base[u];
    }
}

inline void check_shapes(const WindowBatch& batch, const Params& p, const Config& cfg) {
    cfg.validate();
    if (batch.channels != cfg.channels || batch.lookback_len != cfg.lookback_len)
        throw std::invalid_argument("batch shape does not match model config");
    if (p.num_experts != cfg.num_experts || p.horizon_chunks != cfg.horizon_chunks() ||
        p.lookback_chunks != cfg.lookback_chunks() || p.chunk_size != cfg.chunk_size ||
        p.channels != cfg.channels || p.kernel_size != cfg.kernel_size ||
        p.summary_len != cfg.summary_len())
        throw std::invalid_argument("parameter shape does not match model config");
}

}  // namespace detail

struct ForwardResult {
    std::vector<double> prediction;  // [batch][channel][horizon], raw units
    NormStats stats;
    MixWeights mix;
};

/// Full forward pass over a batch: instance-normalize, gate, mix the expert
/// correlation matrices, denormalize.
inline ForwardResult forward(const WindowBatch& batch, const Params& p, const Config& cfg,
                             int threads = 0) {
    detail::check_shapes(batch, p, cfg);
    const std::size_t B = batch.batch;
    const std::size_t N = cfg.channels;
    const std::size_t H = cfg.horizon_len;
    const std::size_t K = cfg.num_experts;

    ForwardResult r;
    r.prediction.resize(B * N * H);
    r.stats.batch = B;
    r.stats.channels = N;
    r.stats.eps = cfg.eps;
    r.stats.mu.resize(B * N);
    r.stats.sigma.resize(B * N);
    r.mix.batch = B;
    r.mix.channels = N;
    r.mix.num_experts = K;
    r.mix.gamma.resize(B * N * K);
    r.mix.w.resize(B * N * K);

    const int T = resolve_threads(threads);
#ifdef _OPENMP
#pragma omp parallel num_threads(T)
#endif
    {
        detail::Scratch scratch(cfg);
#ifdef _OPENMP
#pragma omp for schedule(static) collapse(2)
#endif
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t n = 0; n < N; ++n) {
                const auto wm = detail::forward_one(batch.lookback_of(b, n), p, cfg, n, scratch);
                const std::size_t cell = b * N + n;
                r.stats.mu[cell] = wm.mu;
                r.stats.sigma[cell] = wm.var;
                for (std::size_t k = 0; k < K; ++k) {
                    r.mix.gamma[cell * K + k] = scratch.gamma[k];
                    r.mix.w[cell * K + k] = scratch.w[k];
                }
                double* out = r.prediction.data() + cell * H;
                for (std::size_t h = 0; h < H; ++h) out[h] = scratch.mixed[h] * wm.scale + wm.mu;
            }
    }
    (void)T;

    for (std::size_t i = 0; i < r.prediction.size(); ++i)
        if (!std::isfinite(r.prediction[i])) {
            const std::size_t cell = i / H;
            throw std::runtime_error("non-finite prediction at window " +
                                     std::to_string(cell / N) + ", channel " +
                                     std::to_string(cell % N));
        }
    return r;
}

struct LossGrad {
    double loss = 0.0;
    Grad grad;
};

/// Mean squared error over all batch elements together with dLoss/dparameter,
/// accumulated in a fixed order so results are reproducible for a given
/// thread count (and bit-exact single-threaded).
inline LossGrad loss_and_grad(const WindowBatch& batch, const Params& p, const Config& cfg,
                              int threads = 0) {
    detail::check_shapes(batch, p, cfg);
    if (batch.horizon_len != cfg.horizon_len)
        throw std::invalid_argument("batch horizon does not match model config");
    const std::size_t B = batch.batch;
    const std::size_t N = cfg.channels;
    const std::size_t H = cfg.horizon_len;
    const double inv_count = 1.0 / static_cast<double>(B * N * H);

    const int T = resolve_threads(threads);
    std::vector<Grad> partial(T, Params::shaped_like(cfg));
    std::vector<double> partial_loss(T, 0.0);

#ifdef _OPENMP
#pragma omp parallel num_threads(T)
#endif
    {
#ifdef _OPENMP
        const int tid = omp_get_thread_num();
#else
        const int tid = 0;
#endif
        detail::Scratch scratch(cfg);
        std::vector<double> dpred(H);
        Grad& g = partial[tid];
        double local_loss = 0.0;
#ifdef _OPENMP
#pragma omp for schedule(static) collapse(2)
#endif
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t n = 0; n < N; ++n) {
                const auto x = batch.lookback_of(b, n);
                const auto y = batch.target_of(b, n);
                const auto wm = detail::forward_one(x, p, cfg, n, scratch);
                for (std::size_t h = 0; h < H; ++h) {
                    const double pred = scratch.mixed[h] * wm.scale + wm.mu;
                    const double e = pred - y[h];
                    local_loss += e * e;
                    dpred[h] = 2.0 * e * inv_count;
                }
                detail::backward_one(dpred, wm.scale, p, cfg, n, scratch, g);
            }
        partial_loss[tid] = local_loss;
    }

    LossGrad out;
    out.grad = std::move(partial[0]);
    double loss = partial_loss[0];
    for (int t = 1; t < T; ++t) {
        loss += partial_loss[t];
        for (std::size_t i = 0; i < out.grad.flat.size(); ++i) out.grad.flat[i] += partial[t].flat[i];
    }
    out.loss = loss * inv_count;
    if (!std::isfinite(out.loss)) throw std::runtime_error("non-finite training loss");
    return out;
}

}  // namespace cmos
