#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmos/dataset.hpp"
#include "cmos/rng.hpp"
#include "cmos/train.hpp"

namespace cmos {

/// Multi-channel sinusoid; channel n is phase-shifted by phase + 2*pi*n/N so
/// channels are distinct but share the period.
inline Dataset gen_sine(std::size_t steps, std::size_t period, double amplitude = 1.0,
                        double phase = 0.0, std::size_t n_channels = 1) {
    if (period < 2) throw std::invalid_argument("gen_sine: period must be >= 2");
    if (steps < 2 * period) throw std::invalid_argument("gen_sine: need at least two periods");
    if (n_channels == 0) throw std::invalid_argument("gen_sine: need at least one channel");
    Dataset ds;
    ds.name = "sine_p" + std::to_string(period);
    ds.steps = steps;
    ds.channels = n_channels;
    ds.values.resize(steps * n_channels);
    for (std::size_t n = 0; n < n_channels; ++n) {
        ds.channel_names.push_back("ch" + std::to_string(n));
        const double ph = phase + 2.0 * M_PI * static_cast<double>(n) / static_cast<double>(n_channels);
        for (std::size_t t = 0; t < steps; ++t)
            ds.at(t, n) = amplitude *
                          std::sin(2.0 * M_PI * static_cast<double>(t) / static_cast<double>(period) + ph);
    }
    return ds;
}

/// Elementwise i.i.d. Gaussian corruption, reproducible from the seed.
inline Dataset add_gaussian_noise(const Dataset& ds, double mu, double sigma, std::uint64_t seed) {
    if (sigma < 0) throw std::invalid_argument("add_gaussian_noise: sigma must be nonnegative");
    Dataset out = ds;
    out.name = ds.name + "+gauss";
    if (sigma == 0.0 && mu == 0.0) return out;
    Rng rng = make_rng(seed, /*tag=*/0x67617573u);
    for (double& v : out.values) v += mu + sigma * gaussian(rng);
    return out;
}

/// Sparse heavy-tailed corruption: arrival times and exceedance magnitudes.
struct BurstSpec {
    double threshold = 3.0;   // u, offset added to every exceedance
    double scale = 1.0;       // GPD sigma
    double shape = 0.2;       // GPD xi, >= 0
    double intensity = 0.01;  // expected bursts per time step

    void validate() const {
        if (scale <= 0) throw std::invalid_argument("burst spec: scale must be positive");
        if (shape < 0) throw std::invalid_argument("burst spec: shape must be nonnegative");
        if (intensity < 0 || intensity > 1)
            throw std::invalid_argument("burst spec: intensity must lie in [0, 1]");
    }
};

/// Generalized Pareto draw by inverse CDF; u01 must lie in [0, 1).
inline double gpd_sample(double u01, double scale, double shape) {
    const double tail = 1.0 - u01;  // in (0, 1]
    if (shape == 0.0) return -scale * std::log(tail);
    return scale * (std::pow(tail, -shape) - 1.0) / shape;
}

/// Per-step Bernoulli arrivals (the discrete approximation of a Poisson
/// process at small intensity); each burst adds sign * (threshold + GPD draw)
/// with an equiprobable random sign. Non-burst cells are untouched.
inline Dataset add_burst_noise(const Dataset& ds, const BurstSpec& spec, std::uint64_t seed) {
    spec.validate();
    Dataset out = ds;
    out.name = ds.name + "+burst";
    if (spec.intensity == 0.0) return out;
    Rng rng = make_rng(seed, /*tag=*/0x62757273u);
    for (std::size_t n = 0; n < ds.channels; ++n)
        for (std::size_t t = 0; t < ds.steps; ++t) {
            if (uniform01(rng) >= spec.intensity) continue;
            const double y = gpd_sample(uniform01(rng), spec.scale, spec.shape);
            const double sign = uniform01(rng) < 0.5 ? -1.0 : 1.0;
            out.at(t, n) += sign * (spec.threshold + y);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Chunk-level vs point-level robustness experiment
// ---------------------------------------------------------------------------

struct ChunkVsPointSpec {
    std::size_t steps = 4000;
    std::size_t period = 24;
    double amplitude = 1.0;
    std::size_t channels = 4;
    BurstSpec burst;            // set intensity 0 for the noiseless control
    std::size_t lookback = 48;
    std::size_t horizon = 24;
    std::size_t chunk_size = 8;  // the point-level twin always uses S = 1
    std::size_t experts = 2;
    std::size_t kernel_size = 8;
};

struct ChunkVsPointResult {
    double chunk_mse = 0.0, chunk_mae = 0.0;
    double point_mse = 0.0, point_mae = 0.0;
};

/// Train two models that differ only in chunk size on the same burst-noised
/// sinusoids with the same seeds, and report both test metrics.
inline ChunkVsPointResult chunk_vs_point_experiment(const ChunkVsPointSpec& spec,
                                                    const TrainConfig& tcfg) {
    if (spec.chunk_size <= 1) throw std::invalid_argument("chunk_vs_point: chunk size must be > 1");
    Dataset base = gen_sine(spec.steps, spec.period, spec.amplitude, 0.0, spec.channels);
    const std::uint64_t noise_seed = tcfg.seeds.front();
    Dataset noised = add_burst_noise(base, spec.burst, noise_seed);
    const SplitRanges splits = split(noised, SplitSpec::standard(), spec.lookback, spec.horizon);
    standardize(noised, splits.train);

    Config cfg;
    cfg.lookback_len = spec.lookback;
    cfg.horizon_len = spec.horizon;
    cfg.chunk_size = spec.chunk_size;
    cfg.num_experts = spec.experts;
    cfg.kernel_size = spec.kernel_size;
    cfg.channels = noised.channels;

    Config point_cfg = cfg;
    point_cfg.chunk_size = 1;

    const MultiSeedResult chunk_run = multi_seed(noised, splits, cfg, tcfg);
    const MultiSeedResult point_run = multi_seed(noised, splits, point_cfg, tcfg);
    return {chunk_run.mean_mse, chunk_run.mean_mae, point_run.mean_mse, point_run.mean_mae};
}

}  // namespace cmos
