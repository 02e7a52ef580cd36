#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmos {

/// Model geometry. Lookback and horizon are partitioned into chunks of S
/// steps; K shared correlation matrices act on the chunk grid; each channel
/// owns a size-c aggregator kernel feeding a shared K-way weight allocator.
struct Config {
    std::size_t lookback_len = 336;   // L
    std::size_t horizon_len = 96;     // H
    std::size_t chunk_size = 4;       // S
    std::size_t num_experts = 4;      // K
    std::size_t kernel_size = 8;      // c
    std::size_t channels = 1;         // N
    double eps = 1e-5;                // normalization floor
    bool pi_enabled = false;
    bool pi_inclusive = false;        // relax the injection bound from < to <=
    std::optional<std::size_t> pi_period;

    std::size_t lookback_chunks() const { return lookback_len / chunk_size; }
    std::size_t horizon_chunks() const { return horizon_len / chunk_size; }
    std::size_t summary_len() const { return (2 * lookback_len - kernel_size) / kernel_size; }

    void validate() const {
        if (lookback_len == 0 || horizon_len == 0 || channels == 0)
            throw std::invalid_argument("lookback, horizon, and channel count must be positive");
        if (chunk_size == 0 || lookback_len % chunk_size != 0 || horizon_len % chunk_size != 0)
            throw std::invalid_argument("chunk size must divide both lookback and horizon");
        if (num_experts < 1) throw std::invalid_argument("need at least one correlation matrix");
        if (kernel_size == 0 || kernel_size % 2 != 0)
            throw std::invalid_argument("aggregator kernel size must be even");
        if ((2 * lookback_len) % kernel_size != 0)
            throw std::invalid_argument("aggregator kernel size must divide 2*lookback");
        if (kernel_size > lookback_len)
            throw std::invalid_argument("aggregator kernel longer than lookback");
        if (eps < 0) throw std::invalid_argument("eps must be nonnegative");
        if (pi_enabled) {
            if (!pi_period) throw std::invalid_argument("periodicity injection enabled without a period");
            if (*pi_period % chunk_size != 0)
                throw std::invalid_argument("chunk size must divide the injection period");
            if (*pi_period > lookback_len)
                throw std::invalid_argument("injection period exceeds the lookback window");
        }
    }
};

/// Optimization schedule: AdamW with decoupled decay plus a step decay on the
/// learning rate.
struct TrainConfig {
    double lr0 = 8e-4;
    double weight_decay = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t step_size = 20;   // scheduler window, in epochs
    double gamma = 0.75;          // scheduler decay per window
    std::size_t epochs = 200;
    std::size_t batch_size = 64;
    std::vector<std::uint64_t> seeds = {0};
    std::optional<std::size_t> patience;  // early stop; off by default
    bool shuffle = true;
    int threads = 0;  // 0 = library default (capped by CMOS_THREADS)

    void validate() const {
        if (lr0 <= 0) throw std::invalid_argument("learning rate must be positive");
        if (weight_decay < 0) throw std::invalid_argument("weight decay must be nonnegative");
        if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
            throw std::invalid_argument("betas must lie in [0, 1)");
        if (adam_eps <= 0) throw std::invalid_argument("adam eps must be positive");
        if (gamma <= 0 || gamma > 1) throw std::invalid_argument("scheduler gamma must be in (0, 1]");
        if (step_size == 0) throw std::invalid_argument("scheduler step size must be >= 1");
        if (batch_size == 0) throw std::invalid_argument("batch size must be >= 1");
        if (seeds.empty()) throw std::invalid_argument("need at least one seed");
    }
};

}  // namespace cmos
