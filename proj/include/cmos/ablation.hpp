#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cmos/config.hpp"
#include "cmos/dataset.hpp"
#include "cmos/metrics.hpp"
#include "cmos/train.hpp"

namespace cmos {

/// Model variants for the ablation harness. `one_bus` is the channel-shared
/// single-correlation strategy (same transform as no_cormix); `private_line`
/// trains an independent single-correlation model per channel.
enum class AblationVariant { full, no_chunk, no_cormix, no_pi, one_bus, private_line };

inline const char* to_string(AblationVariant v) {
    switch (v) {
        case AblationVariant::full: return "full";
        case AblationVariant::no_chunk: return "no_chunk";
        case AblationVariant::no_cormix: return "no_cormix";
        case AblationVariant::no_pi: return "no_pi";
        case AblationVariant::one_bus: return "one_bus";
        case AblationVariant::private_line: return "private_line";
    }
    return "?";
}

inline AblationVariant variant_from_string(const std::string& s) {
    if (s == "full") return AblationVariant::full;
    if (s == "no_chunk") return AblationVariant::no_chunk;
    if (s == "no_cormix") return AblationVariant::no_cormix;
    if (s == "no_pi") return AblationVariant::no_pi;
    if (s == "one_bus") return AblationVariant::one_bus;
    if (s == "private_line") return AblationVariant::private_line;
    throw std::invalid_argument("unknown ablation variant '" + s + "'");
}

/// The config transformation each variant applies before training.
inline Config apply_variant(Config cfg, AblationVariant v) {
    switch (v) {
        case AblationVariant::full:
            break;
        case AblationVariant::no_chunk:
            cfg.chunk_size = 1;
            break;
        case AblationVariant::no_cormix:
        case AblationVariant::one_bus:
        case AblationVariant::private_line:
            cfg.num_experts = 1;
            break;
        case AblationVariant::no_pi:
            cfg.pi_enabled = false;
            cfg.pi_period.reset();
            break;
    }
    return cfg;
}

struct AblationOutcome {
    AblationVariant variant = AblationVariant::full;
    Config cfg;  // after the variant transformation
    MultiSeedResult result;
};

/// Train and evaluate a variant under the same seeds and protocol as the
/// full model. The dataset must already be standardized.
inline AblationOutcome run_ablation(const Dataset& ds, const SplitRanges& splits,
                                    const Config& base_cfg, const TrainConfig& tcfg,
                                    AblationVariant variant) {
    AblationOutcome out;
    out.variant = variant;
    out.cfg = apply_variant(base_cfg, variant);

    if (variant != AblationVariant::private_line) {
        out.result = multi_seed(ds, splits, out.cfg, tcfg);
        return out;
    }

    // Private line: one dedicated single-channel model per channel, merged
    // into joint metrics per seed. With a single correlation matrix the
    // gating path receives no gradient, so aggregator and allocator stay at
    // their (unused) initialization.
    Config ch_cfg = out.cfg;
    ch_cfg.channels = 1;
    MultiSeedResult& ms = out.result;
    for (const std::uint64_t seed : tcfg.seeds) {
        EvalAccum merged;
        std::size_t first_best_epoch = 0;
        double first_best_val = 0.0;
        for (std::size_t n = 0; n < ds.channels; ++n) {
            const Dataset single = select_channel(ds, n);
            const FitResult fr = fit(single, splits, ch_cfg, tcfg, seed);
            merged.merge(evaluate_accum(single, splits.test, fr.params, ch_cfg, 256, tcfg.threads));
            if (n == 0) {
                first_best_epoch = fr.history.best_epoch;
                first_best_val = fr.history.best_val_loss;
            }
        }
        const EvalMetrics m = finalize(merged, ds.channels);
        ms.runs.push_back({seed, m.mse, m.mae, first_best_epoch, first_best_val});
    }
    const auto count = static_cast<double>(ms.runs.size());
    for (const SeedRun& r : ms.runs) {
        ms.mean_mse += r.mse / count;
        ms.mean_mae += r.mae / count;
    }
    for (const SeedRun& r : ms.runs) {
        ms.std_mse += (r.mse - ms.mean_mse) * (r.mse - ms.mean_mse) / count;
        ms.std_mae += (r.mae - ms.mean_mae) * (r.mae - ms.mean_mae) / count;
    }
    ms.std_mse = std::sqrt(ms.std_mse);
    ms.std_mae = std::sqrt(ms.std_mae);
    return out;
}

}  // namespace cmos
