#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmos/config.hpp"
#include "cmos/dataset.hpp"
#include "cmos/metrics.hpp"
#include "cmos/model.hpp"
#include "cmos/optim.hpp"
#include "cmos/params.hpp"
#include "cmos/periodicity.hpp"
#include "cmos/rng.hpp"
#include "cmos/windows.hpp"

namespace cmos {

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct RunHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_loss = std::numeric_limits<double>::quiet_NaN();
};

struct FitResult {
    Params params;  // parameters from the epoch with minimal validation MSE
    RunHistory history;
};

/// Fill in cfg.pi_period from the data when injection is requested without an
/// explicit period. Estimation failures or a period incompatible with the
/// chunk size disable injection and record a warning instead of failing the
/// run; an explicit incompatible period still fails validation later.
inline void resolve_periodicity(Config& cfg, const Dataset& ds, std::size_t train_steps,
                                std::vector<std::string>* warnings = nullptr) {
    if (!cfg.pi_enabled || cfg.pi_period) return;
    const std::size_t max_lag =
        std::max<std::size_t>(4, std::min(cfg.lookback_len, ds.steps / 4));
    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };
    try {
        const PeriodEstimate est = estimate_period(ds, train_steps, max_lag);
        if (est.period % cfg.chunk_size != 0) {
            warn("periodicity injection disabled: estimated period " + std::to_string(est.period) +
                 " is not a multiple of chunk size " + std::to_string(cfg.chunk_size));
            cfg.pi_enabled = false;
        } else if (est.period > cfg.lookback_len) {
            warn("periodicity injection disabled: estimated period " + std::to_string(est.period) +
                 " exceeds the lookback window");
            cfg.pi_enabled = false;
        } else {
            cfg.pi_period = est.period;
        }
    } catch (const std::exception& e) {
        warn(std::string("periodicity injection disabled: ") + e.what());
        cfg.pi_enabled = false;
    }
}

/// Train with AdamW and a step-decayed learning rate; after every epoch the
/// validation MSE decides whether the current parameters become the returned
/// checkpoint. Deterministic for a fixed seed and thread count.
inline FitResult fit(const Dataset& ds, const SplitRanges& splits, const Config& cfg,
                     const TrainConfig& tcfg, std::uint64_t seed) {
    cfg.validate();
    tcfg.validate();

    FitResult result;
    result.params = init_params(cfg, seed);
    if (tcfg.epochs == 0) return result;

    const std::vector<std::size_t> train_origins =
        window_origins(splits.train, cfg.lookback_len, cfg.horizon_len, 1);
    OptimizerState state = OptimizerState::shaped_like(result.params);

    Params current = result.params;
    double best_val = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;

    std::vector<std::size_t> origins = train_origins;
    for (std::size_t epoch = 0; epoch < tcfg.epochs; ++epoch) {
        const double lr = steplr(tcfg.lr0, epoch, tcfg.step_size, tcfg.gamma);
        if (tcfg.shuffle) {
            origins = train_origins;
            Rng rng = make_rng(seed, /*tag=*/0x73687566u, epoch);
            shuffle(origins, rng);
        }

        double sq_sum = 0.0;
        std::size_t cell_count = 0;
        std::size_t batch_index = 0;
        for (const auto span : batch_spans(origins, tcfg.batch_size)) {
            const WindowBatch batch = make_batch(ds, span, cfg.lookback_len, cfg.horizon_len);
            LossGrad lg;
            try {
                lg = loss_and_grad(batch, current, cfg, tcfg.threads);
                adamw_step(current, lg.grad, state, lr, tcfg);
            } catch (const std::exception& e) {
                throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batch_index) + ": " + e.what());
            }
            const std::size_t cells = batch.batch * cfg.channels * cfg.horizon_len;
            sq_sum += lg.loss * static_cast<double>(cells);
            cell_count += cells;
            ++batch_index;
        }

        const double train_loss = sq_sum / static_cast<double>(cell_count);
        const double val_loss =
            evaluate(ds, splits.val, current, cfg, /*batch_size=*/256, tcfg.threads).mse;
        result.history.epochs.push_back({epoch, train_loss, val_loss, lr});

        if (val_loss < best_val) {
            best_val = val_loss;
            result.params = current;
            result.history.best_epoch = epoch;
            result.history.best_val_loss = val_loss;
            since_best = 0;
        } else if (tcfg.patience) {
            ++since_best;
            if (since_best >= *tcfg.patience) break;
        }
    }
    return result;
}

struct SeedRun {
    std::uint64_t seed = 0;
    double mse = 0.0;
    double mae = 0.0;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
};

struct MultiSeedResult {
    std::vector<SeedRun> runs;
    std::vector<FitResult> fits;  // aligned with runs
    double mean_mse = 0.0, std_mse = 0.0;
    double mean_mae = 0.0, std_mae = 0.0;
};

/// Repeat fit + test evaluation per seed and summarize with mean and
/// population standard deviation.
inline MultiSeedResult multi_seed(const Dataset& ds, const SplitRanges& splits, const Config& cfg,
                                  const TrainConfig& tcfg) {
    tcfg.validate();
    MultiSeedResult out;
    for (const std::uint64_t seed : tcfg.seeds) {
        FitResult fr = fit(ds, splits, cfg, tcfg, seed);
        const EvalMetrics test =
            evaluate(ds, splits.test, fr.params, cfg, /*batch_size=*/256, tcfg.threads);
        out.runs.push_back(
            {seed, test.mse, test.mae, fr.history.best_epoch, fr.history.best_val_loss});
        out.fits.push_back(std::move(fr));
    }
    const auto count = static_cast<double>(out.runs.size());
    for (const SeedRun& r : out.runs) {
        out.mean_mse += r.mse / count;
        out.mean_mae += r.mae / count;
    }
    for (const SeedRun& r : out.runs) {
        out.std_mse += (r.mse - out.mean_mse) * (r.mse - out.mean_mse) / count;
        out.std_mae += (r.mae - out.mean_mae) * (r.mae - out.mean_mae) / count;
    }
    out.std_mse = std::sqrt(out.std_mse);
    out.std_mae = std::sqrt(out.std_mae);
    return out;
}

}  // namespace cmos
