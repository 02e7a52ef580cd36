#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "cmos/dataset.hpp"
#include "cmos/mat.hpp"

namespace cmos {

/// Autocorrelation function r(0..max_lag). r(tau) uses the full-series mean
/// and is normalized by the lag-0 sum of squares, so r(0) == 1.
inline std::vector<double> acf(std::span<const double> series, std::size_t max_lag) {
    const std::size_t T = series.size();
    if (max_lag < 1 || T <= max_lag)
        throw std::invalid_argument("acf: need series length > max_lag >= 1");
    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(T);
    double denom = 0.0;
    for (double v : series) denom += (v - mean) * (v - mean);
    if (denom == 0.0) throw std::invalid_argument("acf: constant series has no autocorrelation");
    std::vector<double> r(max_lag + 1);
    for (std::size_t tau = 0; tau <= max_lag; ++tau) {
        double num = 0.0;
        for (std::size_t t = 0; t + tau < T; ++t)
            num += (series[t] - mean) * (series[t + tau] - mean);
        r[tau] = num / denom;
    }
    return r;
}

struct PeriodEstimate {
    std::size_t period = 0;
    double acf_value = 0.0;
    std::vector<std::pair<std::size_t, double>> candidates;  // (lag, acf) local maxima examined
};

/// Dominant period of a dataset: per-channel ACF over the first
/// `train_steps` rows, averaged across channels, then the strict local
/// maximum with the largest ACF value on lags [2, max_lag]. Ties break
/// toward the smaller lag. Throws when no local maximum exists.
inline PeriodEstimate estimate_period(const Dataset& ds, std::size_t train_steps,
                                      std::size_t max_lag) {
    if (max_lag < 4) throw std::invalid_argument("estimate_period: max_lag must be >= 4");
    if (train_steps > ds.steps) throw std::invalid_argument("estimate_period: train range too long");
    if (train_steps <= max_lag)
        throw std::invalid_argument("estimate_period: train range shorter than max_lag");

    std::vector<double> mean_acf(max_lag + 1, 0.0);
    std::vector<double> channel(train_steps);
    std::size_t used = 0;
    for (std::size_t n = 0; n < ds.channels; ++n) {
        for (std::size_t t = 0; t < train_steps; ++t) channel[t] = ds.at(t, n);
        bool constant = true;
        for (std::size_t t = 1; t < train_steps && constant; ++t)
            constant = channel[t] == channel[0];
        if (constant) continue;  // zero-variance channels carry no period information
        const std::vector<double> r = acf(channel, max_lag);
        for (std::size_t tau = 0; tau <= max_lag; ++tau) mean_acf[tau] += r[tau];
        ++used;
    }
    if (used == 0) throw std::runtime_error("estimate_period: all channels constant");
    for (double& v : mean_acf) v /= static_cast<double>(used);

    PeriodEstimate est;
    for (std::size_t lag = 2; lag + 1 <= max_lag; ++lag) {
        if (mean_acf[lag] > mean_acf[lag - 1] && mean_acf[lag] > mean_acf[lag + 1]) {
            est.candidates.emplace_back(lag, mean_acf[lag]);
            if (est.period == 0 || mean_acf[lag] > est.acf_value) {
                est.period = lag;
                est.acf_value = mean_acf[lag];
            }
        }
    }
    if (est.period == 0)
        throw std::runtime_error("estimate_period: no local maximum found in the averaged ACF");
    return est;
}

/// Overwrite a zero-initialized correlation matrix with periodic peaks of
/// value p/L at lag-aligned chunk positions. Loop bounds follow the
/// reference pseudocode with 1-based indices; `inclusive` relaxes the bound
/// i+j < L/S to i+j <= L/S, which admits the most-recent-chunk column on
/// lag-aligned rows.
inline void inject(Mat theta0, std::size_t period, std::size_t chunk_size, std::size_t lookback_len,
                   std::size_t horizon_len, bool inclusive = false) {
    if (chunk_size == 0 || period % chunk_size != 0)
        throw std::invalid_argument("inject: chunk size must divide the period");
    if (lookback_len % chunk_size != 0 || horizon_len % chunk_size != 0)
        throw std::invalid_argument("inject: chunk size must divide lookback and horizon");
    if (period > lookback_len) throw std::invalid_argument("inject: period exceeds lookback");
    const std::size_t LS = lookback_len / chunk_size;
    const std::size_t HS = horizon_len / chunk_size;
    const std::size_t pS = period / chunk_size;
    if (theta0.rows != HS || theta0.cols != LS)
        throw std::invalid_argument("inject: matrix shape does not match the chunk grid");
    const double value = static_cast<double>(period) / static_cast<double>(lookback_len);
    for (std::size_t i = 1; i <= HS; ++i) {
        if (LS < pS) break;
        for (std::size_t j = LS - pS; j >= 1; j -= pS) {
            const bool in_bound = inclusive ? (i + j <= LS) : (i + j < LS);
            if (in_bound) theta0(i - 1, (j + i) - 1) = value;
            if (j < pS) break;  // unsigned loop guard
        }
    }
}

}  // namespace cmos
