#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "cmos/dataset.hpp"
#include "cmos/mat.hpp"

namespace cmos {

/// A batch of sliding windows: B lookbacks of length L paired with the B
/// target windows of length H that immediately follow them. Tensors are laid
/// out [batch][channel][time].
struct WindowBatch {
    std::size_t batch = 0;
    std::size_t channels = 0;
    std::size_t lookback_len = 0;
    std::size_t horizon_len = 0;
    std::vector<double> lookback;
    std::vector<double> target;
    std::vector<std::size_t> origin_indices;  // absolute index of the last lookback step

    std::span<const double> lookback_of(std::size_t b, std::size_t n) const {
        return {lookback.data() + (b * channels + n) * lookback_len, lookback_len};
    }
    std::span<const double> target_of(std::size_t b, std::size_t n) const {
        return {target.data() + (b * channels + n) * horizon_len, horizon_len};
    }
};

/// Window origins for one split zone, in enumeration order. An origin o means
/// lookback [o-L+1, o] and target [o+1, o+H]. Targets stay inside the zone;
/// lookbacks of eval zones may reach back into the preceding split.
inline std::vector<std::size_t> window_origins(const SplitRange& zone, std::size_t L,
                                               std::size_t H, std::size_t stride = 1) {
    if (stride == 0) throw std::invalid_argument("stride must be >= 1");
    const std::size_t lo = std::max(zone.target_begin, L) - 1;  // o >= L-1 and o >= begin-1
    if (zone.target_end < H + 1) throw std::runtime_error("no window fits in range");
    const std::size_t hi = zone.target_end - H - 1;
    if (hi < lo) throw std::runtime_error("no window fits in range");
    std::vector<std::size_t> origins;
    origins.reserve((hi - lo) / stride + 1);
    for (std::size_t o = lo; o <= hi; o += stride) origins.push_back(o);
    return origins;
}

/// Materialize the windows for a run of origins.
inline WindowBatch make_batch(const Dataset& ds, std::span<const std::size_t> origins,
                              std::size_t L, std::size_t H) {
    WindowBatch b;
    b.batch = origins.size();
    b.channels = ds.channels;
    b.lookback_len = L;
    b.horizon_len = H;
    b.lookback.resize(b.batch * b.channels * L);
    b.target.resize(b.batch * b.channels * H);
    b.origin_indices.assign(origins.begin(), origins.end());
    for (std::size_t i = 0; i < origins.size(); ++i) {
        const std::size_t o = origins[i];
        if (o + 1 < L || o + H >= ds.steps + 1) {
            if (o + H > ds.steps - 1) throw std::out_of_range("window origin out of range");
        }
        for (std::size_t n = 0; n < ds.channels; ++n) {
            double* lb = b.lookback.data() + (i * b.channels + n) * L;
            double* tg = b.target.data() + (i * b.channels + n) * H;
            const std::size_t start = o + 1 - L;
            for (std::size_t t = 0; t < L; ++t) lb[t] = ds.at(start + t, n);
            for (std::size_t h = 0; h < H; ++h) tg[h] = ds.at(o + 1 + h, n);
        }
    }
    return b;
}

/// Split a list of origins into batches of at most `batch_size`; the last
/// batch may be smaller.
inline std::vector<std::span<const std::size_t>> batch_spans(std::span<const std::size_t> origins,
                                                             std::size_t batch_size) {
    if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
    std::vector<std::span<const std::size_t>> out;
    for (std::size_t i = 0; i < origins.size(); i += batch_size)
        out.push_back(origins.subspan(i, std::min(batch_size, origins.size() - i)));
    return out;
}

/// Reshape a length-L vector into (L/S) chunks of S values. Row 0 is the
/// oldest chunk, row L/S-1 the most recent; flattening row-major reproduces
/// the input exactly.
struct ChunkView {
    ConstMat chunks;

    std::span<const double> chunk(std::size_t i) const { return chunks.row(i); }
    std::size_t count() const { return chunks.rows; }
    std::size_t size() const { return chunks.cols; }
};

inline ChunkView chunk(std::span<const double> v, std::size_t S) {
    if (S == 0 || v.size() % S != 0)
        throw std::invalid_argument("chunk size " + std::to_string(S) +
                                    " does not divide vector length " + std::to_string(v.size()));
    return {ConstMat{v.data(), v.size() / S, S}};
}

}  // namespace cmos
