#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmos/config.hpp"
#include "cmos/mat.hpp"
#include "cmos/periodicity.hpp"
#include "cmos/rng.hpp"

namespace cmos {

/// All learnable parameters in one flat buffer, viewed in declared order:
/// K correlation matrices (H/S x L/S, row-major), K bias blocks (H/S x S),
/// N aggregator kernels (length c), then the shared allocator ((2L-c)/c x K).
/// The flat layout is shared by gradients, optimizer state, and checkpoints.
struct Params {
    std::size_t num_experts = 0;      // K
    std::size_t horizon_chunks = 0;   // H/S
    std::size_t lookback_chunks = 0;  // L/S
    std::size_t chunk_size = 0;       // S
    std::size_t channels = 0;         // N
    std::size_t kernel_size = 0;      // c
    std::size_t summary_len = 0;      // (2L-c)/c
    std::vector<double> flat;

    static Params shaped_like(const Config& cfg) {
        Params p;
        p.num_experts = cfg.num_experts;
        p.horizon_chunks = cfg.horizon_chunks();
        p.lookback_chunks = cfg.lookback_chunks();
        p.chunk_size = cfg.chunk_size;
        p.channels = cfg.channels;
        p.kernel_size = cfg.kernel_size;
        p.summary_len = cfg.summary_len();
        p.flat.assign(p.total_size(), 0.0);
        return p;
    }

    std::size_t theta_size() const { return horizon_chunks * lookback_chunks; }
    std::size_t bias_size() const { return horizon_chunks * chunk_size; }
    std::size_t theta_offset(std::size_t k) const { return k * theta_size(); }
    std::size_t bias_offset(std::size_t k) const {
        return num_experts * theta_size() + k * bias_size();
    }
    std::size_t kernel_offset(std::size_t n) const {
        return num_experts * (theta_size() + bias_size()) + n * kernel_size;
    }
    std::size_t allocator_offset() const {
        return num_experts * (theta_size() + bias_size()) + channels * kernel_size;
    }
    std::size_t total_size() const { return allocator_offset() + summary_len * num_experts; }

    Mat theta(std::size_t k) { return {flat.data() + theta_offset(k), horizon_chunks, lookback_chunks}; }
    ConstMat theta(std::size_t k) const {
        return {flat.data() + theta_offset(k), horizon_chunks, lookback_chunks};
    }
    Mat bias(std::size_t k) { return {flat.data() + bias_offset(k), horizon_chunks, chunk_size}; }
    ConstMat bias(std::size_t k) const {
        return {flat.data() + bias_offset(k), horizon_chunks, chunk_size};
    }
    std::span<double> kernel(std::size_t n) { return {flat.data() + kernel_offset(n), kernel_size}; }
    std::span<const double> kernel(std::size_t n) const {
        return {flat.data() + kernel_offset(n), kernel_size};
    }
    Mat allocator() { return {flat.data() + allocator_offset(), summary_len, num_experts}; }
    ConstMat allocator() const { return {flat.data() + allocator_offset(), summary_len, num_experts}; }

    bool same_shape(const Params& o) const {
        return num_experts == o.num_experts && horizon_chunks == o.horizon_chunks &&
               lookback_chunks == o.lookback_chunks && chunk_size == o.chunk_size &&
               channels == o.channels && kernel_size == o.kernel_size && summary_len == o.summary_len;
    }
};

/// Gradients share the parameter layout.
using Grad = Params;

namespace detail {
inline void fill_uniform(std::span<double> out, double bound, Rng& rng) {
    for (double& v : out) v = uniform(rng, -bound, bound);
}
}  // namespace detail

/// Random initialization: correlation and allocator weights uniform in
/// +-1/sqrt(fan_in), kernels uniform in +-1/sqrt(c), biases zero. When
/// periodicity injection is configured, theta[0] is overwritten with the
/// injected periodic peaks.
inline Params init_params(const Config& cfg, std::uint64_t seed) {
    cfg.validate();
    Params p = Params::shaped_like(cfg);
    Rng rng = make_rng(seed, /*tag=*/0x70617261u);  // parameter stream
    const double theta_bound = 1.0 / std::sqrt(static_cast<double>(p.lookback_chunks));
    const double kernel_bound = 1.0 / std::sqrt(static_cast<double>(p.kernel_size));
    const double alloc_bound = 1.0 / std::sqrt(static_cast<double>(p.summary_len));
    for (std::size_t k = 0; k < p.num_experts; ++k) detail::fill_uniform(p.theta(k).flat(), theta_bound, rng);
    // biases stay zero
    for (std::size_t n = 0; n < p.channels; ++n) detail::fill_uniform(p.kernel(n), kernel_bound, rng);
    detail::fill_uniform(p.allocator().flat(), alloc_bound, rng);
    if (cfg.pi_enabled) {
        Mat th0 = p.theta(0);
        std::fill(th0.flat().begin(), th0.flat().end(), 0.0);
        inject(th0, *cfg.pi_period, cfg.chunk_size, cfg.lookback_len, cfg.horizon_len,
               cfg.pi_inclusive);
    }
    return p;
}

// ---------------------------------------------------------------------------
// Checkpoint file: human-readable key-value header terminated by a blank
// line, then the flat parameter buffer as little-endian 64-bit floats in
// declared order.
// ---------------------------------------------------------------------------

struct Checkpoint {
    Config config;
    Params params;
    std::uint64_t seed = 0;
    std::size_t epoch = 0;
    double val_loss = 0.0;
};

namespace detail {

inline void write_f64_le(std::ostream& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

inline double read_f64_le(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    if (!in) throw std::runtime_error("checkpoint truncated while reading parameters");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

inline std::string fmt_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    const Config& c = ck.config;
    out << "format_version 1\n";
    out << "lookback " << c.lookback_len << "\n";
    out << "horizon " << c.horizon_len << "\n";
    out << "chunk_size " << c.chunk_size << "\n";
    out << "experts " << c.num_experts << "\n";
    out << "kernel_size " << c.kernel_size << "\n";
    out << "channels " << c.channels << "\n";
    out << "eps " << detail::fmt_double(c.eps) << "\n";
    out << "pi_enabled " << (c.pi_enabled ? 1 : 0) << "\n";
    out << "pi_inclusive " << (c.pi_inclusive ? 1 : 0) << "\n";
    if (c.pi_period) out << "pi_period " << *c.pi_period << "\n";
    out << "seed " << ck.seed << "\n";
    out << "epoch " << ck.epoch << "\n";
    out << "val_loss " << detail::fmt_double(ck.val_loss) << "\n";
    out << "\n";
    for (double v : ck.params.flat) detail::write_f64_le(out, v);
    if (!out) throw std::runtime_error("failed writing checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    Checkpoint ck;
    std::string line;
    bool saw_version = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) break;
        std::istringstream ss(line);
        std::string key;
        ss >> key;
        if (key == "format_version") {
            int v;
            ss >> v;
            if (v != 1) throw std::runtime_error(path + ": unsupported checkpoint version");
            saw_version = true;
        } else if (key == "lookback") ss >> ck.config.lookback_len;
        else if (key == "horizon") ss >> ck.config.horizon_len;
        else if (key == "chunk_size") ss >> ck.config.chunk_size;
        else if (key == "experts") ss >> ck.config.num_experts;
        else if (key == "kernel_size") ss >> ck.config.kernel_size;
        else if (key == "channels") ss >> ck.config.channels;
        else if (key == "eps") ss >> ck.config.eps;
        else if (key == "pi_enabled") { int b; ss >> b; ck.config.pi_enabled = b != 0; }
        else if (key == "pi_inclusive") { int b; ss >> b; ck.config.pi_inclusive = b != 0; }
        else if (key == "pi_period") { std::size_t p; ss >> p; ck.config.pi_period = p; }
        else if (key == "seed") ss >> ck.seed;
        else if (key == "epoch") ss >> ck.epoch;
        else if (key == "val_loss") ss >> ck.val_loss;
        // unknown keys are ignored for forward compatibility
        if (ss.fail()) throw std::runtime_error(path + ": malformed checkpoint header line: " + line);
    }
    if (!saw_version) throw std::runtime_error(path + ": missing checkpoint header");
    ck.config.validate();
    ck.params = Params::shaped_like(ck.config);
    for (double& v : ck.params.flat) v = detail::read_f64_le(in);
    return ck;
}

}  // namespace cmos
