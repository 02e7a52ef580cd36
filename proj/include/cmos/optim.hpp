#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "cmos/config.hpp"
#include "cmos/params.hpp"

namespace cmos {

/// AdamW moment accumulators, flat like the parameters they track.
struct OptimizerState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t step = 0;

    static OptimizerState shaped_like(const Params& p) {
        OptimizerState s;
        s.m.assign(p.flat.size(), 0.0);
        s.v.assign(p.flat.size(), 0.0);
        return s;
    }
};

/// One AdamW update with decoupled weight decay: the decay term is applied
/// directly to the parameter, not folded into the gradient.
inline void adamw_step(Params& params, const Grad& grad, OptimizerState& state, double lr,
                       const TrainConfig& cfg) {
    if (grad.flat.size() != params.flat.size() || state.m.size() != params.flat.size())
        throw std::invalid_argument("adamw_step: shape mismatch");
    if (lr <= 0) throw std::invalid_argument("adamw_step: learning rate must be positive");
    for (double g : grad.flat)
        if (!std::isfinite(g)) throw std::runtime_error("adamw_step: non-finite gradient");

    state.step += 1;
    const double b1 = cfg.beta1;
    const double b2 = cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.flat.size(); ++i) {
        const double g = grad.flat[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params.flat[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.adam_eps) +
                                cfg.weight_decay * params.flat[i]);
    }
}

/// Step decay: lr0 * gamma^floor(epoch / step_size).
inline double steplr(double lr0, std::size_t epoch, std::size_t step_size = 20,
                     double gamma = 0.75) {
    return lr0 * std::pow(gamma, static_cast<double>(epoch / step_size));
}

}  // namespace cmos
