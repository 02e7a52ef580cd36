#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmos/ablation.hpp"
#include "cmos/config.hpp"
#include "cmos/dataset.hpp"
#include "cmos/metrics.hpp"
#include "cmos/model.hpp"
#include "cmos/periodicity.hpp"
#include "cmos/train.hpp"

namespace cmos {

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

inline std::string history_csv(const RunHistory& h) {
    std::ostringstream ss;
    ss.precision(12);
    ss << "epoch,train_loss,val_loss,lr\n";
    for (const EpochRecord& e : h.epochs)
        ss << e.epoch << "," << e.train_loss << "," << e.val_loss << "," << e.lr << "\n";
    return ss.str();
}

inline nlohmann::json config_json(const Config& cfg) {
    nlohmann::json j;
    j["lookback"] = cfg.lookback_len;
    j["horizon"] = cfg.horizon_len;
    j["chunk_size"] = cfg.chunk_size;
    j["experts"] = cfg.num_experts;
    j["kernel_size"] = cfg.kernel_size;
    j["channels"] = cfg.channels;
    j["eps"] = cfg.eps;
    j["pi"] = cfg.pi_enabled;
    j["pi_inclusive"] = cfg.pi_inclusive;
    if (cfg.pi_period) j["pi_period"] = *cfg.pi_period;
    return j;
}

inline nlohmann::json train_config_json(const TrainConfig& t) {
    nlohmann::json j;
    j["lr0"] = t.lr0;
    j["weight_decay"] = t.weight_decay;
    j["betas"] = {t.beta1, t.beta2};
    j["adam_eps"] = t.adam_eps;
    j["step_size"] = t.step_size;
    j["gamma"] = t.gamma;
    j["epochs"] = t.epochs;
    j["batch_size"] = t.batch_size;
    j["seeds"] = t.seeds;
    if (t.patience) j["patience"] = *t.patience;
    return j;
}

inline nlohmann::json param_count_json(const ParamCount& c) {
    nlohmann::json j;
    j["correlation_part"] = c.correlation_part;
    j["aggregators_part"] = c.aggregators_part;
    j["allocator_part"] = c.allocator_part;
    j["bias_part"] = c.bias_part;
    j["total"] = c.total;
    j["total_with_bias"] = c.total_with_bias;
    return j;
}

/// The structured metrics report for one (dataset, variant, config) run.
inline nlohmann::json metrics_json(const std::string& dataset_name, const std::string& variant,
                                   const Config& cfg, const MultiSeedResult& ms) {
    nlohmann::json j;
    j["dataset"] = dataset_name;
    j["variant"] = variant;
    j["L"] = cfg.lookback_len;
    j["H"] = cfg.horizon_len;
    j["S"] = cfg.chunk_size;
    j["K"] = cfg.num_experts;
    j["c"] = cfg.kernel_size;
    nlohmann::json seeds = nlohmann::json::array();
    nlohmann::json per_seed = nlohmann::json::array();
    for (const SeedRun& r : ms.runs) {
        seeds.push_back(r.seed);
        per_seed.push_back({{"mse", r.mse}, {"mae", r.mae}, {"best_epoch", r.best_epoch}});
    }
    j["seeds"] = seeds;
    j["per_seed"] = per_seed;
    j["mean_mse"] = ms.mean_mse;
    j["std_mse"] = ms.std_mse;
    j["mean_mae"] = ms.mean_mae;
    j["std_mae"] = ms.std_mae;
    j["param_count"] = param_count_json(count_params(cfg));
    j["best_epoch"] = ms.runs.empty() ? 0 : ms.runs.front().best_epoch;
    return j;
}

inline std::string period_csv(const PeriodEstimate& est) {
    std::ostringstream ss;
    ss.precision(10);
    ss << "lag,acf,selected\n";
    for (const auto& [lag, value] : est.candidates)
        ss << lag << "," << value << "," << (lag == est.period ? 1 : 0) << "\n";
    return ss.str();
}

inline void write_dataset_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write dataset: " + path);
    out.precision(12);
    for (std::size_t n = 0; n < ds.channels; ++n) out << (n ? "," : "") << ds.channel_names[n];
    out << "\n";
    for (std::size_t t = 0; t < ds.steps; ++t) {
        for (std::size_t n = 0; n < ds.channels; ++n) out << (n ? "," : "") << ds.at(t, n);
        out << "\n";
    }
}

namespace detail {

inline std::string matrix_csv(ConstMat m) {
    std::ostringstream ss;
    ss.precision(12);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) ss << (j ? "," : "") << m(i, j);
        ss << "\n";
    }
    return ss.str();
}

/// Grayscale heatmap; lighter cells carry larger weights.
inline std::string matrix_svg(ConstMat m, std::size_t cell_px = 8) {
    double lo = m(0, 0), hi = m(0, 0);
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) {
            lo = std::min(lo, m(i, j));
            hi = std::max(hi, m(i, j));
        }
    const double range = hi > lo ? hi - lo : 1.0;
    std::ostringstream ss;
    ss << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << m.cols * cell_px
       << "\" height=\"" << m.rows * cell_px << "\">\n";
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) {
            const int g = static_cast<int>(255.0 * (m(i, j) - lo) / range);
            ss << "<rect x=\"" << j * cell_px << "\" y=\"" << i * cell_px << "\" width=\""
               << cell_px << "\" height=\"" << cell_px << "\" fill=\"rgb(" << g << "," << g << ","
               << g << ")\"/>\n";
        }
    ss << "</svg>\n";
    return ss.str();
}

}  // namespace detail

/// Write the learned correlation matrices and the per-channel mean mixing
/// weights over every test window: theta_<k>.csv (+ .svg) and allocation.csv
/// (N rows, K columns, rows summing to 1).
inline void export_interpretability(const std::string& dir, const Params& params,
                                    const Config& cfg, const Dataset& ds,
                                    const SplitRange& test_zone, int threads = 0,
                                    bool svg = true) {
    std::filesystem::create_directories(dir);
    for (std::size_t k = 0; k < cfg.num_experts; ++k) {
        const ConstMat th = params.theta(k);
        write_text_file(dir + "/theta_" + std::to_string(k) + ".csv", detail::matrix_csv(th));
        if (svg)
            write_text_file(dir + "/theta_" + std::to_string(k) + ".svg", detail::matrix_svg(th));
    }

    const std::vector<std::size_t> origins =
        window_origins(test_zone, cfg.lookback_len, cfg.horizon_len, 1);
    Matrix mean_w(cfg.channels, cfg.num_experts, 0.0);
    std::size_t windows = 0;
    for (const auto span : batch_spans(origins, 256)) {
        const WindowBatch batch = make_batch(ds, span, cfg.lookback_len, cfg.horizon_len);
        const ForwardResult fr = forward(batch, params, cfg, threads);
        for (std::size_t b = 0; b < batch.batch; ++b)
            for (std::size_t n = 0; n < cfg.channels; ++n) {
                const auto w = fr.mix.weights_of(b, n);
                for (std::size_t k = 0; k < cfg.num_experts; ++k) mean_w(n, k) += w[k];
            }
        windows += batch.batch;
    }
    for (std::size_t n = 0; n < cfg.channels; ++n)
        for (std::size_t k = 0; k < cfg.num_experts; ++k)
            mean_w(n, k) /= static_cast<double>(windows);
    write_text_file(dir + "/allocation.csv", detail::matrix_csv(mean_w.view()));
}

}  // namespace cmos
