// Command-line front end: training, grid search, evaluation, ablations,
// period detection, synthetic data, interpretability export, and the
// theorem/gradient check suites.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cmos/cmos.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunOptions {
    std::string dataset;
    std::string out = "cmos_out";
    std::string split_style = "auto";  // auto: ETT* files use the 6:2:2 ratios
    cmos::Config model;
    cmos::TrainConfig train;
    bool deterministic = false;
    std::vector<std::size_t> grid_lookbacks{96, 336, 720};
    std::vector<std::size_t> grid_chunks{2, 4, 8, 24};
    std::vector<std::size_t> grid_experts{2, 4, 8};
    std::vector<double> grid_lrs{2e-5, 5e-5, 8e-5, 8e-4};
};

void apply_config_file(RunOptions& o, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    in >> j;
    if (j.contains("dataset")) o.dataset = j["dataset"].get<std::string>();
    if (j.contains("out")) o.out = j["out"].get<std::string>();
    if (j.contains("split_style")) o.split_style = j["split_style"].get<std::string>();
    if (j.contains("deterministic")) o.deterministic = j["deterministic"].get<bool>();
    if (j.contains("lookback")) o.model.lookback_len = j["lookback"].get<std::size_t>();
    if (j.contains("horizon")) o.model.horizon_len = j["horizon"].get<std::size_t>();
    if (j.contains("chunk_size")) o.model.chunk_size = j["chunk_size"].get<std::size_t>();
    if (j.contains("experts")) o.model.num_experts = j["experts"].get<std::size_t>();
    if (j.contains("kernel_size")) o.model.kernel_size = j["kernel_size"].get<std::size_t>();
    if (j.contains("eps")) o.model.eps = j["eps"].get<double>();
    if (j.contains("pi")) o.model.pi_enabled = j["pi"].get<bool>();
    if (j.contains("pi_inclusive")) o.model.pi_inclusive = j["pi_inclusive"].get<bool>();
    if (j.contains("pi_period")) o.model.pi_period = j["pi_period"].get<std::size_t>();
    if (j.contains("train")) {
        const json& t = j["train"];
        if (t.contains("lr0")) o.train.lr0 = t["lr0"].get<double>();
        if (t.contains("weight_decay")) o.train.weight_decay = t["weight_decay"].get<double>();
        if (t.contains("betas")) {
            o.train.beta1 = t["betas"][0].get<double>();
            o.train.beta2 = t["betas"][1].get<double>();
        }
        if (t.contains("adam_eps")) o.train.adam_eps = t["adam_eps"].get<double>();
        if (t.contains("step_size")) o.train.step_size = t["step_size"].get<std::size_t>();
        if (t.contains("gamma")) o.train.gamma = t["gamma"].get<double>();
        if (t.contains("epochs")) o.train.epochs = t["epochs"].get<std::size_t>();
        if (t.contains("batch_size")) o.train.batch_size = t["batch_size"].get<std::size_t>();
        if (t.contains("patience")) o.train.patience = t["patience"].get<std::size_t>();
        if (t.contains("seeds")) o.train.seeds = t["seeds"].get<std::vector<std::uint64_t>>();
    }
    if (j.contains("grid")) {
        const json& g = j["grid"];
        if (g.contains("lookbacks")) o.grid_lookbacks = g["lookbacks"].get<std::vector<std::size_t>>();
        if (g.contains("chunk_sizes")) o.grid_chunks = g["chunk_sizes"].get<std::vector<std::size_t>>();
        if (g.contains("experts")) o.grid_experts = g["experts"].get<std::vector<std::size_t>>();
        if (g.contains("lrs")) o.grid_lrs = g["lrs"].get<std::vector<double>>();
    }
}

json options_json(const RunOptions& o) {
    json j = cmos::config_json(o.model);
    j["dataset"] = o.dataset;
    j["out"] = o.out;
    j["split_style"] = o.split_style;
    j["deterministic"] = o.deterministic;
    j["train"] = cmos::train_config_json(o.train);
    j["grid"] = {{"lookbacks", o.grid_lookbacks},
                 {"chunk_sizes", o.grid_chunks},
                 {"experts", o.grid_experts},
                 {"lrs", o.grid_lrs}};
    return j;
}

cmos::SplitSpec resolve_split(const RunOptions& o) {
    if (o.split_style != "auto") return cmos::SplitSpec::by_name(o.split_style);
    const std::string base = fs::path(o.dataset).filename().string();
    return base.rfind("ETT", 0) == 0 ? cmos::SplitSpec::ett() : cmos::SplitSpec::standard();
}

struct Prepared {
    cmos::Dataset data;
    cmos::SplitRanges splits;
    cmos::Config cfg;
    std::string split_style;
    std::vector<std::string> warnings;
};

Prepared prepare(const RunOptions& o) {
    if (o.dataset.empty()) throw std::runtime_error("no dataset given (use --dataset or a config file)");
    Prepared p;
    const cmos::SplitSpec spec = resolve_split(o);
    p.split_style = spec.style;
    p.data = cmos::load_csv(o.dataset);
    p.splits = cmos::split(p.data, spec, o.model.lookback_len, o.model.horizon_len);
    const cmos::ChannelStats stats = cmos::standardize(p.data, p.splits.train);
    for (const std::size_t n : stats.clamped)
        p.warnings.push_back("channel '" + p.data.channel_names[n] +
                             "' is constant on the train split; std clamped to 1");
    p.cfg = o.model;
    p.cfg.channels = p.data.channels;
    cmos::resolve_periodicity(p.cfg, p.data, p.splits.train.length(), &p.warnings);
    p.cfg.validate();
    return p;
}

void write_run_outputs(const RunOptions& o, const Prepared& p, const cmos::MultiSeedResult& ms,
                       const std::string& variant) {
    fs::create_directories(o.out);
    RunOptions echo = o;
    echo.model = p.cfg;
    echo.split_style = p.split_style;
    cmos::write_text_file(o.out + "/config_echo.json", options_json(echo).dump(2) + "\n");
    const json report = cmos::metrics_json(p.data.name, variant, p.cfg, ms);
    cmos::write_text_file(o.out + "/metrics.json", report.dump(2) + "\n");
    for (std::size_t i = 0; i < ms.fits.size(); ++i) {
        const std::string dir = o.out + "/seed_" + std::to_string(ms.runs[i].seed);
        fs::create_directories(dir);
        cmos::write_text_file(dir + "/history.csv", cmos::history_csv(ms.fits[i].history));
        cmos::Checkpoint ck;
        ck.config = p.cfg;
        ck.params = ms.fits[i].params;
        ck.seed = ms.runs[i].seed;
        ck.epoch = ms.fits[i].history.best_epoch;
        ck.val_loss = ms.fits[i].history.best_val_loss;
        cmos::save_checkpoint(dir + "/model.ckpt", ck);
    }
    std::cout << report.dump(2) << std::endl;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_train(const RunOptions& o) {
    Prepared p = prepare(o);
    print_warnings(p.warnings);
    cmos::TrainConfig t = o.train;
    if (o.deterministic) t.threads = 1;
    const cmos::MultiSeedResult ms = cmos::multi_seed(p.data, p.splits, p.cfg, t);
    write_run_outputs(o, p, ms, "full");
    return 0;
}

int cmd_grid(const RunOptions& o) {
    if (o.dataset.empty()) throw std::runtime_error("no dataset given");
    fs::create_directories(o.out);
    const cmos::SplitSpec spec = resolve_split(o);

    std::ofstream cells_csv(o.out + "/grid_results.csv");
    cells_csv << "lookback,chunk_size,experts,lr,val_mse,epochs_run,status\n";
    cells_csv.precision(10);

    struct Cell {
        std::size_t L, S, K;
        double lr;
        double val = 0.0;
    };
    std::optional<Cell> best;

    for (const std::size_t L : o.grid_lookbacks) {
        RunOptions cell_opts = o;
        cell_opts.model.lookback_len = L;
        cmos::Dataset data = cmos::load_csv(o.dataset);
        cmos::SplitRanges splits;
        try {
            splits = cmos::split(data, spec, L, o.model.horizon_len);
        } catch (const std::exception& e) {
            std::cerr << "skip lookback " << L << ": " << e.what() << "\n";
            continue;
        }
        cmos::standardize(data, splits.train);

        for (const std::size_t S : o.grid_chunks) {
            cmos::Config cfg = o.model;
            cfg.lookback_len = L;
            cfg.chunk_size = S;
            cfg.channels = data.channels;
            std::vector<std::string> warnings;
            if (cfg.pi_enabled && !cfg.pi_period) {
                cmos::Config probe = cfg;
                probe.chunk_size = 1;  // estimation itself is chunk-free
                cmos::resolve_periodicity(probe, data, splits.train.length(), &warnings);
                if (probe.pi_period && *probe.pi_period % S != 0) {
                    const std::string why = "period " + std::to_string(*probe.pi_period) +
                                            " not divisible by chunk size";
                    std::cerr << "skip cell L=" << L << " S=" << S << ": " << why << "\n";
                    cells_csv << L << "," << S << ",,,,," << "skipped: " << why << "\n";
                    continue;
                }
                cfg.pi_period = probe.pi_period;
                cfg.pi_enabled = probe.pi_enabled;
            }
            if (L % S != 0 || o.model.horizon_len % S != 0) {
                std::cerr << "skip cell L=" << L << " S=" << S << ": chunk size does not divide\n";
                cells_csv << L << "," << S << ",,,,,skipped: divisibility\n";
                continue;
            }

            for (const std::size_t K : o.grid_experts) {
                cfg.num_experts = K;
                for (const double lr : o.grid_lrs) {
                    cmos::TrainConfig t = o.train;
                    t.lr0 = lr;
                    if (o.deterministic) t.threads = 1;
                    if (!t.patience) t.patience = 10;  // search-phase speedup only
                    const cmos::FitResult fr =
                        cmos::fit(data, splits, cfg, t, t.seeds.front());
                    cells_csv << L << "," << S << "," << K << "," << lr << ","
                              << fr.history.best_val_loss << "," << fr.history.epochs.size()
                              << ",ok\n";
                    cells_csv.flush();
                    if (!best || fr.history.best_val_loss < best->val)
                        best = Cell{L, S, K, lr, fr.history.best_val_loss};
                }
            }
        }
    }
    if (!best) throw std::runtime_error("grid produced no valid cell");

    std::cerr << "grid winner: L=" << best->L << " S=" << best->S << " K=" << best->K
              << " lr=" << best->lr << " (val MSE " << best->val << ")\n";

    RunOptions final_opts = o;
    final_opts.model.lookback_len = best->L;
    final_opts.model.chunk_size = best->S;
    final_opts.model.num_experts = best->K;
    final_opts.train.lr0 = best->lr;
    Prepared p = prepare(final_opts);
    print_warnings(p.warnings);
    cmos::TrainConfig t = final_opts.train;
    if (o.deterministic) t.threads = 1;
    const cmos::MultiSeedResult ms = cmos::multi_seed(p.data, p.splits, p.cfg, t);
    write_run_outputs(final_opts, p, ms, "full");
    return 0;
}

int cmd_evaluate(const RunOptions& o, const std::string& checkpoint) {
    const cmos::Checkpoint ck = cmos::load_checkpoint(checkpoint);
    RunOptions opts = o;
    opts.model = ck.config;
    Prepared p = prepare(opts);
    if (p.cfg.channels != ck.config.channels)
        throw std::runtime_error("checkpoint was trained with " +
                                 std::to_string(ck.config.channels) + " channels, dataset has " +
                                 std::to_string(p.cfg.channels));
    const int threads = o.deterministic ? 1 : o.train.threads;
    const cmos::EvalMetrics m =
        cmos::evaluate(p.data, p.splits.test, ck.params, ck.config, 256, threads);

    json j;
    j["dataset"] = p.data.name;
    j["checkpoint"] = checkpoint;
    j["L"] = ck.config.lookback_len;
    j["H"] = ck.config.horizon_len;
    j["mse"] = m.mse;
    j["mae"] = m.mae;
    j["windows"] = m.windows;
    j["per_step_mse"] = m.per_step_mse;
    j["per_step_mae"] = m.per_step_mae;
    j["param_count"] = cmos::param_count_json(cmos::count_params(ck.config));
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        cmos::write_text_file(o.out + "/eval.json", j.dump(2) + "\n");
    }
    std::cout << j.dump(2) << std::endl;
    return 0;
}

int cmd_ablate(const RunOptions& o, const std::vector<std::string>& variant_names) {
    Prepared p = prepare(o);
    print_warnings(p.warnings);
    cmos::TrainConfig t = o.train;
    if (o.deterministic) t.threads = 1;

    fs::create_directories(o.out);
    std::ofstream summary(o.out + "/ablation_summary.csv");
    summary << "variant,mean_mse,std_mse,mean_mae,std_mae\n";
    summary.precision(10);

    for (const std::string& name : variant_names) {
        const cmos::AblationVariant v = cmos::variant_from_string(name);
        const cmos::AblationOutcome outcome = cmos::run_ablation(p.data, p.splits, p.cfg, t, v);
        const json report = cmos::metrics_json(p.data.name, name, outcome.cfg, outcome.result);
        const std::string dir = o.out + "/ablate_" + name;
        fs::create_directories(dir);
        cmos::write_text_file(dir + "/metrics.json", report.dump(2) + "\n");
        summary << name << "," << outcome.result.mean_mse << "," << outcome.result.std_mse << ","
                << outcome.result.mean_mae << "," << outcome.result.std_mae << "\n";
        summary.flush();
        std::cout << name << ": mse " << outcome.result.mean_mse << " mae "
                  << outcome.result.mean_mae << "\n";
    }
    RunOptions echo = o;
    echo.model = p.cfg;
    cmos::write_text_file(o.out + "/config_echo.json", options_json(echo).dump(2) + "\n");
    return 0;
}

int cmd_period(const RunOptions& o, std::size_t max_lag) {
    if (o.dataset.empty()) throw std::runtime_error("no dataset given");
    const cmos::SplitSpec spec = resolve_split(o);
    cmos::Dataset data = cmos::load_csv(o.dataset);
    const auto train_steps =
        static_cast<std::size_t>(spec.train_ratio * static_cast<double>(data.steps));
    if (max_lag == 0)
        max_lag = std::max<std::size_t>(4, std::min(o.model.lookback_len, data.steps / 4));
    const cmos::PeriodEstimate est = cmos::estimate_period(data, train_steps, max_lag);
    std::cout << "period," << est.period << "\n";
    std::cout << "acf_value," << est.acf_value << "\n";
    std::cout << cmos::period_csv(est);
    return 0;
}

int cmd_synth(const std::string& out_path, const std::string& kind, std::size_t steps,
              std::size_t period, double amplitude, double phase, std::size_t channels,
              double mu, double sigma, const cmos::BurstSpec& burst, std::uint64_t seed) {
    cmos::Dataset ds = cmos::gen_sine(steps, period, amplitude, phase, channels);
    if (kind == "sine") {
        // nothing to add
    } else if (kind == "gaussian") {
        ds = cmos::add_gaussian_noise(ds, mu, sigma, seed);
    } else if (kind == "burst") {
        ds = cmos::add_burst_noise(ds, burst, seed);
    } else {
        throw std::runtime_error("unknown synth kind '" + kind + "' (sine|gaussian|burst)");
    }
    cmos::write_dataset_csv(out_path, ds);
    std::cerr << "wrote " << ds.steps << " steps x " << ds.channels << " channels to " << out_path
              << "\n";
    return 0;
}

int cmd_inspect(const RunOptions& o, const std::string& checkpoint, bool svg) {
    const cmos::Checkpoint ck = cmos::load_checkpoint(checkpoint);
    RunOptions opts = o;
    opts.model = ck.config;
    Prepared p = prepare(opts);
    const int threads = o.deterministic ? 1 : o.train.threads;
    cmos::export_interpretability(o.out, ck.params, ck.config, p.data, p.splits.test, threads, svg);
    std::cerr << "exports written to " << o.out << "\n";
    return 0;
}

int cmd_theorem(std::size_t trials, std::size_t grad_instances) {
    const cmos::TheoremFuzzReport fuzz = cmos::run_theorem_fuzz(trials);
    std::cout << "averaging inequality: " << (fuzz.trials - fuzz.violations) << "/" << fuzz.trials
              << " trials held, " << fuzz.equality_cases << " equality cases, "
              << fuzz.stray_equalities << " stray equalities\n";
    const cmos::GradientCheckReport grad = cmos::run_gradient_check(grad_instances);
    std::cout << "gradient check: max relative error " << grad.max_rel_err << " over "
              << grad.instances << " instances (tolerance 1e-4)\n";
    if (!fuzz.passed || !grad.passed) {
        std::cerr << "theorem/gradient suite FAILED\n";
        return 1;
    }
    std::cout << "all checks passed\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chunk-wise mixture-of-correlations forecasting toolkit"};
    app.require_subcommand(1);

    RunOptions opts;
    std::string config_path;
    std::string checkpoint;
    std::size_t max_lag = 0;
    bool svg = true;
    std::vector<std::string> variants{"full", "no_chunk", "no_cormix", "no_pi"};
    std::size_t theorem_trials = 10000;
    std::size_t grad_instances = 100;
    std::size_t pi_period_flag = 0;  // 0 = not given
    std::size_t patience_flag = 0;   // 0 = not given

    // synth options
    std::string synth_kind = "sine";
    std::string synth_out = "synthetic.csv";
    std::size_t synth_steps = 4000, synth_period = 24, synth_channels = 4;
    double synth_amplitude = 1.0, synth_phase = 0.0, synth_mu = 0.0, synth_sigma = 0.1;
    cmos::BurstSpec burst;
    std::uint64_t synth_seed = 0;

    auto add_common = [&](CLI::App* cmd, bool with_model = true) {
        cmd->add_option("--dataset", opts.dataset, "dataset CSV path");
        cmd->add_option("--config", config_path, "JSON config file (flags override file values)");
        cmd->add_option("--out", opts.out, "output directory");
        cmd->add_option("--split", opts.split_style, "split style: auto|ETT|standard");
        cmd->add_flag("--deterministic", opts.deterministic,
                      "single-threaded bit-reproducible mode");
        if (with_model) {
            cmd->add_option("--lookback", opts.model.lookback_len, "lookback window length L");
            cmd->add_option("--horizon", opts.model.horizon_len, "forecast horizon H");
            cmd->add_option("--chunk-size", opts.model.chunk_size, "chunk size S");
            cmd->add_option("--experts", opts.model.num_experts, "number of correlation matrices K");
            cmd->add_option("--kernel-size", opts.model.kernel_size, "aggregator kernel size c");
            cmd->add_option("--eps", opts.model.eps, "normalization floor");
            cmd->add_flag("--pi,!--no-pi", opts.model.pi_enabled, "periodicity injection");
            cmd->add_flag("--pi-inclusive", opts.model.pi_inclusive,
                          "relax the injection bound to <=");
            cmd->add_option("--pi-period", [&](const std::vector<std::string>& v) {
                opts.model.pi_period = std::stoul(v.front());
                return true;
            }, "explicit injection period");
            cmd->add_option("--seeds", opts.train.seeds, "run seeds")->delimiter(',');
            cmd->add_option("--epochs", opts.train.epochs, "training epochs");
            cmd->add_option("--lr", opts.train.lr0, "initial learning rate");
            cmd->add_option("--batch-size", opts.train.batch_size, "batch size");
            cmd->add_option("--weight-decay", opts.train.weight_decay, "AdamW weight decay");
            cmd->add_option("--patience", [&](const std::vector<std::string>& v) {
                opts.train.patience = std::stoul(v.front());
                return true;
            }, "early-stop patience in epochs");
            cmd->add_option("--threads", opts.train.threads, "worker threads (0 = auto)");
        }
        return cmd;
    };

    CLI::App* train = add_common(app.add_subcommand("train", "train one configuration"));
    CLI::App* grid = add_common(app.add_subcommand(
        "grid", "hyperparameter sweep selected by validation MSE"));
    grid->add_option("--grid-lookbacks", opts.grid_lookbacks, "lookback candidates")->delimiter(',');
    grid->add_option("--grid-chunks", opts.grid_chunks, "chunk size candidates")->delimiter(',');
    grid->add_option("--grid-experts", opts.grid_experts, "expert count candidates")->delimiter(',');
    grid->add_option("--grid-lrs", opts.grid_lrs, "learning rate candidates")->delimiter(',');

    CLI::App* evaluate = add_common(app.add_subcommand("evaluate", "score a checkpoint"), false);
    evaluate->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    evaluate->add_option("--threads", opts.train.threads, "worker threads (0 = auto)");

    CLI::App* ablate = add_common(app.add_subcommand("ablate", "run model variants"));
    ablate->add_option("--variants", variants,
                       "full,no_chunk,no_cormix,no_pi,one_bus,private_line")
        ->delimiter(',');

    CLI::App* period = add_common(app.add_subcommand("period", "dominant period via ACF"), false);
    period->add_option("--max-lag", max_lag, "largest lag to scan (0 = min(L, T/4))");
    period->add_option("--lookback", opts.model.lookback_len, "lookback used for the default lag cap");

    CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    synth->add_option("--out", synth_out, "output CSV path");
    synth->add_option("--kind", synth_kind, "sine|gaussian|burst");
    synth->add_option("--steps", synth_steps, "time steps");
    synth->add_option("--period", synth_period, "sine period");
    synth->add_option("--amplitude", synth_amplitude, "sine amplitude");
    synth->add_option("--phase", synth_phase, "base phase");
    synth->add_option("--channels", synth_channels, "channel count");
    synth->add_option("--mu", synth_mu, "gaussian mean");
    synth->add_option("--sigma", synth_sigma, "gaussian std");
    synth->add_option("--lambda", burst.intensity, "burst intensity per step");
    synth->add_option("--threshold", burst.threshold, "burst threshold u");
    synth->add_option("--gpd-scale", burst.scale, "GPD scale");
    synth->add_option("--xi", burst.shape, "GPD shape");
    synth->add_option("--seed", synth_seed, "noise seed");

    CLI::App* inspect = add_common(app.add_subcommand(
        "inspect", "export correlation matrices and mixing allocations"), false);
    inspect->add_option("--checkpoint", checkpoint, "checkpoint file")->required();
    inspect->add_flag("!--no-svg", svg, "skip SVG heatmaps");

    CLI::App* theorem = app.add_subcommand(
        "theorem", "noise-sensitivity inequality fuzz and gradient checks");
    theorem->add_option("--trials", theorem_trials, "inequality trials");
    theorem->add_option("--grad-instances", grad_instances, "gradient check instances");

    CLI11_PARSE(app, argc, argv);

    try {
        // Flags override config-file values: re-parse the file first, then
        // let CLI11 re-apply the command line on top.
        if (!config_path.empty()) {
            RunOptions from_file;
            apply_config_file(from_file, config_path);
            // Preserve flag-provided values by re-parsing argv over the file's.
            std::swap(opts, from_file);
            app.clear();
            CLI11_PARSE(app, argc, argv);
        }

        if (app.got_subcommand(train)) return cmd_train(opts);
        if (app.got_subcommand(grid)) return cmd_grid(opts);
        if (app.got_subcommand(evaluate)) return cmd_evaluate(opts, checkpoint);
        if (app.got_subcommand(ablate)) return cmd_ablate(opts, variants);
        if (app.got_subcommand(period)) return cmd_period(opts, max_lag);
        if (app.got_subcommand(synth))
            return cmd_synth(synth_out, synth_kind, synth_steps, synth_period, synth_amplitude,
                             synth_phase, synth_channels, synth_mu, synth_sigma, burst, synth_seed);
        if (app.got_subcommand(inspect)) return cmd_inspect(opts, checkpoint, svg);
        if (app.got_subcommand(theorem)) return cmd_theorem(theorem_trials, grad_instances);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
