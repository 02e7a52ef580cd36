#include <catch2/catch_amalgamated.hpp>

#include <algorithm>

#include "cmos/synth.hpp"
#include "cmos/train.hpp"
#include "helpers.hpp"

using namespace cmos;

namespace {

struct SineProblem {
    Dataset data;
    SplitRanges splits;
    Config cfg;
};

SineProblem periodic_problem(double noise_sigma, bool pi) {
    SineProblem p;
    p.data = gen_sine(1200, 24, 1.0, 0.2, 2);
    if (noise_sigma > 0) p.data = add_gaussian_noise(p.data, 0.0, noise_sigma, 555);
    p.splits = split(p.data, SplitSpec::standard(), 48, 24);
    standardize(p.data, p.splits.train);

    p.cfg.lookback_len = 48;
    p.cfg.horizon_len = 24;
    p.cfg.chunk_size = 8;
    p.cfg.num_experts = 2;
    p.cfg.kernel_size = 8;
    p.cfg.channels = 2;
    p.cfg.pi_enabled = pi;
    if (pi) p.cfg.pi_period = 24;
    return p;
}

}  // namespace

TEST_CASE("training recovers a noiseless periodic signal", "[train]") {
    SineProblem p = periodic_problem(0.0, false);
    TrainConfig t;
    t.lr0 = 5e-3;
    t.epochs = 50;
    t.weight_decay = 0.0;
    t.seeds = {1};
    t.threads = 1;

    const FitResult fr = fit(p.data, p.splits, p.cfg, t, 1);
    const EvalMetrics test = evaluate(p.data, p.splits.test, fr.params, p.cfg, 256, 1);
    INFO("test MSE " << test.mse);
    REQUIRE(test.mse < 0.01);
}

TEST_CASE("zero epochs returns the initialization untouched", "[train]") {
    SineProblem p = periodic_problem(0.1, false);
    TrainConfig t;
    t.epochs = 0;
    const FitResult fr = fit(p.data, p.splits, p.cfg, t, 9);
    REQUIRE(fr.history.epochs.empty());
    REQUIRE(fr.params.flat == init_params(p.cfg, 9).flat);
}

TEST_CASE("identical seeds give bit-identical runs", "[train]") {
    SineProblem p = periodic_problem(0.2, false);
    TrainConfig t;
    t.lr0 = 1e-3;
    t.epochs = 4;
    t.threads = 1;

    const FitResult a = fit(p.data, p.splits, p.cfg, t, 33);
    const FitResult b = fit(p.data, p.splits, p.cfg, t, 33);
    REQUIRE(a.history.best_val_loss == b.history.best_val_loss);
    REQUIRE(a.params.flat == b.params.flat);
    for (std::size_t e = 0; e < a.history.epochs.size(); ++e) {
        REQUIRE(a.history.epochs[e].train_loss == b.history.epochs[e].train_loss);
        REQUIRE(a.history.epochs[e].val_loss == b.history.epochs[e].val_loss);
    }
}

TEST_CASE("loss decreases on a fixed batch for most seeds", "[train]") {
    int passed = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        testutil::TinyInstance t = testutil::random_tiny(seed + 9000);
        TrainConfig tc;
        tc.lr0 = 1e-3;
        tc.weight_decay = 0.0;
        OptimizerState st = OptimizerState::shaped_like(t.params);
        const double initial = loss_and_grad(t.batch, t.params, t.cfg, 1).loss;
        double last = initial;
        for (int step = 0; step < 10; ++step) {
            const LossGrad lg = loss_and_grad(t.batch, t.params, t.cfg, 1);
            adamw_step(t.params, lg.grad, st, 1e-3, tc);
            last = lg.loss;
        }
        if (last < initial) ++passed;
    }
    REQUIRE(passed >= 18);
}

TEST_CASE("checkpoint selection tracks the validation minimum", "[train]") {
    SineProblem p = periodic_problem(0.3, false);
    TrainConfig t;
    t.lr0 = 2e-3;
    t.epochs = 8;
    t.threads = 1;

    const FitResult fr = fit(p.data, p.splits, p.cfg, t, 4);
    double best = fr.history.epochs.front().val_loss;
    std::size_t best_epoch = 0;
    for (const EpochRecord& e : fr.history.epochs)
        if (e.val_loss < best) {
            best = e.val_loss;
            best_epoch = e.epoch;
        }
    REQUIRE(fr.history.best_val_loss == best);
    REQUIRE(fr.history.best_epoch == best_epoch);

    // The returned parameters really are the best-epoch snapshot: retraining
    // for exactly best_epoch+1 epochs reproduces them.
    TrainConfig shorter = t;
    shorter.epochs = fr.history.best_epoch + 1;
    const FitResult again = fit(p.data, p.splits, p.cfg, shorter, 4);
    REQUIRE(again.params.flat == fr.params.flat);
}

TEST_CASE("early stopping halts after patience epochs without improvement", "[train]") {
    SineProblem p = periodic_problem(0.0, false);
    TrainConfig t;
    t.lr0 = 5e-3;
    t.epochs = 60;
    t.patience = 5;
    t.threads = 1;
    const FitResult fr = fit(p.data, p.splits, p.cfg, t, 2);
    REQUIRE(fr.history.epochs.size() < 60);
    REQUIRE(fr.history.epochs.size() >= fr.history.best_epoch + 1);
}

TEST_CASE("multi-seed summary statistics", "[train]") {
    SineProblem p = periodic_problem(0.2, false);
    TrainConfig t;
    t.lr0 = 2e-3;
    t.epochs = 3;
    t.threads = 1;

    SECTION("single seed has zero deviation") {
        t.seeds = {7};
        const MultiSeedResult ms = multi_seed(p.data, p.splits, p.cfg, t);
        REQUIRE(ms.runs.size() == 1);
        REQUIRE(ms.std_mse == 0.0);
        REQUIRE(ms.std_mae == 0.0);
        REQUIRE(ms.mean_mse == ms.runs[0].mse);
    }
    SECTION("two seeds average exactly") {
        t.seeds = {1, 2};
        const MultiSeedResult ms = multi_seed(p.data, p.splits, p.cfg, t);
        REQUIRE(ms.runs.size() == 2);
        REQUIRE(ms.mean_mse == (ms.runs[0].mse + ms.runs[1].mse) / 2.0);
        REQUIRE(ms.mean_mae == (ms.runs[0].mae + ms.runs[1].mae) / 2.0);
    }
}

TEST_CASE("periodicity injection speeds up early validation loss", "[train]") {
    SineProblem with_pi = periodic_problem(0.3, true);
    SineProblem without = periodic_problem(0.3, false);
    TrainConfig t;
    t.lr0 = 1e-3;
    t.epochs = 5;
    t.threads = 1;

    const FitResult a = fit(with_pi.data, with_pi.splits, with_pi.cfg, t, 11);
    const FitResult b = fit(without.data, without.splits, without.cfg, t, 11);
    INFO("epoch-5 val with PI " << a.history.epochs.back().val_loss << " vs "
                                << b.history.epochs.back().val_loss);
    REQUIRE(a.history.epochs.back().val_loss < b.history.epochs.back().val_loss);
}

TEST_CASE("period resolution fills the config from data", "[train]") {
    SineProblem p = periodic_problem(0.0, false);
    Config cfg = p.cfg;
    cfg.pi_enabled = true;

    SECTION("compatible chunk size gets the estimated period") {
        std::vector<std::string> warnings;
        resolve_periodicity(cfg, p.data, p.splits.train.length(), &warnings);
        REQUIRE(cfg.pi_enabled);
        REQUIRE(cfg.pi_period == 24);
        REQUIRE(warnings.empty());
    }
    SECTION("incompatible chunk size disables injection with a warning") {
        // Period 12 data with the default chunk size 8: 12 % 8 != 0.
        Dataset odd = gen_sine(1200, 12, 1.0, 0.0, 1);
        const SplitRanges sp = split(odd, SplitSpec::standard(), 48, 24);
        standardize(odd, sp.train);
        Config c2 = p.cfg;
        c2.channels = 1;
        c2.pi_enabled = true;
        std::vector<std::string> warnings;
        resolve_periodicity(c2, odd, sp.train.length(), &warnings);
        REQUIRE_FALSE(c2.pi_enabled);
        REQUIRE_FALSE(warnings.empty());
    }
}

TEST_CASE("divergent training reports epoch and batch", "[train]") {
    SineProblem p = periodic_problem(0.0, false);
    TrainConfig t;
    t.lr0 = 1e160;  // absurd on purpose
    t.epochs = 2;
    t.threads = 1;
    REQUIRE_THROWS_WITH(fit(p.data, p.splits, p.cfg, t, 1),
                        Catch::Matchers::ContainsSubstring("diverged"));
}
