#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "cmos/params.hpp"

using namespace cmos;

namespace {
std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("checkpoint round trip is bit-exact", "[checkpoint]") {
    Config cfg;
    cfg.lookback_len = 48;
    cfg.horizon_len = 24;
    cfg.chunk_size = 8;
    cfg.num_experts = 3;
    cfg.kernel_size = 6;
    cfg.channels = 2;
    cfg.pi_enabled = true;
    cfg.pi_period = 24;
    cfg.pi_inclusive = true;

    Checkpoint ck;
    ck.config = cfg;
    ck.params = init_params(cfg, 321);
    ck.seed = 321;
    ck.epoch = 17;
    ck.val_loss = 0.123456789012345;

    const std::string path = temp_path("cmos_ckpt_test.bin");
    save_checkpoint(path, ck);
    const Checkpoint back = load_checkpoint(path);

    REQUIRE(back.config.lookback_len == cfg.lookback_len);
    REQUIRE(back.config.horizon_len == cfg.horizon_len);
    REQUIRE(back.config.chunk_size == cfg.chunk_size);
    REQUIRE(back.config.num_experts == cfg.num_experts);
    REQUIRE(back.config.kernel_size == cfg.kernel_size);
    REQUIRE(back.config.channels == cfg.channels);
    REQUIRE(back.config.pi_enabled);
    REQUIRE(back.config.pi_inclusive);
    REQUIRE(back.config.pi_period == cfg.pi_period);
    REQUIRE(back.seed == 321);
    REQUIRE(back.epoch == 17);
    REQUIRE(back.val_loss == ck.val_loss);
    REQUIRE(back.params.flat == ck.params.flat);  // bit-exact
    std::remove(path.c_str());
}

TEST_CASE("checkpoint loader rejects damaged files", "[checkpoint]") {
    Config cfg;
    cfg.lookback_len = 8;
    cfg.horizon_len = 4;
    cfg.chunk_size = 2;
    cfg.num_experts = 1;
    cfg.kernel_size = 2;
    cfg.channels = 1;

    Checkpoint ck;
    ck.config = cfg;
    ck.params = init_params(cfg, 1);

    const std::string path = temp_path("cmos_ckpt_trunc.bin");
    save_checkpoint(path, ck);

    SECTION("truncated parameter block") {
        const auto size = std::filesystem::file_size(path);
        std::filesystem::resize_file(path, size - 9);
        REQUIRE_THROWS_WITH(load_checkpoint(path), Catch::Matchers::ContainsSubstring("truncated"));
    }
    SECTION("missing header") {
        std::ofstream(path, std::ios::trunc) << "\n";
        REQUIRE_THROWS_AS(load_checkpoint(path), std::runtime_error);
    }
    SECTION("unsupported version") {
        std::ofstream(path, std::ios::trunc) << "format_version 99\n\n";
        REQUIRE_THROWS_WITH(load_checkpoint(path), Catch::Matchers::ContainsSubstring("version"));
    }
    std::remove(path.c_str());
}
