#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "id3/config.hpp"
#include "id3/errors.hpp"

using namespace id3;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("id3_cfg_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("defaults load and dump round trips") {
    RunConfig cfg = load_config("", {});
    CHECK(cfg.world.d == 2);
    CHECK(cfg.schedule.T == 50);
    CHECK(cfg.sampler.gamma == 0.01);
    CHECK(cfg.datagen.N == 8);

    TempDir tmp;
    std::string p = tmp.file("cfg.json");
    std::ofstream(p) << dump_config(cfg);
    RunConfig again = load_config(p, {});
    CHECK(dump_config(again) == dump_config(cfg));
}

TEST_CASE("file values and --set overrides land with the right precedence") {
    TempDir tmp;
    std::string p = tmp.file("cfg.json");
    std::ofstream(p) << R"({"schedule": {"T": 80}, "train": {"steps": 5}})";

    RunConfig cfg = load_config(p, {});
    CHECK(cfg.schedule.T == 80);
    CHECK(cfg.train.steps == 5);

    cfg = load_config(p, {"schedule.T=120", "sampler.gamma=0.5", "paths.reports=elsewhere"});
    CHECK(cfg.schedule.T == 120);
    CHECK(cfg.sampler.gamma == 0.5);
    CHECK(cfg.paths.reports == "elsewhere");
}

TEST_CASE("unknown keys are rejected with their full path") {
    TempDir tmp;
    std::string p = tmp.file("cfg.json");
    std::ofstream(p) << R"({"train": {"stepz": 5}})";
    try {
        load_config(p, {});
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("train.stepz") != std::string::npos);
    }
    CHECK_THROWS_AS(load_config("", {"nope.key=1"}), ConfigError);
}

TEST_CASE("invalid values are rejected at load") {
    CHECK_THROWS_AS(load_config("", {"train.lr=NaN"}), ConfigError);
    CHECK_THROWS_AS(load_config("", {"train.lr=-0.5"}), ConfigError);
    CHECK_THROWS_AS(load_config("", {"schedule.alpha_max=1.5"}), ConfigError);
    CHECK_THROWS_AS(load_config("", {"schedule.T=1"}), ConfigError);
    CHECK_THROWS_AS(load_config("", {"datagen.lb=0.9", "datagen.ub=0.7"}), ConfigError);
    CHECK_THROWS_AS(load_config("", {"sampler.gamma_mode=warp"}), ConfigError);
    CHECK_THROWS_AS(load_config("", {"datagen.workers=0"}), ConfigError);
    CHECK_THROWS_AS(load_config("missing_file.json", {}), ConfigError);

    TempDir tmp;
    std::string p = tmp.file("bad.json");
    std::ofstream(p) << "{ not json";
    CHECK_THROWS_AS(load_config(p, {}), ConfigError);

    std::string betas = tmp.file("betas.json");
    std::ofstream(betas) << R"({"train": {"betas": [0.9]}})";
    CHECK_THROWS_AS(load_config(betas, {}), ConfigError);
}

TEST_CASE("the seed environment variable overrides every configured seed") {
    ::setenv("ID3_SEED", "31415", 1);
    RunConfig cfg = load_config("", {"train.seed=1", "world.seed=2"});
    ::unsetenv("ID3_SEED");
    CHECK(cfg.seed_env_applied);
    CHECK(cfg.world.seed == 31415);
    CHECK(cfg.train.seed == 31415);
    CHECK(cfg.sampler.seed == 31415);
    CHECK(cfg.datagen.master_seed == 31415);

    ::setenv("ID3_SEED", "not-a-number", 1);
    CHECK_THROWS_AS(load_config("", {}), ConfigError);
    ::unsetenv("ID3_SEED");
}

TEST_CASE("derived module configs mirror the run config") {
    RunConfig cfg = load_config("", {"sampler.gamma_mode=snr_scaled",
                                     "sampler.guidance_weight_override=0.3",
                                     "datagen.workers=3"});
    SamplerConfig sc = cfg.sampler_config();
    CHECK(sc.gamma_mode == GammaMode::snr_scaled);
    REQUIRE(sc.guidance_weight_override.has_value());
    CHECK(*sc.guidance_weight_override == 0.3);

    DatasetConfig dc = cfg.dataset_config();
    CHECK(dc.workers == 3);
    CHECK(dc.sampler.gamma == cfg.sampler.gamma);

    TrainConfig tc = cfg.train_config();
    CHECK(tc.adam.lr == cfg.train.lr);
    CHECK(tc.batch == cfg.train.batch);
}
