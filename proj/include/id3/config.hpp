#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "id3/datagen.hpp"
#include "id3/diffusion.hpp"
#include "id3/sampler.hpp"

namespace id3 {

// Whole-run configuration: JSON file, overridden by --set flags, over
// built-in defaults. Every constraint of the owning module is validated
// at load; unknown keys are rejected with their path.
struct RunConfig {
    struct World {
        std::size_t n = 6;
        std::size_t d = 2;
        std::size_t m_a = 4;
        double noise_sigma = 0.05;
        std::uint64_t seed = 1234;
    } world;

    struct Schedule {
        std::size_t T = 50;
        double alpha_min = 0.9;
        double alpha_max = 0.99;
    } schedule;

    struct Train {
        std::size_t steps = 4000;
        std::size_t batch = 16;
        double lr = 1e-3;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
        std::uint64_t seed = 7;
        bool w_attr = false;
        std::size_t hidden1 = 48;
        std::size_t hidden2 = 48;
        std::size_t k_time = 8;
    } train;

    struct Sampler {
        double gamma = 0.01;
        std::string gamma_mode = "constant";  // or "snr_scaled"
        double kappa = 1.0;
        std::optional<double> guidance_weight_override;
        bool attr_guidance = false;
        std::uint64_t seed = 99;
    } sampler;

    struct Datagen {
        std::size_t N = 8;
        std::size_t m = 5;
        double lb = 0.5;
        double ub = 0.7;
        AttrRanges attr_ranges;
        std::uint64_t master_seed = 2024;
        std::size_t workers = 1;
    } datagen;

    struct Paths {
        std::string checkpoint = "out/checkpoint.id3w";
        std::string dataset = "out/dataset.csv";
        std::string reports = "out";
    } paths;

    bool seed_env_applied = false;  // ID3_SEED was honored

    TrainConfig train_config() const;
    SamplerConfig sampler_config() const;
    DatasetConfig dataset_config() const;
};

RunConfig default_config();

// file path may be empty (defaults only); overrides are "section.key=value"
// strings. The ID3_SEED environment variable, when set, replaces every
// seed in the config.
RunConfig load_config(const std::string& file, const std::vector<std::string>& overrides);

std::string dump_config(const RunConfig& config);

}  // namespace id3
