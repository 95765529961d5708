#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "id3/diffusion.hpp"
#include "id3/errors.hpp"
#include "id3/sampler.hpp"
#include "id3/sphere.hpp"
#include "id3/toyworld.hpp"

namespace id3 {

struct AttrRanges {
    double age_lo = 0.0;
    double age_hi = 100.0;
    double pose_lo[3] = {-60.0, -60.0, -60.0};
    double pose_hi[3] = {60.0, 60.0, 60.0};
};

struct DatasetConfig {
    std::size_t N = 8;   // identities
    std::size_t m = 5;   // samples per identity
    double lb = 0.5;     // target-similarity bounds, 0 <= lb < ub <= 1
    double ub = 0.7;
    AttrRanges attr_ranges;
    std::uint64_t master_seed = 2024;
    std::size_t workers = 1;
    TammesConfig tammes;
    SamplerConfig sampler;  // per-chain seeds are derived, not taken from here
};

struct DatasetRecord {
    std::size_t identity_index = 0;
    std::size_t sample_index = 0;
    Vec x0;
    UnitVector y;
    AttributeVector s;
    double nu = 0.0;  // drawn target similarity to the identity anchor
};

struct DatasetProvenance {
    double anchor_max_pairwise_cosine = 0.0;
    std::size_t N = 0;
    std::size_t m = 0;
    double lb = 0.0;
    double ub = 0.0;
    std::uint64_t master_seed = 0;
    std::string checkpoint_hash;  // hex FNV-1a of the checkpoint bytes
};

struct SyntheticDataset {
    std::size_t n = 0;  // data dimension
    std::size_t d = 0;  // identity embedding dimension
    std::vector<DatasetRecord> records;
    DatasetProvenance provenance;
};

// Mid-run failure carrying everything generated so far.
struct PartialResultError : Error {
    PartialResultError(const std::string& msg, SyntheticDataset done)
        : Error(msg), partial(std::move(done)) {}
    SyntheticDataset partial;
};

// Anchors via the sphere solver, per-identity similarity draws and
// perturbations, per-sample attribute draws and one sampling chain each.
// Deterministic for a fixed master seed regardless of worker count.
SyntheticDataset generate_dataset(const DenoiserParams& params, const DiffusionSchedule& schedule,
                                  const ToyWorld& world, const DatasetConfig& config,
                                  const std::string& checkpoint_hash = "");

// CSV with the fixed header
//   id,sample,age,pose_yaw,pose_pitch,pose_roll,nu,y_0..y_{d-1},x_0..x_{n-1}
// and full f64 text precision, plus a <path>.meta.json provenance sidecar.
void write_dataset(const SyntheticDataset& dataset, const std::string& path);

SyntheticDataset read_dataset(const std::string& path);

}  // namespace id3
