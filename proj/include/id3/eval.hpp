#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "id3/datagen.hpp"
#include "id3/sampler.hpp"

namespace id3 {

inline constexpr std::size_t kSimilarityBins = 40;

struct SimilaritySide {
    double mean = 0.0;
    double stddev = 0.0;
    std::size_t pair_count = 0;
    std::array<std::uint64_t, kSimilarityBins> histogram{};  // over [-1, 1]
};

struct SimilarityStats {
    SimilaritySide intra;
    SimilaritySide inter;
    double separation = 0.0;    // intra.mean - inter.mean
    double preservation = 0.0;  // mean cosine(y_target, f(x0))
};

// Embeds every record and accumulates same-identity and cross-identity
// cosine statistics. Pairs are enumerated exactly up to 10^4 records and
// subsampled with a fixed seed beyond that.
SimilarityStats compute_similarity_stats(const ToyWorld& world, const SyntheticDataset& dataset);

// CSV: bin_lo,bin_hi,intra_count,inter_count (40 data rows).
void export_histograms(const SimilarityStats& stats, const std::string& path);

std::string stats_json(const SimilarityStats& stats);

struct GuidancePairConfig {
    SamplerConfig arm_original;  // e.g. guidance weight forced to 0
    SamplerConfig arm_adjusted;  // e.g. schedule default
    std::size_t num_samples = 200;
    std::uint64_t seed = 4242;  // drives targets and the paired chain seeds
    std::size_t bootstrap_resamples = 10000;
    std::uint64_t bootstrap_seed = 9;
    AttrRanges attr_ranges;
};

struct GuidanceReport {
    double mean_original = 0.0;
    double mean_adjusted = 0.0;
    double difference = 0.0;  // adjusted - original
    double ci_lo = 0.0;       // bootstrap 95% interval of the difference
    double ci_hi = 0.0;
    std::size_t num_samples = 0;
};

// Paired-seed comparison of identity preservation under two sampler
// configurations: chain k uses the same target (y, s) and the same noise
// stream in both arms.
GuidanceReport compare_guidance(const DenoiserParams& params, const DiffusionSchedule& schedule,
                                const ToyWorld& world, const GuidancePairConfig& config);

std::string guidance_json(const GuidanceReport& report);

}  // namespace id3
