#include "id3/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace id3 {

namespace {

constexpr std::size_t kExactPairLimit = 10000;
constexpr std::size_t kSubsampledPairs = 200000;

struct SideAccumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;
    std::array<std::uint64_t, kSimilarityBins> histogram{};

    void add(double c) {
        c = std::clamp(c, -1.0, 1.0);
        sum += c;
        sum_sq += c * c;
        ++count;
        auto bin = static_cast<std::size_t>((c + 1.0) / 2.0 * kSimilarityBins);
        if (bin >= kSimilarityBins) bin = kSimilarityBins - 1;
        ++histogram[bin];
    }

    SimilaritySide finish() const {
        SimilaritySide side;
        side.pair_count = count;
        side.histogram = histogram;
        if (count > 0) {
            side.mean = sum / static_cast<double>(count);
            double var = sum_sq / static_cast<double>(count) - side.mean * side.mean;
            side.stddev = std::sqrt(std::max(0.0, var));
        }
        return side;
    }
};

}  // namespace

SimilarityStats compute_similarity_stats(const ToyWorld& world, const SyntheticDataset& dataset) {
    if (dataset.records.empty())
        throw EmptyDatasetError("compute_similarity_stats: dataset has no records");

    const std::size_t count = dataset.records.size();
    std::vector<UnitVector> emb;
    emb.reserve(count);
    double preservation = 0.0;
    for (const auto& rec : dataset.records) {
        UnitVector e = embed(world, rec.x0);
        preservation += cosine(e, rec.y);
        emb.push_back(std::move(e));
    }
    preservation /= static_cast<double>(count);

    SideAccumulator intra, inter;
    if (count <= kExactPairLimit) {
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t j = i + 1; j < count; ++j) {
                double c = cosine(emb[i], emb[j]);
                if (dataset.records[i].identity_index == dataset.records[j].identity_index)
                    intra.add(c);
                else
                    inter.add(c);
            }
    } else {
        RngStream rng(0xEA7u);
        for (std::size_t k = 0; k < kSubsampledPairs; ++k) {
            std::size_t i = rng.uniform_int(0, count - 1);
            std::size_t j = rng.uniform_int(0, count - 2);
            if (j >= i) ++j;
            double c = cosine(emb[i], emb[j]);
            if (dataset.records[i].identity_index == dataset.records[j].identity_index)
                intra.add(c);
            else
                inter.add(c);
        }
    }

    SimilarityStats stats;
    stats.intra = intra.finish();
    stats.inter = inter.finish();
    stats.separation = stats.intra.mean - stats.inter.mean;
    stats.preservation = preservation;
    return stats;
}

void export_histograms(const SimilarityStats& stats, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("export_histograms: cannot open " + path);
    out << "bin_lo,bin_hi,intra_count,inter_count\n";
    char lo_buf[32], hi_buf[32];
    for (std::size_t b = 0; b < kSimilarityBins; ++b) {
        double lo = -1.0 + 2.0 * static_cast<double>(b) / kSimilarityBins;
        double hi = -1.0 + 2.0 * static_cast<double>(b + 1) / kSimilarityBins;
        std::snprintf(lo_buf, sizeof lo_buf, "%.17g", lo);
        std::snprintf(hi_buf, sizeof hi_buf, "%.17g", hi);
        out << lo_buf << ',' << hi_buf << ',' << stats.intra.histogram[b] << ','
            << stats.inter.histogram[b] << '\n';
    }
    if (!out)
        throw IoError("export_histograms: write failed for " + path);
}

std::string stats_json(const SimilarityStats& stats) {
    nlohmann::json j = {
        {"intra",
         {{"mean", stats.intra.mean},
          {"std", stats.intra.stddev},
          {"pair_count", stats.intra.pair_count}}},
        {"inter",
         {{"mean", stats.inter.mean},
          {"std", stats.inter.stddev},
          {"pair_count", stats.inter.pair_count}}},
        {"separation", stats.separation},
        {"preservation", stats.preservation},
    };
    return j.dump(2);
}

GuidanceReport compare_guidance(const DenoiserParams& params, const DiffusionSchedule& schedule,
                                const ToyWorld& world, const GuidancePairConfig& config) {
    if (config.num_samples == 0)
        throw ConfigError("compare_guidance: num_samples must be positive");

    std::vector<double> diff(config.num_samples);
    double sum_orig = 0.0, sum_adj = 0.0;

    for (std::size_t k = 0; k < config.num_samples; ++k) {
        RngStream target_rng(substream_seed(config.seed, k));
        UnitVector y = sample_uniform_sphere(world.d, target_rng);
        const AttrRanges& r = config.attr_ranges;
        AttributeVector s(target_rng.uniform(r.age_lo, r.age_hi),
                          target_rng.uniform(r.pose_lo[0], r.pose_hi[0]),
                          target_rng.uniform(r.pose_lo[1], r.pose_hi[1]),
                          target_rng.uniform(r.pose_lo[2], r.pose_hi[2]));
        std::uint64_t chain_seed = target_rng.next_u64();

        auto preservation = [&](SamplerConfig arm) {
            arm.seed = chain_seed;
            arm.record_trajectory = false;
            Vec x0 = sample(params, schedule, world, y, s, arm).x0;
            try {
                return cosine(embed(world, x0), y);
            } catch (const ZeroNormError&) {
                return 0.0;
            }
        };
        double p_orig = preservation(config.arm_original);
        double p_adj = preservation(config.arm_adjusted);
        sum_orig += p_orig;
        sum_adj += p_adj;
        diff[k] = p_adj - p_orig;
    }

    GuidanceReport rep;
    rep.num_samples = config.num_samples;
    rep.mean_original = sum_orig / static_cast<double>(config.num_samples);
    rep.mean_adjusted = sum_adj / static_cast<double>(config.num_samples);
    rep.difference = rep.mean_adjusted - rep.mean_original;

    // Percentile bootstrap over the paired differences.
    RngStream boot_rng(config.bootstrap_seed);
    std::vector<double> means(config.bootstrap_resamples);
    for (auto& m : means) {
        double s = 0.0;
        for (std::size_t k = 0; k < diff.size(); ++k)
            s += diff[boot_rng.uniform_int(0, diff.size() - 1)];
        m = s / static_cast<double>(diff.size());
    }
    std::sort(means.begin(), means.end());
    auto pick = [&](double q) {
        double pos = q * static_cast<double>(means.size() - 1);
        return means[static_cast<std::size_t>(pos + 0.5)];
    };
    rep.ci_lo = pick(0.025);
    rep.ci_hi = pick(0.975);
    return rep;
}

std::string guidance_json(const GuidanceReport& report) {
    nlohmann::json j = {
        {"mean_original", report.mean_original},
        {"mean_adjusted", report.mean_adjusted},
        {"difference", report.difference},
        {"ci95_lo", report.ci_lo},
        {"ci95_hi", report.ci_hi},
        {"num_samples", report.num_samples},
    };
    return j.dump(2);
}

}  // namespace id3
