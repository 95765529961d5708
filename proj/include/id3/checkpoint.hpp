#pragma once

#include <cstdint>
#include <string>

#include "id3/denoiser.hpp"
#include "id3/schedule.hpp"
#include "id3/toyworld.hpp"

namespace id3 {

// Binary checkpoint, little-endian:
//   magic "ID3W" | u32 version
//   u32 n, d, m_a, k_time, hidden1, hidden2, T
//   f64 alpha[T]
//   f64 A[n*d], B[n*m_a], W[d*n], V[m_a*n]   (row-major)
//   f64 theta[param_count]
struct Checkpoint {
    ToyWorld world;  // matrices only; noise_sigma and seed are not persisted
    Vec alpha;
    DenoiserParams params;

    DiffusionSchedule schedule(double kappa = 1.0) const {
        return schedule_from_alpha(alpha, kappa);
    }
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_checkpoint(const std::string& path, const ToyWorld& world,
                      const DiffusionSchedule& schedule, const DenoiserParams& params);

Checkpoint read_checkpoint(const std::string& path);

// FNV-1a over a file's bytes; used for dataset provenance.
std::uint64_t fnv1a64_file(const std::string& path);

std::string to_hex(std::uint64_t value);

}  // namespace id3
