#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "id3/denoiser.hpp"
#include "id3/errors.hpp"
#include "id3/linalg.hpp"
#include "id3/rng.hpp"
#include "id3/schedule.hpp"
#include "id3/toyworld.hpp"

namespace id3 {

enum class GammaMode { constant, snr_scaled };

struct SamplerConfig {
    double gamma = 0.01;
    GammaMode gamma_mode = GammaMode::constant;
    std::optional<double> guidance_weight_override;
    bool attr_guidance = false;
    double kappa = 1.0;
    std::uint64_t seed = 0;
    bool record_trajectory = false;
    // Off by default: the guidance field is evaluated at the noisy state.
    bool reversed_at_xhat = false;
};

struct TrajectoryPoint {
    std::size_t t;
    Vec x;
    double score_norm;
    double cosine_to_target;
};

struct Trajectory {
    std::vector<TrajectoryPoint> states;
};

struct SamplingError : NumericalError {
    SamplingError(const std::string& msg, Trajectory traj)
        : NumericalError(msg), trajectory(std::move(traj)) {}
    Trajectory trajectory;
};

// grad log p(x_t | y, s) recovered from a clean-sample estimate:
// (sqrt(abar_t) x_hat0 - x_t) / (1 - abar_t).
Vec conditional_score_from_xhat(const DiffusionSchedule& schedule, const Vec& x_t, std::size_t t,
                                const Vec& x_hat0);

Vec conditional_score(const DenoiserParams& params, const DiffusionSchedule& schedule,
                      const Vec& x_t, std::size_t t, const UnitVector& y,
                      const AttributeVector& s);

// grad log p(y, s | x_t) = kappa y' grad f(x_t) (+ attribute part when
// enabled). A degenerate embedder input yields a zero vector and sets the
// flag instead of aborting the chain.
Vec reversed_score(const ToyWorld& world, const Vec& x_t, const UnitVector& y,
                   const AttributeVector& s, double kappa, bool attr_guidance,
                   bool* degenerate = nullptr);

// conditional + w * reversed, w defaulting to the schedule's guidance weight.
Vec adjusted_score(const DenoiserParams& params, const DiffusionSchedule& schedule,
                   const ToyWorld& world, const Vec& x_t, std::size_t t, const UnitVector& y,
                   const AttributeVector& s, const SamplerConfig& config);

// x + gamma * score + sqrt(2 gamma) eps
Vec langevin_step(const Vec& x, const Vec& score, double gamma, RngStream& rng);

struct SampleResult {
    Vec x0;
    Trajectory trajectory;  // populated when record_trajectory is set
};

// Draws x_T ~ N(0, I) and runs the adjusted-score Langevin update from
// t = T down to 1. Deterministic given config.seed.
SampleResult sample(const DenoiserParams& params, const DiffusionSchedule& schedule,
                    const ToyWorld& world, const UnitVector& y, const AttributeVector& s,
                    const SamplerConfig& config);

void write_trajectory_csv(const Trajectory& trajectory, const std::string& path);

}  // namespace id3
