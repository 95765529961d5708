#include "id3/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace id3 {

Vec conditional_score_from_xhat(const DiffusionSchedule& schedule, const Vec& x_t, std::size_t t,
                                const Vec& x_hat0) {
    if (x_hat0.size() != x_t.size())
        throw DimensionMismatchError("conditional_score: estimate dimension mismatch");
    double ab = schedule.alpha_bar_at(t);
    double root_ab = std::sqrt(ab);
    double denom = 1.0 - ab;
    Vec score(x_t.size());
    for (std::size_t i = 0; i < x_t.size(); ++i)
        score[i] = (root_ab * x_hat0[i] - x_t[i]) / denom;
    return score;
}

Vec conditional_score(const DenoiserParams& params, const DiffusionSchedule& schedule,
                      const Vec& x_t, std::size_t t, const UnitVector& y,
                      const AttributeVector& s) {
    Vec x_hat0 = denoise(params, schedule, x_t, t, y, s);
    return conditional_score_from_xhat(schedule, x_t, t, x_hat0);
}

Vec reversed_score(const ToyWorld& world, const Vec& x_t, const UnitVector& y,
                   const AttributeVector& s, double kappa, bool attr_guidance, bool* degenerate) {
    if (degenerate) *degenerate = false;
    Vec score(x_t.size(), 0.0);
    try {
        Vec jf = embed_jacobian_vector(world, x_t, y);
        axpy(kappa, jf, score);
    } catch (const ZeroNormError&) {
        if (degenerate) *degenerate = true;
        return Vec(x_t.size(), 0.0);
    }
    if (attr_guidance) {
        Vec ja = attribute_score(world, x_t, s);
        axpy(kappa, ja, score);
    }
    return score;
}

Vec adjusted_score(const DenoiserParams& params, const DiffusionSchedule& schedule,
                   const ToyWorld& world, const Vec& x_t, std::size_t t, const UnitVector& y,
                   const AttributeVector& s, const SamplerConfig& config) {
    Vec score = conditional_score(params, schedule, x_t, t, y, s);
    double w = config.guidance_weight_override.value_or(schedule.guidance_weight);
    if (w != 0.0) {
        Vec basis = x_t;
        if (config.reversed_at_xhat) basis = denoise(params, schedule, x_t, t, y, s);
        Vec rev = reversed_score(world, basis, y, s, config.kappa, config.attr_guidance);
        axpy(w, rev, score);
    }
    return score;
}

Vec langevin_step(const Vec& x, const Vec& score, double gamma, RngStream& rng) {
    if (score.size() != x.size())
        throw DimensionMismatchError("langevin_step: score dimension mismatch");
    Vec next(x.size());
    double noise_scale = std::sqrt(2.0 * gamma);
    for (std::size_t i = 0; i < x.size(); ++i)
        next[i] = x[i] + gamma * score[i] + noise_scale * rng.normal();
    return next;
}

namespace {

double cosine_to_target(const ToyWorld& world, const Vec& x, const UnitVector& y) {
    try {
        double c = cosine(embed(world, x), y);
        return std::clamp(c, -1.0, 1.0);
    } catch (const ZeroNormError&) {
        return 0.0;
    }
}

}  // namespace

SampleResult sample(const DenoiserParams& params, const DiffusionSchedule& schedule,
                    const ToyWorld& world, const UnitVector& y, const AttributeVector& s,
                    const SamplerConfig& config) {
    if (!(config.gamma > 0.0))
        throw ConfigError("sample: gamma must be positive");
    if (!(config.kappa > 0.0))
        throw ConfigError("sample: kappa must be positive");

    RngStream rng(config.seed);
    Vec x(params.n);
    for (auto& v : x) v = rng.normal();

    SampleResult result;
    double ab_T = schedule.alpha_bar.back();

    for (std::size_t t = schedule.T; t >= 1; --t) {
        Vec score = adjusted_score(params, schedule, world, x, t, y, s, config);
        double gamma = config.gamma;
        if (config.gamma_mode == GammaMode::snr_scaled)
            gamma *= (1.0 - schedule.alpha_bar_at(t)) / (1.0 - ab_T);
        if (config.record_trajectory)
            result.trajectory.states.push_back(
                {t, x, norm2(score), cosine_to_target(world, x, y)});
        x = langevin_step(x, score, gamma, rng);
        if (!all_finite(x)) {
            if (config.record_trajectory)
                result.trajectory.states.push_back({t - 1, x, 0.0, 0.0});
            throw SamplingError("sample: non-finite state at t=" + std::to_string(t),
                                std::move(result.trajectory));
        }
    }
    if (config.record_trajectory)
        result.trajectory.states.push_back({0, x, 0.0, cosine_to_target(world, x, y)});
    result.x0 = std::move(x);
    return result;
}

void write_trajectory_csv(const Trajectory& trajectory, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("write_trajectory_csv: cannot open " + path);
    std::size_t dim = trajectory.states.empty() ? 0 : trajectory.states.front().x.size();
    out << "t";
    for (std::size_t i = 0; i < dim; ++i) out << ",x_" << i;
    out << ",score_norm,cosine_to_target\n";
    char buf[32];
    for (const auto& p : trajectory.states) {
        out << p.t;
        for (double v : p.x) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << ',' << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", p.score_norm);
        out << ',' << buf;
        std::snprintf(buf, sizeof buf, "%.17g", p.cosine_to_target);
        out << ',' << buf << '\n';
    }
    if (!out)
        throw IoError("write_trajectory_csv: write failed for " + path);
}

}  // namespace id3
