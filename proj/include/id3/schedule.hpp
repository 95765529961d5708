#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "id3/linalg.hpp"
#include "id3/rng.hpp"

namespace id3 {

// Loss coefficient schedule: 0.5 * (1 - sigmoid(t/T)). Strictly decreasing
// in t, with limit 0.25 at t -> 0+.
double lambda_kappa(double t, double t_max);

// All time-indexed coefficients of the diffusion process. Lists are
// 1-based in t; index [t-1] holds the value for step t.
struct DiffusionSchedule {
    std::size_t T = 0;
    double kappa = 1.0;
    Vec alpha;         // alpha_1..alpha_T
    Vec alpha_bar;     // cumulative products
    Vec sigma_q_sq;    // posterior variances, defined for t = 2..T ([t-2])
    Vec mu;            // denoising weights,   defined for t = 2..T ([t-2])
    Vec lambda_kappa_t;  // (lambda*kappa)_t for t = 1..T
    double guidance_weight = 0.0;  // (sum_{t=2..T} lambda_t) / (T-1)

    double alpha_at(std::size_t t) const;
    double alpha_bar_at(std::size_t t) const;
    double sigma_q_sq_at(std::size_t t) const;  // t in [2, T]
    double mu_at(std::size_t t) const;          // t in [2, T]
    double lambda_kappa_at(std::size_t t) const;
};

// alpha_t interpolates linearly from alpha_max at t = 1 down to alpha_min
// at t = T; every derived list is populated from alpha alone.
DiffusionSchedule build_schedule(std::size_t T, double alpha_min, double alpha_max,
                                 double kappa = 1.0);

// Rebuild every derived coefficient from a stored alpha list.
DiffusionSchedule schedule_from_alpha(Vec alpha, double kappa = 1.0);

// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps, with the drawn eps returned.
std::pair<Vec, Vec> forward_noise(const DiffusionSchedule& schedule, const Vec& x0,
                                  std::size_t t, RngStream& rng);

// Closed-form KL between q(x_T | x0) = N(sqrt(abar_T) x0, (1-abar_T) I)
// and the standard normal prior.
double prior_kl_diagnostic(const DiffusionSchedule& schedule, const Vec& x0);

}  // namespace id3
