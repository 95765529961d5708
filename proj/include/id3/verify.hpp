#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "id3/linalg.hpp"
#include "id3/schedule.hpp"

namespace id3 {

enum class DensityId { gaussian_pair, gaussian_mixture };

// One-dimensional analytic test densities:
//   gaussian_pair     p(a|b) = N(a; b, sigma_ab^2),  p(b|a) = N(b; a, sigma_ba^2)
//   gaussian_mixture  p(a|b) = sum_k weight_k N(a; b + mean_k, sigma_k^2),
//                     p(b|a) = N(b; a, sigma_ba^2)
// The adjusted density is p(a|b) p(b|a)^w, quadrature-normalized over the
// grid.
struct AnalyticToy {
    DensityId density_id = DensityId::gaussian_pair;
    double b = 0.0;
    double sigma_ab = 1.0;
    double sigma_ba = 1.0;
    std::vector<double> mix_means;
    std::vector<double> mix_sigmas;
    std::vector<double> mix_weights;
    double w = 1.0;  // adjustment exponent, >= 0
    double grid_lo = -12.0;
    double grid_hi = 12.0;
    std::size_t grid_points = 8193;  // odd, >= 1024
};

struct VerificationReport {
    std::string check_name;
    double max_abs_error = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    std::string details;
};

std::string report_json_line(const VerificationReport& report);

// Normalizability of the adjusted density: quadrature-normalized mass is
// 1, and the unit-variance gaussian_pair case matches the closed-form
// product N(b, 1/(1+w)).
VerificationReport verify_lemma_a1(const AnalyticToy& toy);

// Finite differences of the log adjusted density against the analytic sum
// of the base score and w times the reversed score.
VerificationReport verify_score_decomposition(const AnalyticToy& toy);

// For x0 ~ N(mu0, 1) the x_t-marginal is standard-width Gaussian; the
// clean-sample score formula with the exact posterior-mean denoiser must
// reproduce the marginal score exactly.
VerificationReport verify_tweedie(const DiffusionSchedule& schedule, double mu0, std::size_t t);

struct LossBoundConfig {
    std::size_t T = 50;
    double alpha_min = 0.9;
    double alpha_max = 0.99;
    double kappa = 1.0;
    std::size_t draws = 50;
    std::uint64_t seed = 17;
    double grid_half_width = 10.0;
    std::size_t grid_points = 8193;
};

// Gap between the full loss under the forced perfect denoiser (with the
// parameter-free constant instantiated: vMF normalizers, the Gaussian
// reconstruction normalizer, the prior KL, and log Z by quadrature) and
// the quadrature value of -log of the adjusted likelihood. Non-negative
// when the bound holds.
double loss_bound_gap(const LossBoundConfig& config, const DiffusionSchedule& schedule, double x,
                      double y, double s);

VerificationReport verify_loss_bound(const LossBoundConfig& config);

}  // namespace id3
