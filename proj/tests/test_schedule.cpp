#include <doctest.h>

#include <cmath>

#include "id3/errors.hpp"
#include "id3/schedule.hpp"

using namespace id3;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("every derived schedule quantity is recomputable from alpha alone") {
    DiffusionSchedule s = build_schedule(64, 0.9, 0.995);
    double abar = 1.0;
    for (std::size_t t = 1; t <= s.T; ++t) {
        CHECK(s.alpha_at(t) > 0.0);
        CHECK(s.alpha_at(t) < 1.0);
        abar *= s.alpha_at(t);
        CHECK(std::abs(s.alpha_bar_at(t) - abar) <= 1e-12);
        if (t >= 2) {
            CHECK(s.alpha_bar_at(t) < s.alpha_bar_at(t - 1));
            double sq = (1.0 - s.alpha_at(t)) * (1.0 - s.alpha_bar_at(t - 1)) /
                        (1.0 - s.alpha_bar_at(t));
            CHECK(sq > 0.0);
            CHECK(std::abs(s.sigma_q_sq_at(t) - sq) <= 1e-12);
            double mu = static_cast<double>(s.T - 1) / (2.0 * sq) * s.alpha_bar_at(t - 1) *
                        (1.0 - s.alpha_at(t)) * (1.0 - s.alpha_at(t)) /
                        ((1.0 - s.alpha_bar_at(t)) * (1.0 - s.alpha_bar_at(t)));
            CHECK(mu > 0.0);
            CHECK(std::abs(s.mu_at(t) - mu) / mu <= 1e-12);
        }
    }
    double lambda_sum = 0.0;
    for (std::size_t t = 2; t <= s.T; ++t) lambda_sum += s.lambda_kappa_at(t) / s.kappa;
    CHECK(std::abs(s.guidance_weight - lambda_sum / static_cast<double>(s.T - 1)) <= 1e-12);
}

TEST_CASE("mu_2 for the flat 0.99 schedule matches the hand value") {
    // sigma_q^2(2) = 0.01*0.01/0.0199, ratio = 0.99*0.0001/0.0199^2,
    // mu_2 = 9/(2 sigma_q^2) * ratio = 223.869...
    DiffusionSchedule s = build_schedule(10, 0.99, 0.99);
    CHECK(s.mu_at(2) == doctest::Approx(223.87).epsilon(0.01 / 223.87));

    double sq = 0.01 * 0.01 / 0.0199;
    double ratio = 0.99 * 0.0001 / (0.0199 * 0.0199);
    CHECK(s.mu_at(2) == doctest::Approx(9.0 / (2.0 * sq) * ratio).epsilon(1e-12));
}

TEST_CASE("loss coefficient schedule follows the sigmoid form") {
    CHECK(lambda_kappa(0.0, 100.0) == doctest::Approx(0.25).epsilon(1e-15));

    for (std::size_t T : {10ul, 100ul, 1000ul}) {
        DiffusionSchedule s = build_schedule(T, 0.9, 0.99);
        for (std::size_t t : {std::size_t{1}, T / 2, T}) {
            double expected = 0.5 * (1.0 - sigmoid(static_cast<double>(t) /
                                                   static_cast<double>(T)));
            CHECK(std::abs(s.lambda_kappa_at(t) - expected) <= 1e-12);
        }
        // strictly decreasing in t, inside the stated range
        double lo = 0.5 * (1.0 - sigmoid(1.0));
        double hi = 0.5 * (1.0 - sigmoid(1.0 / static_cast<double>(T)));
        for (std::size_t t = 1; t <= T; ++t) {
            if (t >= 2) CHECK(s.lambda_kappa_at(t) < s.lambda_kappa_at(t - 1));
            CHECK(s.lambda_kappa_at(t) >= lo);
            CHECK(s.lambda_kappa_at(t) < hi + 1e-15);
        }
    }
}

TEST_CASE("guidance weight for T = 1000 matches the numerical mean") {
    DiffusionSchedule s = build_schedule(1000, 0.9, 0.999);
    double mean = 0.0;
    for (int t = 2; t <= 1000; ++t) mean += 0.5 * (1.0 - sigmoid(t / 1000.0));
    mean /= 999.0;
    CHECK(std::abs(s.guidance_weight - mean) <= 1e-12);
    CHECK(s.guidance_weight == doctest::Approx(0.190).epsilon(0.002 / 0.190));

    // kappa rescales lambda_t = (lambda*kappa)_t / kappa
    DiffusionSchedule s2 = build_schedule(1000, 0.9, 0.999, 2.0);
    CHECK(std::abs(s2.guidance_weight - mean / 2.0) <= 1e-12);
}

TEST_CASE("build_schedule validates its arguments") {
    CHECK_THROWS_AS(build_schedule(1, 0.9, 0.99), ConfigError);
    CHECK_THROWS_AS(build_schedule(10, 0.0, 0.99), ConfigError);
    CHECK_THROWS_AS(build_schedule(10, 0.99, 0.9), ConfigError);
    CHECK_THROWS_AS(build_schedule(10, 0.9, 1.0), ConfigError);
    CHECK_THROWS_AS(build_schedule(10, 0.9, 0.99, 0.0), ConfigError);
    CHECK_THROWS_AS(schedule_from_alpha({0.9, 1.5}), ConfigError);
}

TEST_CASE("forward_noise mixes signal and noise with the schedule weights") {
    DiffusionSchedule s = schedule_from_alpha({0.8, 0.8});  // abar_2 = 0.64
    RngStream rng(3);
    Vec x0 = {1.0};
    auto [xt, eps] = forward_noise(s, x0, 2, rng);
    CHECK(xt[0] == doctest::Approx(0.8 * 1.0 + 0.6 * eps[0]).epsilon(1e-12));

    CHECK_THROWS_AS(forward_noise(s, x0, 0, rng), TimeIndexError);
    CHECK_THROWS_AS(forward_noise(s, x0, 3, rng), TimeIndexError);

    // Monte Carlo moment check: mean of x_t within 3 standard errors
    const int draws = 10000;
    double mean = 0.0;
    for (int k = 0; k < draws; ++k) mean += forward_noise(s, x0, 2, rng).first[0] / draws;
    double se = 0.6 / std::sqrt(static_cast<double>(draws));
    CHECK(std::abs(mean - 0.8) <= 3.0 * se);
}

TEST_CASE("prior KL diagnostic matches the closed form") {
    // abar_T = 0.5: KL at x0 = 0 is (-0.5 - ln 0.5)/2 = 0.09657...
    DiffusionSchedule s = schedule_from_alpha({0.625, 0.8});
    CHECK(prior_kl_diagnostic(s, {0.0}) == doctest::Approx(0.0966).epsilon(1e-4 / 0.0966));
    CHECK(prior_kl_diagnostic(s, {0.0}) ==
          doctest::Approx(0.5 * (-0.5 - std::log(0.5))).epsilon(1e-9));

    // monotone in |x0|
    double prev = prior_kl_diagnostic(s, {0.0});
    for (double x : {0.5, 1.0, 2.0, 4.0}) {
        double kl = prior_kl_diagnostic(s, {x});
        CHECK(kl > prev);
        prev = kl;
    }

    // KL -> 0 as abar_T -> 0
    DiffusionSchedule deep = build_schedule(400, 0.9, 0.95);
    CHECK(prior_kl_diagnostic(deep, {2.0}) <= 1e-8);
}
