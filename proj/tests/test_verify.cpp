#include <doctest.h>

#include <cmath>
#include <limits>

#include "id3/errors.hpp"
#include "id3/verify.hpp"

using namespace id3;

namespace {

constexpr double kPi = 3.14159265358979323846;

double gauss_pdf(double x, double mean, double sigma) {
    double z = (x - mean) / sigma;
    return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2.0 * kPi));
}

}  // namespace

TEST_CASE("lemma a1: the adjusted gaussian pair reduces to the product gaussian") {
    AnalyticToy toy;
    toy.w = 1.0;  // N(b, 1/2)
    VerificationReport rep = verify_lemma_a1(toy);
    CHECK(rep.passed);
    CHECK(rep.max_abs_error < 1e-6);

    toy.w = 2.0;  // N(b, 1/3): product of three unit gaussians at b
    rep = verify_lemma_a1(toy);
    CHECK(rep.passed);

    toy.w = 0.0;  // exponent zero leaves the base density untouched
    rep = verify_lemma_a1(toy);
    CHECK(rep.passed);

    toy.b = 1.5;
    toy.w = 1.0;
    rep = verify_lemma_a1(toy);
    CHECK(rep.passed);
}

TEST_CASE("lemma a1 holds for a gaussian mixture base density") {
    AnalyticToy toy;
    toy.density_id = DensityId::gaussian_mixture;
    toy.mix_means = {-1.0, 1.5};
    toy.mix_sigmas = {0.8, 0.6};
    toy.mix_weights = {0.3, 0.7};
    toy.w = 0.7;
    toy.grid_lo = -16.0;
    toy.grid_hi = 16.0;
    toy.grid_points = 16385;
    VerificationReport rep = verify_lemma_a1(toy);
    CHECK(rep.passed);
}

TEST_CASE("a coarse grid is rejected before any check is trusted") {
    AnalyticToy toy;
    toy.grid_lo = -200.0;
    toy.grid_hi = 200.0;
    toy.grid_points = 1025;
    CHECK_THROWS_AS(verify_lemma_a1(toy), GridTooCoarseError);

    AnalyticToy tight;
    tight.grid_lo = -4.0;  // under eight standard deviations
    tight.grid_hi = 4.0;
    CHECK_THROWS_AS(verify_lemma_a1(tight), ConfigError);

    AnalyticToy few;
    few.grid_points = 512;
    CHECK_THROWS_AS(verify_lemma_a1(few), ConfigError);
}

TEST_CASE("score decomposition: finite differences match the analytic sum") {
    AnalyticToy toy;
    toy.w = 1.0;
    VerificationReport rep = verify_score_decomposition(toy);
    CHECK(rep.passed);
    CHECK(rep.max_abs_error < 1e-5);

    toy.w = 0.0;
    rep = verify_score_decomposition(toy);
    CHECK(rep.passed);

    AnalyticToy mix;
    mix.density_id = DensityId::gaussian_mixture;
    mix.mix_means = {-0.8, 0.9};
    mix.mix_sigmas = {0.9, 1.1};
    mix.mix_weights = {0.5, 0.5};
    mix.w = 1.3;
    mix.grid_lo = -16.0;
    mix.grid_hi = 16.0;
    mix.grid_points = 16385;
    rep = verify_score_decomposition(mix);
    CHECK(rep.passed);
}

TEST_CASE("score decomposition hand value: adjusted gaussian score at unit offset") {
    // for the unit pair with w = 1 the adjusted density is N(b, 1/2), so
    // the score at a = b + 1 is -2
    AnalyticToy toy;
    toy.w = 1.0;
    double a = toy.b + 1.0;
    double analytic = -(a - toy.b) * (1.0 + toy.w);
    CHECK(analytic == doctest::Approx(-2.0));
    VerificationReport rep = verify_score_decomposition(toy);
    CHECK(rep.passed);
}

TEST_CASE("tweedie identity is exact for every step index") {
    DiffusionSchedule s = build_schedule(25, 0.9, 0.995);
    for (std::size_t t = 1; t <= s.T; ++t) {
        VerificationReport rep = verify_tweedie(s, 0.7, t);
        CHECK(rep.passed);
        CHECK(rep.max_abs_error < 1e-9);
    }
    VerificationReport at_mode = verify_tweedie(s, 0.0, 10);
    CHECK(at_mode.passed);
}

TEST_CASE("loss bound: no violation across draws, gap equals the prior kl") {
    LossBoundConfig cfg;
    VerificationReport rep = verify_loss_bound(cfg);
    CHECK(rep.passed);
    CHECK(rep.max_abs_error <= 1e-6);

    DiffusionSchedule schedule = build_schedule(cfg.T, cfg.alpha_min, cfg.alpha_max);
    double x = 0.8, y = 1.0, s = -0.4;
    double gap = loss_bound_gap(cfg, schedule, x, y, s);
    CHECK(gap >= 0.0);
    CHECK(gap == doctest::Approx(prior_kl_diagnostic(schedule, {x})).epsilon(1e-8));
}

TEST_CASE("loss bound gap shrinks monotonically as T grows") {
    double x = 1.1, y = -1.0, s = 0.3;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t T : {10ul, 50ul, 250ul}) {
        LossBoundConfig cfg;
        cfg.T = T;
        DiffusionSchedule schedule = build_schedule(T, cfg.alpha_min, cfg.alpha_max);
        double gap = loss_bound_gap(cfg, schedule, x, y, s);
        CHECK(gap >= -1e-6);
        CHECK(gap < prev);
        prev = gap;
    }
}

TEST_CASE("loss bound with guidance off reduces to the classical elbo check") {
    LossBoundConfig cfg;
    cfg.kappa = 0.0;
    VerificationReport rep = verify_loss_bound(cfg);
    CHECK(rep.passed);
}

TEST_CASE("reports serialize as json lines") {
    VerificationReport rep;
    rep.check_name = "lemma_a1_normalization";
    rep.max_abs_error = 1e-9;
    rep.tolerance = 1e-6;
    rep.passed = true;
    rep.details = "ok";
    std::string line = report_json_line(rep);
    CHECK(line.find("\"check\":\"lemma_a1_normalization\"") != std::string::npos);
    CHECK(line.find("\"passed\":true") != std::string::npos);
    CHECK(line.find('\n') == std::string::npos);
}

TEST_CASE("report passed flag is consistent with error versus tolerance") {
    AnalyticToy toy;
    VerificationReport rep = verify_lemma_a1(toy);
    CHECK(rep.passed == (rep.max_abs_error <= rep.tolerance));
    double base = gauss_pdf(0.3, 0.0, std::sqrt(0.5));
    CHECK(base > 0.0);  // sanity anchor for the closed form used above
}
