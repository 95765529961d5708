#include "id3/schedule.hpp"

#include <cmath>

#include "id3/errors.hpp"

namespace id3 {

double lambda_kappa(double t, double t_max) {
    double u = t / t_max;
    return 0.5 * (1.0 - 1.0 / (1.0 + std::exp(-u)));
}

double DiffusionSchedule::alpha_at(std::size_t t) const {
    if (t < 1 || t > T) throw TimeIndexError("alpha_at: t out of range");
    return alpha[t - 1];
}

double DiffusionSchedule::alpha_bar_at(std::size_t t) const {
    if (t < 1 || t > T) throw TimeIndexError("alpha_bar_at: t out of range");
    return alpha_bar[t - 1];
}

double DiffusionSchedule::sigma_q_sq_at(std::size_t t) const {
    if (t < 2 || t > T) throw TimeIndexError("sigma_q_sq_at: t out of range");
    return sigma_q_sq[t - 2];
}

double DiffusionSchedule::mu_at(std::size_t t) const {
    if (t < 2 || t > T) throw TimeIndexError("mu_at: t out of range");
    return mu[t - 2];
}

double DiffusionSchedule::lambda_kappa_at(std::size_t t) const {
    if (t < 1 || t > T) throw TimeIndexError("lambda_kappa_at: t out of range");
    return lambda_kappa_t[t - 1];
}

DiffusionSchedule schedule_from_alpha(Vec alpha, double kappa) {
    const std::size_t T = alpha.size();
    if (T < 2)
        throw ConfigError("schedule_from_alpha: T must be >= 2");
    if (!(kappa > 0.0))
        throw ConfigError("schedule_from_alpha: kappa must be positive");
    for (double a : alpha)
        if (!(a > 0.0) || !(a < 1.0))
            throw ConfigError("schedule_from_alpha: every alpha must lie in (0, 1)");

    DiffusionSchedule s;
    s.T = T;
    s.kappa = kappa;
    s.alpha = std::move(alpha);
    s.alpha_bar.resize(T);
    s.lambda_kappa_t.resize(T);
    double abar = 1.0;
    for (std::size_t t = 1; t <= T; ++t) {
        abar *= s.alpha[t - 1];
        s.alpha_bar[t - 1] = abar;
        s.lambda_kappa_t[t - 1] = lambda_kappa(static_cast<double>(t), static_cast<double>(T));
    }

    s.sigma_q_sq.resize(T - 1);
    s.mu.resize(T - 1);
    double lambda_sum = 0.0;
    for (std::size_t t = 2; t <= T; ++t) {
        double a_t = s.alpha[t - 1];
        double ab_t = s.alpha_bar[t - 1];
        double ab_prev = s.alpha_bar[t - 2];
        double sq = (1.0 - a_t) * (1.0 - ab_prev) / (1.0 - ab_t);
        s.sigma_q_sq[t - 2] = sq;
        double ratio = ab_prev * (1.0 - a_t) * (1.0 - a_t) / ((1.0 - ab_t) * (1.0 - ab_t));
        s.mu[t - 2] = static_cast<double>(T - 1) / (2.0 * sq) * ratio;
        lambda_sum += s.lambda_kappa_t[t - 1] / kappa;
    }
    s.guidance_weight = lambda_sum / static_cast<double>(T - 1);
    return s;
}

DiffusionSchedule build_schedule(std::size_t T, double alpha_min, double alpha_max,
                                 double kappa) {
    if (T < 2)
        throw ConfigError("build_schedule: T must be >= 2");
    if (!(alpha_min > 0.0) || !(alpha_min <= alpha_max) || !(alpha_max < 1.0))
        throw ConfigError("build_schedule: need 0 < alpha_min <= alpha_max < 1");

    Vec alpha(T);
    for (std::size_t t = 1; t <= T; ++t) {
        double frac = static_cast<double>(t - 1) / static_cast<double>(T - 1);
        alpha[t - 1] = alpha_max + (alpha_min - alpha_max) * frac;
    }
    return schedule_from_alpha(std::move(alpha), kappa);
}

std::pair<Vec, Vec> forward_noise(const DiffusionSchedule& schedule, const Vec& x0,
                                  std::size_t t, RngStream& rng) {
    double ab = schedule.alpha_bar_at(t);
    Vec eps(x0.size());
    for (auto& e : eps) e = rng.normal();
    Vec xt(x0.size());
    double c0 = std::sqrt(ab);
    double c1 = std::sqrt(1.0 - ab);
    for (std::size_t i = 0; i < x0.size(); ++i) xt[i] = c0 * x0[i] + c1 * eps[i];
    return {std::move(xt), std::move(eps)};
}

double prior_kl_diagnostic(const DiffusionSchedule& schedule, const Vec& x0) {
    double ab = schedule.alpha_bar.back();
    double kl = 0.0;
    for (double xi : x0)
        kl += 0.5 * (ab * xi * xi + (1.0 - ab) - 1.0 - std::log(1.0 - ab));
    return kl;
}

}  // namespace id3
