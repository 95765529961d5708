#include "id3/diffusion.hpp"

#include <cmath>

#include "id3/errors.hpp"

namespace id3 {

namespace {

// Shared forward pass for scalar loss and gradient. When tapes are
// requested the two network inputs are returned for the backward pass.
struct LossEval {
    LossBreakdown breakdown;
    Vec x_hat_t;
    Vec x_hat_1;
};

LossEval eval_loss(const DenoiseFn& denoiser, const DiffusionSchedule& schedule,
                   const ToyWorld& world, const Vec& x0, const UnitVector& y,
                   const AttributeVector& s, std::size_t t, RngStream& rng, bool w_attr) {
    if (t < 2 || t > schedule.T)
        throw TimeIndexError("loss: t must lie in [2, T]");

    LossEval ev;
    Vec x_t = forward_noise(schedule, x0, t, rng).first;
    ev.x_hat_t = denoiser(x_t, t);

    double mu_t = schedule.mu_at(t);
    ev.breakdown.denoising = mu_t * sq_dist(x0, ev.x_hat_t);

    double lk = schedule.lambda_kappa_at(t);
    double inner = 0.0;
    try {
        UnitVector f = embed(world, ev.x_hat_t);
        inner = dot(y.components, f.components);
        if (w_attr) inner += dot(s.normalized(), predict_attributes(world, ev.x_hat_t));
    } catch (const ZeroNormError&) {
        ev.breakdown.embedder_degenerate = true;
        inner = 0.0;
    }
    ev.breakdown.inner_product = -lk * inner;

    Vec x_1 = forward_noise(schedule, x0, 1, rng).first;
    ev.x_hat_1 = denoiser(x_1, 1);
    ev.breakdown.one_step = 0.5 * sq_dist(x0, ev.x_hat_1);

    ev.breakdown.constant_C = 0.0;
    ev.breakdown.total = ev.breakdown.denoising + ev.breakdown.inner_product +
                         ev.breakdown.one_step + ev.breakdown.constant_C;
    return ev;
}

}  // namespace

LossBreakdown loss_with_denoiser(const DenoiseFn& denoiser, const DiffusionSchedule& schedule,
                                 const ToyWorld& world, const Vec& x0, const UnitVector& y,
                                 const AttributeVector& s, std::size_t t, RngStream& rng,
                                 bool w_attr) {
    return eval_loss(denoiser, schedule, world, x0, y, s, t, rng, w_attr).breakdown;
}

LossBreakdown loss(const DenoiserParams& params, const DiffusionSchedule& schedule,
                   const ToyWorld& world, const Vec& x0, const UnitVector& y,
                   const AttributeVector& s, std::size_t t, RngStream& rng, bool w_attr) {
    DenoiseFn fn = [&](const Vec& x_t, std::size_t step) {
        return denoise(params, schedule, x_t, step, y, s);
    };
    return loss_with_denoiser(fn, schedule, world, x0, y, s, t, rng, w_attr);
}

namespace {

void fnv_mix(std::uint64_t& h, const double* data, std::size_t count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < count * sizeof(double); ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
}

// Per-sample noise streams are keyed on the sample's content, so a batch
// holding the same sample k times sees k identical loss terms and the
// batch mean collapses to the single-sample value.
std::uint64_t sample_key(const TrainSample& sample) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    fnv_mix(h, sample.x0.data(), sample.x0.size());
    fnv_mix(h, sample.y.components.data(), sample.y.components.size());
    Vec s_norm = sample.s.normalized();
    fnv_mix(h, s_norm.data(), s_norm.size());
    return h;
}

}  // namespace

LossBreakdown batch_loss(const DenoiserParams& params, const DiffusionSchedule& schedule,
                         const ToyWorld& world, const std::vector<TrainSample>& batch,
                         RngStream& rng, bool w_attr) {
    if (batch.empty())
        throw DomainError("batch_loss: empty batch");
    std::uint64_t master = rng.next_u64();
    LossBreakdown mean;
    for (const auto& sample : batch) {
        RngStream sub(substream_seed(master, sample_key(sample)));
        std::size_t t = sub.uniform_int(2, schedule.T);
        LossBreakdown b = loss(params, schedule, world, sample.x0, sample.y, sample.s, t, sub,
                               w_attr);
        mean.denoising += b.denoising;
        mean.inner_product += b.inner_product;
        mean.one_step += b.one_step;
        mean.total += b.total;
        mean.embedder_degenerate = mean.embedder_degenerate || b.embedder_degenerate;
    }
    double inv = 1.0 / static_cast<double>(batch.size());
    mean.denoising *= inv;
    mean.inner_product *= inv;
    mean.one_step *= inv;
    mean.total *= inv;
    return mean;
}

Vec loss_gradient(const DenoiserParams& params, const DiffusionSchedule& schedule,
                  const ToyWorld& world, const std::vector<TrainSample>& batch, RngStream& rng,
                  bool w_attr, LossBreakdown* mean_out) {
    if (batch.empty())
        throw DomainError("loss_gradient: empty batch");

    Vec grad(params.theta.size(), 0.0);
    LossBreakdown mean;
    const double inv = 1.0 / static_cast<double>(batch.size());
    std::uint64_t master = rng.next_u64();

    for (const auto& sample : batch) {
        RngStream sub(substream_seed(master, sample_key(sample)));
        std::size_t t = sub.uniform_int(2, schedule.T);

        DenoiserTape tape_t, tape_1;
        // Forward passes mirror batch_loss()'s stream consumption exactly.
        DenoiseFn fn = [&](const Vec& x_t, std::size_t step) {
            Vec input = denoiser_input(params, schedule, x_t, step, sample.y, sample.s);
            return denoise_forward(params, input, step == 1 ? &tape_1 : &tape_t);
        };
        LossEval ev = eval_loss(fn, schedule, world, sample.x0, sample.y, sample.s, t, sub,
                                w_attr);

        // d(loss)/d(x_hat0_t): denoising + inner-product pieces.
        double mu_t = schedule.mu_at(t);
        double lk = schedule.lambda_kappa_at(t);
        Vec dout_t(params.n, 0.0);
        for (std::size_t i = 0; i < params.n; ++i)
            dout_t[i] = 2.0 * mu_t * (ev.x_hat_t[i] - sample.x0[i]);
        if (!ev.breakdown.embedder_degenerate) {
            Vec jf = embed_jacobian_vector(world, ev.x_hat_t, sample.y);
            axpy(-lk, jf, dout_t);
            if (w_attr) {
                Vec ja = attribute_score(world, ev.x_hat_t, sample.s);
                axpy(-lk, ja, dout_t);
            }
        }
        for (auto& v : dout_t) v *= inv;
        denoise_backward(params, tape_t, dout_t, grad);

        // d(loss)/d(x_hat0_1): one-step reconstruction piece.
        Vec dout_1(params.n, 0.0);
        for (std::size_t i = 0; i < params.n; ++i)
            dout_1[i] = inv * (ev.x_hat_1[i] - sample.x0[i]);
        denoise_backward(params, tape_1, dout_1, grad);

        mean.denoising += inv * ev.breakdown.denoising;
        mean.inner_product += inv * ev.breakdown.inner_product;
        mean.one_step += inv * ev.breakdown.one_step;
        mean.total += inv * ev.breakdown.total;
        mean.embedder_degenerate = mean.embedder_degenerate || ev.breakdown.embedder_degenerate;
    }

    if (!all_finite(grad))
        throw NumericalError("loss_gradient: non-finite gradient component");
    if (mean_out) *mean_out = mean;
    return grad;
}

TrainResult train(const DenoiserParams& init, const DiffusionSchedule& schedule,
                  const ToyWorld& world, const TrainConfig& config) {
    if (config.batch == 0)
        throw ConfigError("train: batch must be positive");
    if (!std::isfinite(config.adam.lr) || config.adam.lr < 0.0)
        throw ConfigError("train: learning rate must be finite and >= 0");

    TrainResult result;
    result.params = init;
    Vec& theta = result.params.theta;
    Vec m(theta.size(), 0.0);
    Vec v(theta.size(), 0.0);

    RngStream rng(config.seed);

    for (std::size_t step = 0; step < config.steps; ++step) {
        std::vector<TrainSample> batch;
        batch.reserve(config.batch);
        for (std::size_t b = 0; b < config.batch; ++b) {
            UnitVector y_gen = sample_uniform_sphere(world.d, rng);
            Vec extra(world.m_a > 4 ? world.m_a - 4 : 0);
            for (auto& e : extra) e = rng.uniform(-1.0, 1.0);
            AttributeVector s(rng.uniform(0.0, 100.0), rng.uniform(-90.0, 90.0),
                              rng.uniform(-90.0, 90.0), rng.uniform(-90.0, 90.0),
                              std::move(extra));
            Vec x0 = generate_sample(world, y_gen, s, rng);
            // Condition on the embedding of the clean sample, not on the
            // latent identity that generated it.
            UnitVector y = embed(world, x0);
            batch.push_back({std::move(x0), std::move(y), std::move(s)});
        }

        LossBreakdown mean;
        Vec grad;
        try {
            grad = loss_gradient(result.params, schedule, world, batch, rng, config.w_attr,
                                 &mean);
        } catch (const NumericalError&) {
            result.aborted = true;
            break;
        }

        Vec theta_backup = theta;
        double b1t = 1.0 - std::pow(config.adam.beta1, static_cast<double>(step + 1));
        double b2t = 1.0 - std::pow(config.adam.beta2, static_cast<double>(step + 1));
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = config.adam.beta1 * m[i] + (1.0 - config.adam.beta1) * grad[i];
            v[i] = config.adam.beta2 * v[i] + (1.0 - config.adam.beta2) * grad[i] * grad[i];
            double m_hat = m[i] / b1t;
            double v_hat = v[i] / b2t;
            theta[i] -= config.adam.lr * m_hat / (std::sqrt(v_hat) + config.adam.eps);
        }
        if (!all_finite(theta)) {
            theta = theta_backup;  // keep the last good parameters
            result.aborted = true;
            break;
        }
        result.log.push_back({step, mean});
    }
    return result;
}

}  // namespace id3
