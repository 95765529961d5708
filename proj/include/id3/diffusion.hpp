#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "id3/denoiser.hpp"
#include "id3/linalg.hpp"
#include "id3/rng.hpp"
#include "id3/schedule.hpp"
#include "id3/toyworld.hpp"

namespace id3 {

struct LossBreakdown {
    double denoising = 0.0;
    double inner_product = 0.0;
    double one_step = 0.0;
    double constant_C = 0.0;  // provably parameter-free; recorded as 0
    double total = 0.0;
    bool embedder_degenerate = false;  // x_hat0 fell in the embedder null space
};

struct TrainSample {
    Vec x0;
    UnitVector y;
    AttributeVector s;
};

// Test hook: any clean-sample predictor (x_t, t) -> x_hat0.
using DenoiseFn = std::function<Vec(const Vec&, std::size_t)>;

// Per-sample loss at a fixed t in [2, T]; draws x_t ~ q(x_t|x0) and an
// independent x_1 ~ q(x_1|x0) from the stream.
//   denoising     mu_t |x0 - x_hat0_t|^2
//   inner_product -(lk)_t (y' f(x_hat0_t) + [w_attr] s_norm' F_a(x_hat0_t))
//   one_step      1/2 |x0 - x_hat0_1|^2
LossBreakdown loss_with_denoiser(const DenoiseFn& denoiser, const DiffusionSchedule& schedule,
                                 const ToyWorld& world, const Vec& x0, const UnitVector& y,
                                 const AttributeVector& s, std::size_t t, RngStream& rng,
                                 bool w_attr = false);

LossBreakdown loss(const DenoiserParams& params, const DiffusionSchedule& schedule,
                   const ToyWorld& world, const Vec& x0, const UnitVector& y,
                   const AttributeVector& s, std::size_t t, RngStream& rng, bool w_attr = false);

// Mean loss over a batch with one t ~ U{2..T} draw per sample. Consumes
// the stream in the same order as loss_gradient, so finite differences of
// this function validate that gradient when both are run on equal seeds.
LossBreakdown batch_loss(const DenoiserParams& params, const DiffusionSchedule& schedule,
                         const ToyWorld& world, const std::vector<TrainSample>& batch,
                         RngStream& rng, bool w_attr = false);

// Exact reverse-mode gradient of batch_loss with respect to theta,
// propagated through the network, the embedder, and the attribute map.
Vec loss_gradient(const DenoiserParams& params, const DiffusionSchedule& schedule,
                  const ToyWorld& world, const std::vector<TrainSample>& batch, RngStream& rng,
                  bool w_attr = false, LossBreakdown* mean_out = nullptr);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    std::size_t steps = 4000;
    std::size_t batch = 16;
    AdamConfig adam;
    std::uint64_t seed = 7;
    bool w_attr = false;
};

struct TrainStepLog {
    std::size_t step = 0;
    LossBreakdown mean;
};

struct TrainResult {
    DenoiserParams params;
    std::vector<TrainStepLog> log;
    bool aborted = false;  // non-finite update; params hold the last good state
};

// Streaming training loop: each step draws a fresh batch from the toy
// world (y_gen uniform on the sphere, attributes uniform over their full
// ranges), conditions on y = f(x0) and the generating attributes, and
// takes one Adam step on the mean loss.
TrainResult train(const DenoiserParams& init, const DiffusionSchedule& schedule,
                  const ToyWorld& world, const TrainConfig& config);

}  // namespace id3
