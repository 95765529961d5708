#pragma once

#include <cstdint>

#include "id3/linalg.hpp"
#include "id3/rng.hpp"
#include "id3/schedule.hpp"
#include "id3/toyworld.hpp"

namespace id3 {

// Clean-sample predictor: a two-hidden-layer tanh network over the
// concatenation [x_t ; fourier(t/T) ; y ; normalized(s)], with a flat
// parameter vector so gradients and checkpoints stay simple.
struct DenoiserParams {
    std::size_t n = 0;
    std::size_t d = 0;
    std::size_t m_a = 0;
    std::size_t k_time = 8;
    std::size_t hidden1 = 48;
    std::size_t hidden2 = 48;
    Vec theta;

    std::size_t input_dim() const { return n + k_time + d + m_a; }
    std::size_t param_count() const {
        return (input_dim() + 1) * hidden1 + (hidden1 + 1) * hidden2 + (hidden2 + 1) * n;
    }
};

DenoiserParams init_denoiser(std::size_t n, std::size_t d, std::size_t m_a, std::size_t k_time,
                             std::size_t hidden1, std::size_t hidden2, std::uint64_t seed);

DenoiserParams zero_denoiser(std::size_t n, std::size_t d, std::size_t m_a, std::size_t k_time = 8,
                             std::size_t hidden1 = 48, std::size_t hidden2 = 48);

// sin/cos pairs at dyadic frequencies of t/T; k_time values in total.
Vec time_features(std::size_t t, std::size_t T, std::size_t k_time);

// Cached activations for the backward pass.
struct DenoiserTape {
    Vec input;
    Vec a1;  // tanh outputs, first hidden layer
    Vec a2;  // tanh outputs, second hidden layer
    Vec out;
};

Vec denoiser_input(const DenoiserParams& params, const DiffusionSchedule& schedule, const Vec& x_t,
                   std::size_t t, const UnitVector& y, const AttributeVector& s);

Vec denoise_forward(const DenoiserParams& params, const Vec& input, DenoiserTape* tape = nullptr);

// x_hat0 = net(x_t, t, y, s)
Vec denoise(const DenoiserParams& params, const DiffusionSchedule& schedule, const Vec& x_t,
            std::size_t t, const UnitVector& y, const AttributeVector& s);

// Accumulates d(out . dout)/dtheta into grad given the forward tape.
void denoise_backward(const DenoiserParams& params, const DenoiserTape& tape, const Vec& dout,
                      Vec& grad);

}  // namespace id3
