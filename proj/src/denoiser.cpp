#include "id3/denoiser.hpp"

#include <cmath>

#include "id3/errors.hpp"

namespace id3 {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

DenoiserParams init_denoiser(std::size_t n, std::size_t d, std::size_t m_a, std::size_t k_time,
                             std::size_t hidden1, std::size_t hidden2, std::uint64_t seed) {
    if (n == 0 || d < 2 || m_a == 0 || hidden1 == 0 || hidden2 == 0)
        throw ConfigError("init_denoiser: bad dimensions");
    if (k_time == 0 || k_time % 2 != 0)
        throw ConfigError("init_denoiser: k_time must be a positive even count");
    DenoiserParams p;
    p.n = n;
    p.d = d;
    p.m_a = m_a;
    p.k_time = k_time;
    p.hidden1 = hidden1;
    p.hidden2 = hidden2;
    p.theta.assign(p.param_count(), 0.0);

    RngStream rng(seed);
    std::size_t idx = 0;
    auto fill_layer = [&](std::size_t in, std::size_t out) {
        double scale = 1.0 / std::sqrt(static_cast<double>(in));
        for (std::size_t i = 0; i < in * out; ++i) p.theta[idx++] = scale * rng.normal();
        idx += out;  // biases stay zero
    };
    fill_layer(p.input_dim(), hidden1);
    fill_layer(hidden1, hidden2);
    fill_layer(hidden2, n);
    return p;
}

DenoiserParams zero_denoiser(std::size_t n, std::size_t d, std::size_t m_a, std::size_t k_time,
                             std::size_t hidden1, std::size_t hidden2) {
    DenoiserParams p;
    p.n = n;
    p.d = d;
    p.m_a = m_a;
    p.k_time = k_time;
    p.hidden1 = hidden1;
    p.hidden2 = hidden2;
    p.theta.assign(p.param_count(), 0.0);
    return p;
}

Vec time_features(std::size_t t, std::size_t T, std::size_t k_time) {
    double u = static_cast<double>(t) / static_cast<double>(T);
    Vec f;
    f.reserve(k_time);
    double freq = kPi;
    for (std::size_t j = 0; j < k_time / 2; ++j) {
        f.push_back(std::sin(freq * u));
        f.push_back(std::cos(freq * u));
        freq *= 2.0;
    }
    return f;
}

Vec denoiser_input(const DenoiserParams& params, const DiffusionSchedule& schedule, const Vec& x_t,
                   std::size_t t, const UnitVector& y, const AttributeVector& s) {
    if (x_t.size() != params.n)
        throw DimensionMismatchError("denoise: data dimension mismatch");
    if (y.dim() != params.d)
        throw DimensionMismatchError("denoise: identity dimension mismatch");
    Vec s_norm = s.normalized();
    if (s_norm.size() != params.m_a)
        throw DimensionMismatchError("denoise: attribute dimension mismatch");
    if (t < 1 || t > schedule.T)
        throw TimeIndexError("denoise: t out of range");

    Vec input;
    input.reserve(params.input_dim());
    input.insert(input.end(), x_t.begin(), x_t.end());
    Vec tf = time_features(t, schedule.T, params.k_time);
    input.insert(input.end(), tf.begin(), tf.end());
    input.insert(input.end(), y.components.begin(), y.components.end());
    input.insert(input.end(), s_norm.begin(), s_norm.end());
    return input;
}

namespace {

// theta layout: W1 (h1 x in) | b1 | W2 (h2 x h1) | b2 | W3 (n x h2) | b3,
// weights row-major.
struct Offsets {
    std::size_t w1, b1, w2, b2, w3, b3;
    std::size_t in, h1, h2, out;
};

Offsets offsets_of(const DenoiserParams& p) {
    Offsets o;
    o.in = p.input_dim();
    o.h1 = p.hidden1;
    o.h2 = p.hidden2;
    o.out = p.n;
    o.w1 = 0;
    o.b1 = o.w1 + o.h1 * o.in;
    o.w2 = o.b1 + o.h1;
    o.b2 = o.w2 + o.h2 * o.h1;
    o.w3 = o.b2 + o.h2;
    o.b3 = o.w3 + o.out * o.h2;
    return o;
}

void affine(const double* w, const double* b, const Vec& x, Vec& z) {
    const std::size_t out = z.size();
    const std::size_t in = x.size();
    for (std::size_t r = 0; r < out; ++r) {
        double s = b[r];
        const double* row = w + r * in;
        for (std::size_t c = 0; c < in; ++c) s += row[c] * x[c];
        z[r] = s;
    }
}

}  // namespace

Vec denoise_forward(const DenoiserParams& params, const Vec& input, DenoiserTape* tape) {
    if (input.size() != params.input_dim())
        throw DimensionMismatchError("denoise_forward: input dimension mismatch");
    if (params.theta.size() != params.param_count())
        throw DimensionMismatchError("denoise_forward: parameter vector has wrong length");
    Offsets o = offsets_of(params);
    const double* th = params.theta.data();

    Vec a1(o.h1), a2(o.h2), out(o.out);
    affine(th + o.w1, th + o.b1, input, a1);
    for (auto& v : a1) v = std::tanh(v);
    affine(th + o.w2, th + o.b2, a1, a2);
    for (auto& v : a2) v = std::tanh(v);
    affine(th + o.w3, th + o.b3, a2, out);

    if (tape) {
        tape->input = input;
        tape->a1 = a1;
        tape->a2 = a2;
        tape->out = out;
    }
    return out;
}

Vec denoise(const DenoiserParams& params, const DiffusionSchedule& schedule, const Vec& x_t,
            std::size_t t, const UnitVector& y, const AttributeVector& s) {
    return denoise_forward(params, denoiser_input(params, schedule, x_t, t, y, s));
}

void denoise_backward(const DenoiserParams& params, const DenoiserTape& tape, const Vec& dout,
                      Vec& grad) {
    if (grad.size() != params.theta.size())
        throw DimensionMismatchError("denoise_backward: gradient vector has wrong length");
    Offsets o = offsets_of(params);
    const double* th = params.theta.data();
    double* g = grad.data();

    // Output layer.
    Vec da2(o.h2, 0.0);
    for (std::size_t r = 0; r < o.out; ++r) {
        double dr = dout[r];
        double* gw = g + o.w3 + r * o.h2;
        const double* w = th + o.w3 + r * o.h2;
        for (std::size_t c = 0; c < o.h2; ++c) {
            gw[c] += dr * tape.a2[c];
            da2[c] += dr * w[c];
        }
        g[o.b3 + r] += dr;
    }
    // Second hidden layer (tanh').
    Vec da1(o.h1, 0.0);
    for (std::size_t r = 0; r < o.h2; ++r) {
        double dz = da2[r] * (1.0 - tape.a2[r] * tape.a2[r]);
        double* gw = g + o.w2 + r * o.h1;
        const double* w = th + o.w2 + r * o.h1;
        for (std::size_t c = 0; c < o.h1; ++c) {
            gw[c] += dz * tape.a1[c];
            da1[c] += dz * w[c];
        }
        g[o.b2 + r] += dz;
    }
    // First hidden layer.
    for (std::size_t r = 0; r < o.h1; ++r) {
        double dz = da1[r] * (1.0 - tape.a1[r] * tape.a1[r]);
        double* gw = g + o.w1 + r * o.in;
        for (std::size_t c = 0; c < o.in; ++c) gw[c] += dz * tape.input[c];
        g[o.b1 + r] += dz;
    }
}

}  // namespace id3
