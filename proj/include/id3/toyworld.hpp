#pragma once

#include <cstdint>

#include "id3/linalg.hpp"
#include "id3/rng.hpp"
#include "id3/sphere.hpp"

namespace id3 {

// Identity-irrelevant conditioning: age in years plus yaw/pitch/roll in
// degrees, with optional extra slots. normalized() maps everything to
// [-1, 1] before it enters the generator or any score.
struct AttributeVector {
    double age = 50.0;
    double pose[3] = {0.0, 0.0, 0.0};
    Vec extra;

    AttributeVector() = default;
    AttributeVector(double age_, double yaw, double pitch, double roll, Vec extra_ = {});

    std::size_t normalized_dim() const { return 4 + extra.size(); }
    Vec normalized() const;
};

// Known generative process plus analytic embedder/attribute maps:
//   data      x0 = A y + B s_norm + sigma eps
//   embedder  f(x) = norm(W x)            (identity signal on S^{d-1})
//   attributes F_a(x) = V x
struct ToyWorld {
    std::size_t n = 0;    // data dimension
    std::size_t d = 0;    // identity embedding dimension
    std::size_t m_a = 0;  // attribute dimension
    Matrix A;             // n x d
    Matrix B;             // n x m_a
    Matrix W;             // d x n
    Matrix V;             // m_a x n
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

ToyWorld build_toy_world(std::size_t n, std::size_t d, std::size_t m_a, double noise_sigma,
                         std::uint64_t seed);

Vec generate_sample(const ToyWorld& world, const UnitVector& y, const AttributeVector& s,
                    RngStream& rng);

UnitVector embed(const ToyWorld& world, const Vec& x);

// grad_x of y' f(x) where f(x) = norm(W x): W'(I - u u')y / |W x|.
Vec embed_jacobian_vector(const ToyWorld& world, const Vec& x, const UnitVector& y);

Vec predict_attributes(const ToyWorld& world, const Vec& x);

// grad_x of normalized(s)' V x = V' normalized(s).
Vec attribute_score(const ToyWorld& world, const Vec& x, const AttributeVector& s);

}  // namespace id3
