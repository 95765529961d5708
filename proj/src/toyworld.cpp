#include "id3/toyworld.hpp"

#include <algorithm>
#include <cmath>

#include "id3/errors.hpp"

namespace id3 {

AttributeVector::AttributeVector(double age_, double yaw, double pitch, double roll, Vec extra_)
    : age(age_), pose{yaw, pitch, roll}, extra(std::move(extra_)) {
    if (age < 0.0 || age > 100.0)
        throw DomainError("AttributeVector: age must lie in [0, 100]");
    for (double p : pose)
        if (p < -90.0 || p > 90.0)
            throw DomainError("AttributeVector: pose angles must lie in [-90, 90]");
}

Vec AttributeVector::normalized() const {
    Vec s;
    s.reserve(normalized_dim());
    s.push_back((age - 50.0) / 50.0);
    for (double p : pose) s.push_back(p / 90.0);
    s.insert(s.end(), extra.begin(), extra.end());
    return s;
}

namespace {

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, RngStream& rng) {
    Matrix m(rows, cols);
    double scale = 1.0 / std::sqrt(static_cast<double>(cols));
    for (auto& x : m.data) x = scale * rng.normal();
    return m;
}

double smallest_singular_value(const Matrix& w) {
    // Gram matrix W W' is d x d; its eigenvalues are the squared singular
    // values of W.
    Matrix gram(w.rows, w.rows);
    for (std::size_t i = 0; i < w.rows; ++i)
        for (std::size_t j = 0; j < w.rows; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < w.cols; ++k) s += w(i, k) * w(j, k);
            gram(i, j) = s;
        }
    Vec ev = symmetric_eigenvalues(gram);
    double mn = ev[0];
    for (double e : ev) mn = std::min(mn, e);
    return std::sqrt(std::max(0.0, mn));
}

}  // namespace

ToyWorld build_toy_world(std::size_t n, std::size_t d, std::size_t m_a, double noise_sigma,
                         std::uint64_t seed) {
    if (d < 2 || n < d)
        throw ConfigError("build_toy_world: need n >= d >= 2");
    if (m_a < 1)
        throw ConfigError("build_toy_world: need m_a >= 1");
    if (noise_sigma < 0.0)
        throw ConfigError("build_toy_world: noise_sigma must be >= 0");

    ToyWorld world;
    world.n = n;
    world.d = d;
    world.m_a = m_a;
    world.noise_sigma = noise_sigma;
    world.seed = seed;

    // Resample the embedder weights if the draw is rank-deficient.
    for (std::uint64_t attempt = 0;; ++attempt) {
        RngStream rng(substream_seed(seed, attempt));
        world.A = gaussian_matrix(n, d, rng);
        world.B = gaussian_matrix(n, m_a, rng);
        world.W = gaussian_matrix(d, n, rng);
        world.V = gaussian_matrix(m_a, n, rng);
        if (smallest_singular_value(world.W) > 1e-8) break;
        if (attempt > 64)
            throw NumericalError("build_toy_world: could not draw a full-rank embedder");
    }
    return world;
}

Vec generate_sample(const ToyWorld& world, const UnitVector& y, const AttributeVector& s,
                    RngStream& rng) {
    if (y.dim() != world.d)
        throw DimensionMismatchError("generate_sample: identity dimension mismatch");
    Vec s_norm = s.normalized();
    if (s_norm.size() != world.m_a)
        throw DimensionMismatchError("generate_sample: attribute dimension mismatch");
    Vec x = matvec(world.A, y.components);
    Vec bs = matvec(world.B, s_norm);
    axpy(1.0, bs, x);
    if (world.noise_sigma > 0.0)
        for (auto& xi : x) xi += world.noise_sigma * rng.normal();
    return x;
}

UnitVector embed(const ToyWorld& world, const Vec& x) {
    if (x.size() != world.n)
        throw DimensionMismatchError("embed: data dimension mismatch");
    return UnitVector(matvec(world.W, x));
}

Vec embed_jacobian_vector(const ToyWorld& world, const Vec& x, const UnitVector& y) {
    if (x.size() != world.n)
        throw DimensionMismatchError("embed_jacobian_vector: data dimension mismatch");
    if (y.dim() != world.d)
        throw DimensionMismatchError("embed_jacobian_vector: identity dimension mismatch");
    Vec wx = matvec(world.W, x);
    double r = norm2(wx);
    if (r <= 1e-12)
        throw ZeroNormError("embed_jacobian_vector: W x has near-zero norm");
    Vec u = scaled(wx, 1.0 / r);
    // (I - u u') y, then pull back through W and divide by |W x|.
    Vec t = y.components;
    axpy(-dot(u, y.components), u, t);
    Vec g = matvec_t(world.W, t);
    return scaled(g, 1.0 / r);
}

Vec predict_attributes(const ToyWorld& world, const Vec& x) {
    if (x.size() != world.n)
        throw DimensionMismatchError("predict_attributes: data dimension mismatch");
    return matvec(world.V, x);
}

Vec attribute_score(const ToyWorld& world, const Vec& x, const AttributeVector& s) {
    if (x.size() != world.n)
        throw DimensionMismatchError("attribute_score: data dimension mismatch");
    Vec s_norm = s.normalized();
    if (s_norm.size() != world.m_a)
        throw DimensionMismatchError("attribute_score: attribute dimension mismatch");
    return matvec_t(world.V, s_norm);
}

}  // namespace id3
