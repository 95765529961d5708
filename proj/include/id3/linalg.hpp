#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "id3/errors.hpp"

namespace id3 {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size())
        throw DimensionMismatchError("dot: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double sq_dist(const Vec& a, const Vec& b) {
    if (a.size() != b.size())
        throw DimensionMismatchError("sq_dist: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

// y += c * x
inline void axpy(double c, const Vec& x, Vec& y) {
    if (x.size() != y.size())
        throw DimensionMismatchError("axpy: size mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += c * x[i];
}

inline Vec scaled(const Vec& x, double c) {
    Vec y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = c * x[i];
    return y;
}

inline bool all_finite(const Vec& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

// Dense row-major matrix, sized for desk-scale problems.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    Vec data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

inline Vec matvec(const Matrix& m, const Vec& x) {
    if (m.cols != x.size())
        throw DimensionMismatchError("matvec: size mismatch");
    Vec y(m.rows, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        double s = 0.0;
        const double* row = m.data.data() + r * m.cols;
        for (std::size_t c = 0; c < m.cols; ++c) s += row[c] * x[c];
        y[r] = s;
    }
    return y;
}

// mᵀ·x without forming the transpose.
inline Vec matvec_t(const Matrix& m, const Vec& x) {
    if (m.rows != x.size())
        throw DimensionMismatchError("matvec_t: size mismatch");
    Vec y(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        const double* row = m.data.data() + r * m.cols;
        for (std::size_t c = 0; c < m.cols; ++c) y[c] += row[c] * x[r];
    }
    return y;
}

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
// Good enough for the tiny Gram matrices used here.
inline Vec symmetric_eigenvalues(Matrix a) {
    if (a.rows != a.cols)
        throw DimensionMismatchError("symmetric_eigenvalues: not square");
    const std::size_t n = a.rows;
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    Vec ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    return ev;
}

}  // namespace id3
