#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "id3/linalg.hpp"
#include "id3/rng.hpp"

namespace id3 {

// Point on S^{d-1}; construction normalizes and enforces d >= 2.
struct UnitVector {
    Vec components;

    UnitVector() = default;
    explicit UnitVector(Vec v);

    std::size_t dim() const { return components.size(); }
    double operator[](std::size_t i) const { return components[i]; }
};

UnitVector normalize(const Vec& v);
UnitVector sample_uniform_sphere(std::size_t d, RngStream& rng);

double cosine(const UnitVector& a, const UnitVector& b);

struct TammesConfig {
    std::size_t max_iters = 4000;
    double step_size = 0.5;
    std::size_t restarts = 16;
    std::uint64_t seed = 0;
};

struct AnchorSet {
    std::vector<UnitVector> anchors;
    double max_pairwise_cosine = 0.0;
    std::vector<std::pair<std::size_t, double>> optimizer_trace;  // (iteration, objective)
};

double max_pairwise_cosine(const std::vector<UnitVector>& anchors);

// Projected subgradient descent on the mean over points of the largest
// cosine to any other point; best configuration across restarts wins.
// Steps are accepted only if neither the objective nor the max pairwise
// cosine increases, so both recorded sequences are non-increasing.
AnchorSet solve_tammes(std::size_t n_points, std::size_t d, const TammesConfig& config = {});

struct PerturbationResult {
    std::vector<UnitVector> embeddings;   // norm(y*_j)
    std::vector<Vec> raw;                 // unnormalized y*_j
    std::vector<double> target_similarities;
    std::vector<double> achieved_similarities;
    double residual = 0.0;
};

// y_j = nu_j * w + sqrt(1 - nu_j^2) * u_j with u_j the given unit direction
// orthogonal to w. Exact optimum of the target-similarity least squares.
PerturbationResult solve_perturbation_with_directions(const UnitVector& w,
                                                      const std::vector<double>& nus,
                                                      const std::vector<UnitVector>& directions);

PerturbationResult solve_perturbation_closed_form(const UnitVector& w,
                                                  const std::vector<double>& nus,
                                                  RngStream& rng);

// Interior targets converge linearly; targets on the boundary |nu| = 1
// flatten the objective to fourth order and need the large iteration
// budget (iterations are O(m d) each, so the cap is still cheap).
struct PerturbationIterConfig {
    std::size_t max_iters = 2000000;
    double step_size = 0.25;
    double tol = 1e-12;
    std::uint64_t seed = 0;
};

struct PerturbationIterOutcome {
    PerturbationResult result;
    bool converged = false;
    std::size_t iterations = 0;
};

// Gradient descent on sum_j (w'norm(y_j) - nu_j)^2 over unnormalized y_j.
// Non-convergence is not fatal: the best iterate is returned with
// converged = false.
PerturbationIterOutcome solve_perturbation_iterative(const UnitVector& w,
                                                     const std::vector<double>& nus,
                                                     const PerturbationIterConfig& config = {});

}  // namespace id3
