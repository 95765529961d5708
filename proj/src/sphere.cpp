#include "id3/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "id3/errors.hpp"

namespace id3 {

UnitVector::UnitVector(Vec v) {
    if (v.size() < 2)
        throw DomainError("UnitVector: dimension must be >= 2");
    double n = norm2(v);
    if (n <= 1e-12)
        throw ZeroNormError("UnitVector: vector norm below 1e-12");
    for (double& x : v) x /= n;
    components = std::move(v);
}

UnitVector normalize(const Vec& v) { return UnitVector(v); }

UnitVector sample_uniform_sphere(std::size_t d, RngStream& rng) {
    if (d < 2)
        throw DomainError("sample_uniform_sphere: d must be >= 2");
    Vec g(d);
    double n;
    do {
        for (auto& x : g) x = rng.normal();
        n = norm2(g);
    } while (n <= 1e-12);
    return UnitVector(std::move(g));
}

double cosine(const UnitVector& a, const UnitVector& b) {
    return dot(a.components, b.components);
}

double max_pairwise_cosine(const std::vector<UnitVector>& anchors) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < anchors.size(); ++i)
        for (std::size_t j = i + 1; j < anchors.size(); ++j)
            best = std::max(best, cosine(anchors[i], anchors[j]));
    return best;
}

namespace {

// Mean over points of the largest cosine to any other point; the active
// neighbor per point is the argmax, ties broken by lowest index.
double separation_objective(const std::vector<UnitVector>& pts,
                            std::vector<std::size_t>* active = nullptr) {
    const std::size_t n = pts.size();
    if (active) active->assign(n, 0);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double c = cosine(pts[i], pts[j]);
            if (c > best) {
                best = c;
                best_j = j;
            }
        }
        if (active) (*active)[i] = best_j;
        sum += best;
    }
    return sum / static_cast<double>(n);
}

struct DescentResult {
    std::vector<UnitVector> pts;
    double objective = 0.0;
    double max_cos = 0.0;
    std::vector<std::pair<std::size_t, double>> trace;
};

DescentResult descend(std::vector<UnitVector> pts, const TammesConfig& cfg) {
    const std::size_t n = pts.size();
    const std::size_t d = pts[0].dim();
    std::vector<std::size_t> active;
    double obj = separation_objective(pts, &active);
    double max_cos = max_pairwise_cosine(pts);

    DescentResult res;
    res.trace.emplace_back(0, obj);

    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        // Per-point subgradient: each point descends against its own
        // argmax neighbor. The one-sided form stalls far less often under
        // the monotone acceptance rule than pushing both endpoints.
        std::vector<Vec> grad(n, Vec(d, 0.0));
        for (std::size_t i = 0; i < n; ++i)
            axpy(1.0 / n, pts[active[i]].components, grad[i]);

        double step = cfg.step_size;
        bool accepted = false;
        for (int halving = 0; halving < 50; ++halving) {
            std::vector<UnitVector> cand;
            cand.reserve(n);
            bool degenerate = false;
            for (std::size_t i = 0; i < n; ++i) {
                Vec moved = pts[i].components;
                axpy(-step, grad[i], moved);
                if (norm2(moved) <= 1e-12) {
                    degenerate = true;
                    break;
                }
                cand.emplace_back(std::move(moved));
            }
            if (!degenerate) {
                std::vector<std::size_t> cand_active;
                double cand_obj = separation_objective(cand, &cand_active);
                double cand_max = max_pairwise_cosine(cand);
                if (cand_obj <= obj && cand_max <= max_cos) {
                    pts = std::move(cand);
                    active = std::move(cand_active);
                    obj = cand_obj;
                    max_cos = cand_max;
                    res.trace.emplace_back(it, obj);
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no improving step at any tried scale
    }

    res.pts = std::move(pts);
    res.objective = obj;
    res.max_cos = max_cos;
    return res;
}

}  // namespace

AnchorSet solve_tammes(std::size_t n_points, std::size_t d, const TammesConfig& cfg) {
    if (n_points < 2)
        throw ConfigError("solve_tammes: need at least 2 points");
    if (d < 2)
        throw ConfigError("solve_tammes: d must be >= 2");
    if (cfg.max_iters == 0 || cfg.restarts == 0 || cfg.step_size <= 0.0)
        throw ConfigError("solve_tammes: iteration, step and restart counts must be positive");

    DescentResult best;
    bool have_best = false;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        RngStream rng(substream_seed(cfg.seed, r));
        std::vector<UnitVector> init;
        init.reserve(n_points);
        for (std::size_t i = 0; i < n_points; ++i)
            init.push_back(sample_uniform_sphere(d, rng));
        DescentResult res = descend(std::move(init), cfg);
        if (!have_best || res.max_cos < best.max_cos ||
            (res.max_cos == best.max_cos && res.objective < best.objective)) {
            best = std::move(res);
            have_best = true;
        }
    }

    AnchorSet out;
    out.anchors = std::move(best.pts);
    out.max_pairwise_cosine = best.max_cos;
    out.optimizer_trace = std::move(best.trace);
    return out;
}

PerturbationResult solve_perturbation_with_directions(const UnitVector& w,
                                                      const std::vector<double>& nus,
                                                      const std::vector<UnitVector>& directions) {
    if (directions.size() != nus.size())
        throw DimensionMismatchError("solve_perturbation: one direction per target required");
    PerturbationResult res;
    res.target_similarities = nus;
    res.embeddings.reserve(nus.size());
    res.raw.reserve(nus.size());
    res.achieved_similarities.reserve(nus.size());
    for (std::size_t j = 0; j < nus.size(); ++j) {
        double nu = nus[j];
        if (std::abs(nu) > 1.0)
            throw DomainError("solve_perturbation: |nu| must be <= 1");
        Vec y = scaled(w.components, nu);
        axpy(std::sqrt(std::max(0.0, 1.0 - nu * nu)), directions[j].components, y);
        UnitVector e(std::move(y));
        res.achieved_similarities.push_back(cosine(w, e));
        res.raw.push_back(e.components);
        res.embeddings.push_back(std::move(e));
    }
    res.residual = 0.0;  // construction attains every target
    return res;
}

namespace {

// Uniform unit vector orthogonal to w: project a Gaussian draw onto the
// complement and normalize. For d = 2 the complement is one-dimensional
// and this reduces to a fair sign choice.
UnitVector orthogonal_direction(const UnitVector& w, RngStream& rng) {
    const std::size_t d = w.dim();
    for (;;) {
        Vec g(d);
        for (auto& x : g) x = rng.normal();
        axpy(-dot(g, w.components), w.components, g);
        if (norm2(g) > 1e-9) return UnitVector(std::move(g));
    }
}

}  // namespace

PerturbationResult solve_perturbation_closed_form(const UnitVector& w,
                                                  const std::vector<double>& nus,
                                                  RngStream& rng) {
    std::vector<UnitVector> dirs;
    dirs.reserve(nus.size());
    for (std::size_t j = 0; j < nus.size(); ++j) dirs.push_back(orthogonal_direction(w, rng));
    return solve_perturbation_with_directions(w, nus, dirs);
}

PerturbationIterOutcome solve_perturbation_iterative(const UnitVector& w,
                                                     const std::vector<double>& nus,
                                                     const PerturbationIterConfig& cfg) {
    for (double nu : nus)
        if (std::abs(nu) > 1.0)
            throw DomainError("solve_perturbation_iterative: |nu| must be <= 1");
    if (cfg.step_size <= 0.0 || cfg.tol < 0.0)
        throw ConfigError("solve_perturbation_iterative: bad step or tolerance");

    const std::size_t m = nus.size();
    const std::size_t d = w.dim();
    RngStream rng(cfg.seed);

    // Start near the anchor so no column passes through the origin.
    std::vector<Vec> ys(m);
    for (std::size_t j = 0; j < m; ++j) {
        ys[j] = w.components;
        for (std::size_t k = 0; k < d; ++k) ys[j][k] += 0.5 * rng.normal();
        if (norm2(ys[j]) <= 1e-9) ys[j] = w.components;
    }

    auto residual_of = [&](const std::vector<Vec>& cols) {
        double r = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            UnitVector u(cols[j]);
            double e = cosine(w, u) - nus[j];
            r += e * e;
        }
        return r;
    };

    double best_res = residual_of(ys);
    std::vector<Vec> best = ys;
    std::size_t it = 0;
    bool converged = best_res <= cfg.tol;

    while (!converged && it < cfg.max_iters) {
        for (std::size_t j = 0; j < m; ++j) {
            double r = norm2(ys[j]);
            Vec u = scaled(ys[j], 1.0 / r);
            double c = dot(w.components, u);
            double e = c - nus[j];
            // d/dy [w'y/|y|] = (w - (w'u)u)/|y|
            Vec g = w.components;
            axpy(-c, u, g);
            axpy(-cfg.step_size * 2.0 * e / r, g, ys[j]);
            if (norm2(ys[j]) <= 1e-9) ys[j] = u;  // fell toward the origin; reset direction
        }
        ++it;
        double res = residual_of(ys);
        if (res < best_res) {
            best_res = res;
            best = ys;
        }
        converged = best_res <= cfg.tol;
    }

    PerturbationIterOutcome out;
    out.converged = converged;
    out.iterations = it;
    out.result.target_similarities = nus;
    out.result.raw = best;
    out.result.embeddings.reserve(m);
    out.result.achieved_similarities.reserve(m);
    double res_sum = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        UnitVector e(best[j]);
        double a = cosine(w, e);
        out.result.achieved_similarities.push_back(a);
        out.result.embeddings.push_back(std::move(e));
        double err = a - nus[j];
        res_sum += err * err;
    }
    out.result.residual = res_sum;
    return out;
}

}  // namespace id3
