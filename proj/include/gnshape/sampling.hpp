#pragma once

#include <random>
#include <variant>

#include "gnshape/geometry.hpp"
#include "gnshape/pointcloud.hpp"
#include "gnshape/residuals.hpp"

namespace gnshape {

struct ProjectionConfig {
    double tol = 1e-9;      // |f| acceptance threshold
    int max_iter = 50;
    double step_cap = 0.0;  // 0 resolves to 0.1 * half the box diagonal
    int bisection_depth = 12;

    void validate() const {
        if (!(tol > 0.0)) throw Error("ProjectionConfig: tol must be positive");
        if (max_iter < 1) throw Error("ProjectionConfig: max_iter must be >= 1");
    }

    double resolved_step_cap(const BoxBounds& box) const {
        return step_cap > 0.0 ? step_cap : 0.05 * box.diagonal();
    }
};

/// Sampling domain of one loss term.
struct BoxDomain {
    BoxBounds box;
};

/// Uniform draws from `box` filtered by `keep` (e.g. the complement of a
/// design region).
struct RejectionDomain {
    BoxBounds box;
    std::function<bool(const Vec3&)> keep;
    int max_attempts_per_point = 1000;
};

/// Union of parametric curves, sampled uniformly in curve parameter with the
/// curve index drawn uniformly.
struct CurveDomain {
    std::vector<Curve> curves;
};

/// The moving zero level set of the optimized field.
struct LevelSetDomain {
    BoxBounds box;
    ProjectionConfig projection;
    int seed_attempt_factor = 50;  // random segments tried per requested point
};

/// Fixed oriented point set; samples carry the stored normals as targets.
struct CloudDomain {
    std::shared_ptr<const OrientedPointCloud> cloud;
};

using Sampler = std::variant<BoxDomain, RejectionDomain, CurveDomain, LevelSetDomain, CloudDomain>;

/// One term's evaluation points for one iteration.
struct SampleBatch {
    std::vector<Vec3> points;
    std::vector<PointMeta> metas;
    int requested = 0;
    int converged = 0;       // level-set terms: points that reached |f| <= tol
    bool moving_domain = false;
    double mean_sq_residual = 0.0;  // level-set terms: diagnostic mean of r^2
};

inline std::vector<Vec3> sample_box(const BoxBounds& box, int n, std::mt19937_64& rng) {
    box.validate();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Vec3> pts(static_cast<std::size_t>(n));
    for (auto& p : pts)
        for (int k = 0; k < 3; ++k) p[k] = box.lo[k] + unit(rng) * (box.hi[k] - box.lo[k]);
    return pts;
}

inline std::vector<Vec3> sample_box(const BoxBounds& box, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return sample_box(box, n, rng);
}

struct BinarySearchResult {
    std::vector<Vec3> points;
    int rejected = 0;
};

/// Bisects segments (x_low, x_high) with f(x_low) < 0 < f(x_high) toward the
/// zero crossing. Value-only: never evaluates jets. Pairs violating the sign
/// precondition are skipped and counted.
inline BinarySearchResult sample_surface_binary(
    const Field& field, const std::vector<std::pair<Vec3, Vec3>>& endpoint_pairs,
    int depth) {
    BinarySearchResult out;
    out.points.reserve(endpoint_pairs.size());
    for (const auto& [low_in, high_in] : endpoint_pairs) {
        Vec3 low = low_in, high = high_in;
        if (!(field.eval(low) < 0.0 && field.eval(high) > 0.0)) {
            ++out.rejected;
            continue;
        }
        for (int d = 0; d < depth; ++d) {
            const Vec3 mid = 0.5 * (low + high);
            if (field.eval(mid) < 0.0)
                low = mid;
            else
                high = mid;
        }
        out.points.push_back(0.5 * (low + high));
    }
    return out;
}

struct NewtonProjectionResult {
    std::vector<Vec3> points;
    std::vector<char> converged;
    int converged_count = 0;
};

/// Orthogonal Newton projection x <- x - f(x)/|grad f(x)| * n with a step cap,
/// until |f| <= tol. Non-converged points are flagged (including gradient
/// breakdowns) and left at their last iterate.
inline NewtonProjectionResult sample_surface_newton(const Field& field,
                                                    const std::vector<Vec3>& init_points,
                                                    const ProjectionConfig& cfg,
                                                    const BoxBounds& box) {
    cfg.validate();
    const double cap = cfg.resolved_step_cap(box);
    NewtonProjectionResult out;
    out.points.resize(init_points.size());
    out.converged.assign(init_points.size(), 0);

    parallel_for(init_points.size(), [&](std::size_t i) {
        Vec3 x = init_points[i];
        bool ok = false;
        for (int it = 0; it < cfg.max_iter; ++it) {
            const double f = field.eval(x);
            if (std::abs(f) <= cfg.tol) {
                ok = true;
                break;
            }
            const Jet2 jet = field.jet2(x);
            const double q = jet.grad.norm();
            if (q < kGradientFloor) break;
            Vec3 step = (jet.value / q) * (jet.grad / q);
            const double len = step.norm();
            if (len > cap) step *= cap / len;
            x -= step;
        }
        // the loop checks |f| before each step; cover the final step too
        if (!ok && std::abs(field.eval(x)) <= cfg.tol) ok = true;
        out.points[i] = x;
        out.converged[i] = ok ? 1 : 0;
    });
    for (char c : out.converged) out.converged_count += c;
    return out;
}

/// Bisection-seeded Newton sampling of the zero level set: random segments
/// through the box filtered by the sign condition, bisected to a coarse
/// bracket, then refined to |f| <= tol. Returns only converged points.
inline SampleBatch sample_level_set(const Field& field, const LevelSetDomain& domain, int n,
                                    std::uint64_t seed) {
    SampleBatch batch;
    batch.requested = n;
    batch.moving_domain = true;
    std::mt19937_64 rng(seed);

    std::vector<std::pair<Vec3, Vec3>> pairs;
    pairs.reserve(static_cast<std::size_t>(n));
    const long max_attempts = static_cast<long>(domain.seed_attempt_factor) * n;
    for (long attempt = 0; attempt < max_attempts && pairs.size() < std::size_t(n);
         ++attempt) {
        const auto ends = sample_box(domain.box, 2, rng);
        const double fa = field.eval(ends[0]);
        const double fb = field.eval(ends[1]);
        if (fa < 0.0 && fb > 0.0)
            pairs.emplace_back(ends[0], ends[1]);
        else if (fb < 0.0 && fa > 0.0)
            pairs.emplace_back(ends[1], ends[0]);
    }

    const auto coarse =
        sample_surface_binary(field, pairs, domain.projection.bisection_depth);
    const auto refined =
        sample_surface_newton(field, coarse.points, domain.projection, domain.box);

    batch.points.reserve(refined.points.size());
    for (std::size_t i = 0; i < refined.points.size(); ++i)
        if (refined.converged[i]) batch.points.push_back(refined.points[i]);
    batch.converged = static_cast<int>(batch.points.size());
    batch.metas.resize(batch.points.size());
    for (std::size_t i = 0; i < batch.points.size(); ++i)
        batch.metas[i].point = batch.points[i];
    if (batch.points.empty())
        throw EmptySurfaceError(
            "level-set sampling produced no converged points; the zero level set may have "
            "vanished");
    return batch;
}

}  // namespace gnshape
