#pragma once

#include <array>
#include <string>

#include "gnshape/field.hpp"

namespace gnshape {

enum class ResidualKind {
    DesignRegion,
    Interface,
    Normal,
    Eikonal,
    MeanCurvature,
    GaussCurvature,
    SurfaceStrain,
    Supervised,
};

inline const char* kind_name(ResidualKind kind) {
    switch (kind) {
        case ResidualKind::DesignRegion: return "design_region";
        case ResidualKind::Interface: return "interface";
        case ResidualKind::Normal: return "normal";
        case ResidualKind::Eikonal: return "eikonal";
        case ResidualKind::MeanCurvature: return "mean_curvature";
        case ResidualKind::GaussCurvature: return "gauss_curvature";
        case ResidualKind::SurfaceStrain: return "surface_strain";
        case ResidualKind::Supervised: return "supervised";
    }
    return "unknown";
}

/// Needs the gradient direction, i.e. divides by |grad f|.
inline bool kind_needs_normal(ResidualKind kind) {
    return kind == ResidualKind::Normal || kind == ResidualKind::MeanCurvature ||
           kind == ResidualKind::GaussCurvature || kind == ResidualKind::SurfaceStrain;
}

inline bool kind_is_curvature(ResidualKind kind) {
    return kind == ResidualKind::MeanCurvature || kind == ResidualKind::GaussCurvature ||
           kind == ResidualKind::SurfaceStrain;
}

/// Per-sample data a residual may need besides the jet.
struct PointMeta {
    Vec3 point = Vec3::Zero();
    double target_value = 0.0;
    Vec3 target_normal = Vec3::Zero();
    bool outside_design_region = false;
};

/// One or two residual entries produced at a sample point.
struct PointResidual {
    std::array<double, 2> values{0.0, 0.0};
    int count = 1;
};

struct PointSeeds {
    std::array<JetSeed, 2> seeds{};
    int count = 1;
};

/// adj(H) for a 3x3 matrix via the Cayley-Hamilton closed form
/// adj(H) = H^2 - tr(H) H + (tr(H)^2 - tr(H^2))/2 I.
inline Mat3 adjugate3(const Mat3& h) {
    const double tr = h.trace();
    const Mat3 h2 = h * h;
    return h2 - tr * h + 0.5 * (tr * tr - h2.trace()) * Mat3::Identity();
}

namespace detail {

inline void require_normal(ResidualKind kind, const Jet2& jet, const PointMeta& meta,
                           double floor) {
    if (jet.grad.norm() < floor)
        throw DegenerateGradientError(
            std::string("degenerate field gradient in ") + kind_name(kind) + " residual",
            meta.point);
}

inline double mean_curvature_divergence(const Jet2& jet) {
    const double q2 = jet.grad.squaredNorm();
    const double q = std::sqrt(q2);
    return (jet.hess.trace() * q2 - jet.grad.dot(jet.hess * jet.grad)) / (q2 * q);
}

inline double gauss_curvature(const Jet2& jet) {
    const double q2 = jet.grad.squaredNorm();
    return jet.grad.dot(adjugate3(jet.hess) * jet.grad) / (q2 * q2);
}

// Discriminant of the principal curvatures; tiny negative values are
// round-off, anything below -1e-9 means the jet is inconsistent.
inline double strain_discriminant(double kappa_m, double kappa_g, const PointMeta& meta) {
    const double disc = kappa_m * kappa_m - kappa_g;
    if (disc < -1e-9)
        throw NumericError("principal-curvature discriminant " + std::to_string(disc) +
                           " below tolerance at sample point");
    (void)meta;
    return std::max(0.0, disc);
}

}  // namespace detail

/// Pointwise residual of Table-style constraints evaluated from a jet.
inline PointResidual residual_at(ResidualKind kind, const Jet2& jet, const PointMeta& meta,
                                 double gradient_floor = kGradientFloor) {
    PointResidual out;
    switch (kind) {
        case ResidualKind::DesignRegion:
            if (!meta.outside_design_region)
                throw Error("design-region residual expects samples outside the region");
            out.values[0] = std::min(0.0, jet.value);
            return out;
        case ResidualKind::Interface:
            out.values[0] = jet.value;
            return out;
        case ResidualKind::Supervised:
            out.values[0] = jet.value - meta.target_value;
            return out;
        case ResidualKind::Eikonal:
            out.values[0] = jet.grad.norm() - 1.0;
            return out;
        case ResidualKind::Normal: {
            detail::require_normal(kind, jet, meta, gradient_floor);
            const double n_norm = meta.target_normal.norm();
            if (std::abs(n_norm - 1.0) > 1e-9)
                throw Error("normal residual target is not a unit vector");
            out.values[0] = jet.grad.dot(meta.target_normal) / jet.grad.norm() - 1.0;
            return out;
        }
        case ResidualKind::MeanCurvature:
            detail::require_normal(kind, jet, meta, gradient_floor);
            out.values[0] = detail::mean_curvature_divergence(jet);
            return out;
        case ResidualKind::GaussCurvature:
            detail::require_normal(kind, jet, meta, gradient_floor);
            out.values[0] = detail::gauss_curvature(jet);
            return out;
        case ResidualKind::SurfaceStrain: {
            detail::require_normal(kind, jet, meta, gradient_floor);
            const double kappa_m = 0.5 * detail::mean_curvature_divergence(jet);
            const double kappa_g = detail::gauss_curvature(jet);
            const double d = std::sqrt(detail::strain_discriminant(kappa_m, kappa_g, meta));
            out.values[0] = kappa_m + d;
            out.values[1] = kappa_m - d;
            out.count = 2;
            return out;
        }
    }
    throw Error("unreachable");
}

inline void mean_curvature_seed(const Jet2& jet, JetSeed& seed);
inline void gauss_curvature_seed(const Jet2& jet, JetSeed& seed);

/// Jet-space linearization of each residual entry, feeding the parameter
/// reverse pass. Must stay in sync with residual_at.
inline PointSeeds residual_seeds(ResidualKind kind, const Jet2& jet, const PointMeta& meta,
                                 double gradient_floor = kGradientFloor) {
    PointSeeds out;
    switch (kind) {
        case ResidualKind::DesignRegion:
            out.seeds[0].d_value = jet.value < 0.0 ? 1.0 : 0.0;
            return out;
        case ResidualKind::Interface:
        case ResidualKind::Supervised:
            out.seeds[0].d_value = 1.0;
            return out;
        case ResidualKind::Eikonal:
            detail::require_normal(kind, jet, meta, gradient_floor);
            out.seeds[0].d_grad = jet.grad / jet.grad.norm();
            return out;
        case ResidualKind::Normal: {
            detail::require_normal(kind, jet, meta, gradient_floor);
            const double q = jet.grad.norm();
            const Vec3& n = meta.target_normal;
            out.seeds[0].d_grad = n / q - jet.grad.dot(n) * jet.grad / (q * q * q);
            return out;
        }
        case ResidualKind::MeanCurvature: {
            detail::require_normal(kind, jet, meta, gradient_floor);
            mean_curvature_seed(jet, out.seeds[0]);
            return out;
        }
        case ResidualKind::GaussCurvature: {
            detail::require_normal(kind, jet, meta, gradient_floor);
            gauss_curvature_seed(jet, out.seeds[0]);
            return out;
        }
        case ResidualKind::SurfaceStrain: {
            detail::require_normal(kind, jet, meta, gradient_floor);
            const double kappa_m = 0.5 * detail::mean_curvature_divergence(jet);
            const double kappa_g = detail::gauss_curvature(jet);
            const double d = std::sqrt(detail::strain_discriminant(kappa_m, kappa_g, meta));
            JetSeed m_seed, g_seed;
            mean_curvature_seed(jet, m_seed);
            gauss_curvature_seed(jet, g_seed);
            m_seed.d_grad *= 0.5;
            m_seed.d_hess *= 0.5;
            out.count = 2;
            if (d > 1e-12) {
                // d(kappa_{1,2}) = d(kappa_m) +- (kappa_m d(kappa_m) - d(kappa_g)/2) / d
                const double a = kappa_m / d;
                const double b = -0.5 / d;
                out.seeds[0].d_grad = (1.0 + a) * m_seed.d_grad + b * g_seed.d_grad;
                out.seeds[0].d_hess = (1.0 + a) * m_seed.d_hess + b * g_seed.d_hess;
                out.seeds[1].d_grad = (1.0 - a) * m_seed.d_grad - b * g_seed.d_grad;
                out.seeds[1].d_hess = (1.0 - a) * m_seed.d_hess - b * g_seed.d_hess;
            } else {
                // umbilic: square-root branch is flat after clamping
                out.seeds[0] = m_seed;
                out.seeds[1] = m_seed;
            }
            return out;
        }
    }
    throw Error("unreachable");
}

inline void mean_curvature_seed(const Jet2& jet, JetSeed& seed) {
    const Vec3& g = jet.grad;
    const Mat3& h = jet.hess;
    const double q2 = g.squaredNorm();
    const double q = std::sqrt(q2);
    const double q3 = q2 * q;
    const double num = h.trace() * q2 - g.dot(h * g);
    seed.d_grad = (2.0 * h.trace() * g - 2.0 * (h * g)) / q3 - 3.0 * num * g / (q3 * q2);
    seed.d_hess = (q2 * Mat3::Identity() - g * g.transpose()) / q3;
}

inline void gauss_curvature_seed(const Jet2& jet, JetSeed& seed) {
    const Vec3& g = jet.grad;
    const Mat3& h = jet.hess;
    const double q2 = g.squaredNorm();
    const double q4 = q2 * q2;
    const Mat3 adj = adjugate3(h);
    const double num = g.dot(adj * g);
    const Vec3 hg = h * g;
    seed.d_grad = 2.0 * (adj * g) / q4 - 4.0 * num * g / (q4 * q2);
    seed.d_hess = (g * hg.transpose() + hg * g.transpose() - g.dot(hg) * Mat3::Identity() -
                   h.trace() * g * g.transpose() +
                   q2 * (h.trace() * Mat3::Identity() - h)) /
                  q4;
}

/// Sign-preserving magnitude clip so that the squared per-point energy
/// contribution stays at or below cap. Identity for cap = infinity.
inline double clip_residual(double value, double cap) {
    if (!(cap > 0.0)) throw Error("clip_residual: cap must be positive");
    if (value * value <= cap) return value;
    return value > 0.0 ? std::sqrt(cap) : -std::sqrt(cap);
}

inline bool clip_active(double value, double cap) { return value * value > cap; }

}  // namespace gnshape
