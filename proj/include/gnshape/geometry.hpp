#pragma once

#include <algorithm>
#include <cmath>
#include <memory>

#include "gnshape/field.hpp"

namespace gnshape {

struct BoxBounds {
    Vec3 lo = Vec3(-1, -1, -1);
    Vec3 hi = Vec3(1, 1, 1);

    void validate() const {
        for (int k = 0; k < 3; ++k)
            if (!(lo[k] < hi[k])) throw Error("BoxBounds: need lo < hi per axis");
    }
    Vec3 extent() const { return hi - lo; }
    Vec3 center() const { return 0.5 * (lo + hi); }
    double diagonal() const { return extent().norm(); }
    bool contains(const Vec3& x) const {
        for (int k = 0; k < 3; ++k)
            if (x[k] < lo[k] || x[k] > hi[k]) return false;
        return true;
    }
};

/// Jet of a profile function phi(rho, z) in the half-plane rho >= 0.
struct ProfileJet {
    double value = 0, d_rho = 0, d_z = 0;
    double d_rho_rho = 0, d_rho_z = 0, d_z_z = 0;
};

/// Lifts a profile jet to the 3D jet of f(x) = phi(sqrt(x0^2+x1^2), x2).
/// Singular on the rho = 0 axis.
inline Jet2 revolve_jet(const Vec3& x, const ProfileJet& p) {
    const double rho = std::hypot(x[0], x[1]);
    const Vec3 grad_rho(x[0] / rho, x[1] / rho, 0.0);
    Mat3 hess_rho = Mat3::Zero();
    hess_rho(0, 0) = 1.0 - grad_rho[0] * grad_rho[0];
    hess_rho(1, 1) = 1.0 - grad_rho[1] * grad_rho[1];
    hess_rho(0, 1) = hess_rho(1, 0) = -grad_rho[0] * grad_rho[1];
    hess_rho /= rho;
    const Vec3 ez(0, 0, 1);

    Jet2 j;
    j.value = p.value;
    j.grad = p.d_rho * grad_rho + p.d_z * ez;
    j.hess = p.d_rho_rho * grad_rho * grad_rho.transpose() +
             p.d_rho_z * (grad_rho * ez.transpose() + ez * grad_rho.transpose()) +
             p.d_z_z * ez * ez.transpose() + p.d_rho * hess_rho;
    return j;
}

inline Jet2 sphere_sdf_jet(const Vec3& x, double radius) {
    const double r = x.norm();
    Jet2 j;
    j.value = r - radius;
    const Vec3 n = x / r;
    j.grad = n;
    j.hess = (Mat3::Identity() - n * n.transpose()) / r;
    return j;
}

inline Jet2 cylinder_sdf_jet(const Vec3& x, double radius) {
    ProfileJet p;
    p.value = std::hypot(x[0], x[1]) - radius;
    p.d_rho = 1.0;
    return revolve_jet(x, p);
}

inline Jet2 plane_sdf_jet(const Vec3& x) {
    Jet2 j;
    j.value = x[2];
    j.grad = Vec3(0, 0, 1);
    return j;
}

/// Implicit gauge of the catenoid with neck radius c:
/// F(x) = sqrt(x0^2 + x1^2) - c cosh(x2 / c). Zero exactly on the catenoid.
inline double catenoid_implicit(const Vec3& x, double c) {
    return std::hypot(x[0], x[1]) - c * std::cosh(x[2] / c);
}

inline Jet2 catenoid_implicit_jet(const Vec3& x, double c) {
    ProfileJet p;
    p.value = std::hypot(x[0], x[1]) - c * std::cosh(x[2] / c);
    p.d_rho = 1.0;
    p.d_z = -std::sinh(x[2] / c);
    p.d_z_z = -std::cosh(x[2] / c) / c;
    return revolve_jet(x, p);
}

/// Signed distance to the mantle (lateral shell) of a truncated cone with
/// bottom radius at z = -height/2 and top radius at z = +height/2. Negative
/// on the axis side. The magnitude is the exact Euclidean distance to the
/// mantle; the sign has a branch cut along the rim extensions (an open shell
/// admits no globally continuous signed distance), so the field is an exact
/// SDF only where the profile projects onto the mantle interior.
inline Jet2 frustum_shell_jet(const Vec3& x, double r_bottom, double r_top, double height) {
    const double rho = std::hypot(x[0], x[1]);
    const double z = x[2];
    const Eigen::Vector2d a(r_bottom, -0.5 * height);
    const Eigen::Vector2d b(r_top, 0.5 * height);
    const Eigen::Vector2d e = b - a;
    const Eigen::Vector2d q(rho, z);
    const Eigen::Vector2d w = q - a;
    const double len2 = e.squaredNorm();
    const double t = w.dot(e) / len2;
    const double cross = e[0] * w[1] - e[1] * w[0];

    ProfileJet p;
    if (t > 0.0 && t < 1.0) {
        // distance to the line; the profile is affine in (rho, z)
        const double len = std::sqrt(len2);
        p.value = -cross / len;
        p.d_rho = e[1] / len;
        p.d_z = -e[0] / len;
    } else {
        // distance to a rim vertex, signed by line side
        const Eigen::Vector2d v = t <= 0.0 ? a : b;
        const Eigen::Vector2d u = q - v;
        const double d = u.norm();
        const double s = cross >= 0.0 ? -1.0 : 1.0;
        p.value = s * d;
        p.d_rho = s * u[0] / d;
        p.d_z = s * u[1] / d;
        p.d_rho_rho = s * u[1] * u[1] / (d * d * d);
        p.d_z_z = s * u[0] * u[0] / (d * d * d);
        p.d_rho_z = -s * u[0] * u[1] / (d * d * d);
    }
    return revolve_jet(x, p);
}

/// Enneper minimal surface in the classical polynomial parametrization.
inline Vec3 enneper_point(double u, double v) {
    return Vec3(u - u * u * u / 3.0 + u * v * v, -v + v * v * v / 3.0 - u * u * v,
                u * u - v * v);
}

inline Vec3 enneper_du(double u, double v) {
    return Vec3(1.0 - u * u + v * v, -2.0 * u * v, 2.0 * u);
}

inline Vec3 enneper_dv(double u, double v) {
    return Vec3(2.0 * u * v, -1.0 + v * v - u * u, -2.0 * v);
}

inline Vec3 enneper_duu(double u, double v) { return Vec3(-2.0 * u, -2.0 * v, 2.0); }
inline Vec3 enneper_duv(double u, double v) { return Vec3(2.0 * v, -2.0 * u, 0.0); }
inline Vec3 enneper_dvv(double u, double v) { return Vec3(2.0 * u, 2.0 * v, -2.0); }

/// Mean curvature (average of principal curvatures) of a parametric patch
/// from its fundamental forms. Used as an oracle for the ground truths.
template <typename P, typename Pu, typename Pv, typename Puu, typename Puv, typename Pvv>
double parametric_mean_curvature(P&& /*point*/, Pu&& pu_fn, Pv&& pv_fn, Puu&& puu_fn,
                                 Puv&& puv_fn, Pvv&& pvv_fn, double u, double v) {
    const Vec3 pu = pu_fn(u, v), pv = pv_fn(u, v);
    const Vec3 n = pu.cross(pv).normalized();
    const double E = pu.dot(pu), F = pu.dot(pv), G = pv.dot(pv);
    const double L = puu_fn(u, v).dot(n), M = puv_fn(u, v).dot(n), N = pvv_fn(u, v).dot(n);
    return (E * N - 2.0 * F * M + G * L) / (2.0 * (E * G - F * F));
}

/// Parametric curve on [0, 1).
struct Curve {
    std::function<Vec3(double)> point;
};

inline Curve circle_z(double radius, double z) {
    return Curve{[radius, z](double t) {
        const double a = 2.0 * M_PI * t;
        return Vec3(radius * std::cos(a), radius * std::sin(a), z);
    }};
}

inline Curve enneper_rim(double r0) {
    return Curve{[r0](double t) {
        const double a = 2.0 * M_PI * t;
        return enneper_point(r0 * std::cos(a), r0 * std::sin(a));
    }};
}

enum class SurfaceKind { Sphere, Cylinder, Plane, ConeFrustum, Catenoid, Enneper };

/// Analytic reference surface: closed-form SDF where one exists, implicit
/// gauge where available, boundary curves, and exact or numerically refined
/// nearest-surface distance for evaluation.
class AnalyticSurface {
public:
    static AnalyticSurface sphere(double radius) {
        AnalyticSurface s(SurfaceKind::Sphere);
        s.radius_ = radius;
        return s;
    }
    static AnalyticSurface cylinder(double radius) {
        AnalyticSurface s(SurfaceKind::Cylinder);
        s.radius_ = radius;
        return s;
    }
    static AnalyticSurface plane() { return AnalyticSurface(SurfaceKind::Plane); }
    static AnalyticSurface cone_frustum(double r_bottom, double r_top, double height) {
        AnalyticSurface s(SurfaceKind::ConeFrustum);
        s.r_bottom_ = r_bottom;
        s.r_top_ = r_top;
        s.height_ = height;
        return s;
    }
    static AnalyticSurface catenoid(double c, double z_max) {
        AnalyticSurface s(SurfaceKind::Catenoid);
        s.c_ = c;
        s.z_max_ = z_max;
        return s;
    }
    static AnalyticSurface enneper(double r0) {
        AnalyticSurface s(SurfaceKind::Enneper);
        s.r0_ = r0;
        s.build_enneper_grid();
        return s;
    }

    SurfaceKind kind() const { return kind_; }
    double radius() const { return radius_; }
    double neck() const { return c_; }
    double z_max() const { return z_max_; }
    double rim_radius() const { return r0_; }

    bool has_sdf() const {
        return kind_ == SurfaceKind::Sphere || kind_ == SurfaceKind::Cylinder ||
               kind_ == SurfaceKind::Plane || kind_ == SurfaceKind::ConeFrustum;
    }

    Jet2 sdf_jet(const Vec3& x) const {
        switch (kind_) {
            case SurfaceKind::Sphere: return sphere_sdf_jet(x, radius_);
            case SurfaceKind::Cylinder: return cylinder_sdf_jet(x, radius_);
            case SurfaceKind::Plane: return plane_sdf_jet(x);
            case SurfaceKind::ConeFrustum:
                return frustum_shell_jet(x, r_bottom_, r_top_, height_);
            default: throw Error("surface has no closed-form SDF");
        }
    }

    double sdf(const Vec3& x) const {
        switch (kind_) {
            case SurfaceKind::Sphere: return x.norm() - radius_;
            case SurfaceKind::Cylinder: return std::hypot(x[0], x[1]) - radius_;
            case SurfaceKind::Plane: return x[2];
            case SurfaceKind::ConeFrustum:
                return frustum_shell_jet(x, r_bottom_, r_top_, height_).value;
            default: throw Error("surface has no closed-form SDF");
        }
    }

    bool has_implicit() const { return kind_ != SurfaceKind::Enneper; }

    Jet2 implicit_jet(const Vec3& x) const {
        if (kind_ == SurfaceKind::Catenoid) return catenoid_implicit_jet(x, c_);
        return sdf_jet(x);
    }

    /// Field wrapper over the implicit gauge (SDF where available).
    std::shared_ptr<AnalyticField> implicit_field() const {
        AnalyticSurface copy = *this;
        return std::make_shared<AnalyticField>(
            [copy](const Vec3& x) { return copy.implicit_jet(x); });
    }

    /// Interface curves of the benchmark tasks (rings / rim); empty for the
    /// unbounded primitives.
    std::vector<Curve> boundary_curves() const {
        switch (kind_) {
            case SurfaceKind::Catenoid: {
                const double r = c_ * std::cosh(z_max_ / c_);
                return {circle_z(r, -z_max_), circle_z(r, z_max_)};
            }
            case SurfaceKind::ConeFrustum:
                return {circle_z(r_bottom_, -0.5 * height_), circle_z(r_top_, 0.5 * height_)};
            case SurfaceKind::Enneper: return {enneper_rim(r0_)};
            default: return {};
        }
    }

    /// Whether a sample participates in the chamfer measurement: the learned
    /// zero set continues past the prescribed interface, so evaluation is
    /// restricted to the region the ground truth actually covers.
    bool in_band(const Vec3& x) const {
        switch (kind_) {
            case SurfaceKind::Catenoid: return std::abs(x[2]) <= z_max_;
            case SurfaceKind::ConeFrustum: return std::abs(x[2]) <= 0.5 * height_;
            case SurfaceKind::Enneper: {
                auto [dist, u, v] = enneper_nearest(x);
                (void)dist;
                return u * u + v * v <= 0.98 * 0.98 * r0_ * r0_;
            }
            default: return true;
        }
    }

    /// Unsigned distance to the truncated reference surface.
    double nearest_distance(const Vec3& x) const {
        switch (kind_) {
            case SurfaceKind::Sphere: return std::abs(x.norm() - radius_);
            case SurfaceKind::Cylinder: return std::abs(std::hypot(x[0], x[1]) - radius_);
            case SurfaceKind::Plane: return std::abs(x[2]);
            case SurfaceKind::ConeFrustum:
                return std::abs(frustum_shell_jet(x, r_bottom_, r_top_, height_).value);
            case SurfaceKind::Catenoid: return catenoid_nearest(x);
            case SurfaceKind::Enneper: return std::get<0>(enneper_nearest(x));
        }
        throw Error("unreachable");
    }

    /// Point on the surface at normalized parameters (a, b) in [0,1)^2.
    Vec3 parametric_point(double a, double b) const {
        switch (kind_) {
            case SurfaceKind::Sphere: {
                const double phi = 2.0 * M_PI * a;
                const double cz = 2.0 * b - 1.0;
                const double s = std::sqrt(std::max(0.0, 1.0 - cz * cz));
                return radius_ * Vec3(s * std::cos(phi), s * std::sin(phi), cz);
            }
            case SurfaceKind::Cylinder: {
                const double phi = 2.0 * M_PI * a;
                return Vec3(radius_ * std::cos(phi), radius_ * std::sin(phi), 2.0 * b - 1.0);
            }
            case SurfaceKind::Plane:
                return Vec3(2.0 * a - 1.0, 2.0 * b - 1.0, 0.0);
            case SurfaceKind::ConeFrustum: {
                const double phi = 2.0 * M_PI * a;
                const double z = (b - 0.5) * height_;
                const double r = r_bottom_ + (r_top_ - r_bottom_) * b;
                return Vec3(r * std::cos(phi), r * std::sin(phi), z);
            }
            case SurfaceKind::Catenoid: {
                const double phi = 2.0 * M_PI * a;
                const double z = (2.0 * b - 1.0) * z_max_;
                const double r = c_ * std::cosh(z / c_);
                return Vec3(r * std::cos(phi), r * std::sin(phi), z);
            }
            case SurfaceKind::Enneper: {
                const double phi = 2.0 * M_PI * a;
                const double r = r0_ * std::sqrt(b);
                return enneper_point(r * std::cos(phi), r * std::sin(phi));
            }
        }
        throw Error("unreachable");
    }

private:
    explicit AnalyticSurface(SurfaceKind kind) : kind_(kind) {}

    double catenoid_nearest(const Vec3& x) const {
        // 1D profile problem: distance from (rho, z) to the curve
        // (c cosh(t/c), t), t in [-z_max, z_max]. Coarse scan then Newton.
        const double rho = std::hypot(x[0], x[1]);
        const double z = x[2];
        auto dist2 = [&](double t) {
            const double dr = rho - c_ * std::cosh(t / c_);
            const double dz = z - t;
            return dr * dr + dz * dz;
        };
        const int n = 256;
        double best_t = -z_max_, best = dist2(-z_max_);
        for (int i = 1; i <= n; ++i) {
            const double t = -z_max_ + 2.0 * z_max_ * i / n;
            const double d = dist2(t);
            if (d < best) {
                best = d;
                best_t = t;
            }
        }
        double t = best_t;
        for (int it = 0; it < 40; ++it) {
            const double ch = std::cosh(t / c_), sh = std::sinh(t / c_);
            const double dr = rho - c_ * ch;
            // g(t) = d/dt dist2 / 2 = -dr * sh - (z - t)
            const double g = -dr * sh - (z - t);
            const double gp = -dr * ch / c_ + sh * sh + 1.0;
            if (std::abs(gp) < 1e-14) break;
            double t_new = t - g / gp;
            t_new = std::clamp(t_new, -z_max_, z_max_);
            if (std::abs(t_new - t) < 1e-14) {
                t = t_new;
                break;
            }
            t = t_new;
        }
        if (dist2(t) > best) t = best_t;
        return std::sqrt(std::min(dist2(t), best));
    }

    void build_enneper_grid() {
        const int n = 512;
        grid_ = std::make_shared<std::vector<Vec3>>();
        grid_params_ = std::make_shared<std::vector<Eigen::Vector2d>>();
        grid_->reserve(n * n);
        grid_params_->reserve(n * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                // polar grid over the parameter disk, denser near the rim
                const double r = r0_ * std::sqrt((i + 0.5) / n);
                const double a = 2.0 * M_PI * (j + 0.5) / n;
                const double u = r * std::cos(a), v = r * std::sin(a);
                grid_->push_back(enneper_point(u, v));
                grid_params_->push_back(Eigen::Vector2d(u, v));
            }
    }

    std::tuple<double, double, double> enneper_nearest(const Vec3& x) const {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_i = 0;
        const auto& pts = *grid_;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const double d = (pts[i] - x).squaredNorm();
            if (d < best) {
                best = d;
                best_i = i;
            }
        }
        Eigen::Vector2d uv = (*grid_params_)[best_i];
        double f = best;
        for (int it = 0; it < 40; ++it) {
            const Vec3 r = enneper_point(uv[0], uv[1]) - x;
            Eigen::Matrix<double, 3, 2> J;
            J.col(0) = enneper_du(uv[0], uv[1]);
            J.col(1) = enneper_dv(uv[0], uv[1]);
            const Eigen::Matrix2d A = J.transpose() * J;
            const Eigen::Vector2d g = J.transpose() * r;
            Eigen::Vector2d step = A.ldlt().solve(g);
            double scale = 1.0;
            bool improved = false;
            for (int half = 0; half < 12; ++half) {
                Eigen::Vector2d cand = uv - scale * step;
                const double rr = cand.norm();
                if (rr > r0_) cand *= r0_ / rr;
                const double fc = (enneper_point(cand[0], cand[1]) - x).squaredNorm();
                if (fc < f) {
                    uv = cand;
                    f = fc;
                    improved = true;
                    break;
                }
                scale *= 0.5;
            }
            if (!improved) break;
        }
        return {std::sqrt(f), uv[0], uv[1]};
    }

    SurfaceKind kind_;
    double radius_ = 1.0;
    double c_ = 0.5;
    double z_max_ = 0.5;
    double r0_ = 0.9;
    double r_bottom_ = 0.8;
    double r_top_ = 0.4;
    double height_ = 1.2;
    std::shared_ptr<std::vector<Vec3>> grid_;
    std::shared_ptr<std::vector<Eigen::Vector2d>> grid_params_;
};

}  // namespace gnshape
