#include "gnshape/geometry.hpp"

#include <gtest/gtest.h>

#include <random>

#include "gnshape/residuals.hpp"
#include "test_oracles.hpp"

using namespace gnshape;
namespace gt = gnshape::testing;

TEST(BoxBoundsTest, Validation) {
    BoxBounds ok;
    EXPECT_NO_THROW(ok.validate());
    BoxBounds bad;
    bad.lo = Vec3(1, 0, 0);
    bad.hi = Vec3(0, 1, 1);
    EXPECT_THROW(bad.validate(), Error);
    EXPECT_TRUE(ok.contains(Vec3(0.5, -0.5, 0.0)));
    EXPECT_FALSE(ok.contains(Vec3(1.5, 0, 0)));
}

TEST(CatenoidTest, ImplicitVanishesOnSurface) {
    EXPECT_NEAR(catenoid_implicit(Vec3(std::cosh(1.0), 0, 1), 1.0), 0.0, 1e-15);
    EXPECT_NEAR(catenoid_implicit(Vec3(1, 0, 0), 1.0), 0.0, 1e-15);  // neck
}

TEST(CatenoidTest, MinimalSurfaceHasZeroMeanCurvature) {
    const auto cat = AnalyticSurface::catenoid(0.5, 0.5);
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const Vec3 x = cat.parametric_point(unit(rng), unit(rng));
        const Jet2 jet = cat.implicit_jet(x);
        const double div = residual_at(ResidualKind::MeanCurvature, jet, {}).values[0];
        EXPECT_LT(std::abs(div), 1e-8);
    }
}

TEST(AnalyticSdfTest, ClosedFormValues) {
    const auto sphere = AnalyticSurface::sphere(1.0);
    EXPECT_NEAR(sphere.sdf(Vec3(2, 0, 0)), 1.0, 1e-15);
    EXPECT_NEAR(sphere.sdf(Vec3(0, 0, 0)), -1.0, 1e-15);

    const auto cyl = AnalyticSurface::cylinder(1.0);
    EXPECT_NEAR(cyl.sdf(Vec3(3, 0, -2.0)), 2.0, 1e-15);
    EXPECT_NEAR(cyl.sdf(Vec3(3, 0, 5.0)), 2.0, 1e-15);

    const auto plane = AnalyticSurface::plane();
    EXPECT_NEAR(plane.sdf(Vec3(0.3, -0.9, -0.7)), -0.7, 1e-15);
}

TEST(AnalyticSdfTest, UnsupportedSurfacesThrow) {
    EXPECT_THROW(AnalyticSurface::catenoid(0.5, 0.5).sdf(Vec3(1, 0, 0)), Error);
    EXPECT_THROW(AnalyticSurface::enneper(0.9).sdf(Vec3(1, 0, 0)), Error);
}

TEST(AnalyticSdfTest, OneLipschitzOnRandomPairs) {
    const std::vector<AnalyticSurface> surfaces = {
        AnalyticSurface::sphere(0.7), AnalyticSurface::cylinder(0.6),
        AnalyticSurface::plane()};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    for (const auto& s : surfaces)
        for (int i = 0; i < 200; ++i) {
            const Vec3 a(coord(rng), coord(rng), coord(rng));
            const Vec3 b(coord(rng), coord(rng), coord(rng));
            EXPECT_LE(std::abs(s.sdf(a) - s.sdf(b)), (a - b).norm() + 1e-12);
        }
}

TEST(AnalyticSdfTest, FrustumShellLipschitzWithinMantleRegion) {
    // The shell gauge has a sign branch cut beyond the rims; within the
    // region projecting onto the mantle interior it is an exact signed
    // distance and therefore 1-Lipschitz.
    const double rb = 0.8, rt = 0.4, h = 1.2;
    const auto cone = AnalyticSurface::cone_frustum(rb, rt, h);
    auto mantle_param = [&](const Vec3& x) {
        const Eigen::Vector2d e(rt - rb, h);
        const Eigen::Vector2d w(std::hypot(x[0], x[1]) - rb, x[2] + 0.5 * h);
        return w.dot(e) / e.squaredNorm();
    };
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    int checked = 0;
    while (checked < 200) {
        const Vec3 a(coord(rng), coord(rng), coord(rng));
        const Vec3 b(coord(rng), coord(rng), coord(rng));
        const double ta = mantle_param(a), tb = mantle_param(b);
        if (ta <= 0.02 || ta >= 0.98 || tb <= 0.02 || tb >= 0.98) continue;
        EXPECT_LE(std::abs(cone.sdf(a) - cone.sdf(b)), (a - b).norm() + 1e-12);
        ++checked;
    }
}

TEST(AnalyticSdfTest, JetsMatchFiniteDifferences) {
    // second-difference oracle over the closed-form jets
    const std::vector<AnalyticSurface> surfaces = {
        AnalyticSurface::sphere(0.8), AnalyticSurface::cylinder(0.7),
        AnalyticSurface::cone_frustum(0.8, 0.4, 1.2)};
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> coord(0.15, 0.9);
    for (const auto& s : surfaces) {
        AnalyticField field([s](const Vec3& x) { return s.sdf_jet(x); });
        for (int i = 0; i < 10; ++i) {
            const Vec3 x(coord(rng), coord(rng), coord(rng) - 0.5);
            const Jet2 jet = s.sdf_jet(x);
            const Vec3 g_fd = gt::grad_fd(field, x, 1e-5);
            EXPECT_LT((jet.grad - g_fd).norm(), 1e-7);
            const Mat3 h_fd = gt::hess_fd(field, x, 1e-4);
            EXPECT_LT((jet.hess - h_fd).norm(), 1e-5);
        }
    }
    AnalyticField cat_field([](const Vec3& x) { return catenoid_implicit_jet(x, 0.5); });
    for (int i = 0; i < 10; ++i) {
        const Vec3 x(coord(rng), coord(rng), coord(rng) - 0.5);
        const Jet2 jet = catenoid_implicit_jet(x, 0.5);
        EXPECT_LT((jet.grad - gt::grad_fd(cat_field, x, 1e-5)).norm(), 1e-7);
        EXPECT_LT((jet.hess - gt::hess_fd(cat_field, x, 1e-4)).norm(), 1e-5);
    }
}

TEST(ParametricTest, ImplicitFormVanishesOnParametricImage) {
    const std::vector<AnalyticSurface> surfaces = {
        AnalyticSurface::sphere(0.8), AnalyticSurface::cylinder(0.7),
        AnalyticSurface::cone_frustum(0.8, 0.4, 1.2), AnalyticSurface::catenoid(0.5, 0.5)};
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unit(0.01, 0.99);
    for (const auto& s : surfaces)
        for (int i = 0; i < 25; ++i) {
            const Vec3 x = s.parametric_point(unit(rng), unit(rng));
            EXPECT_LT(std::abs(s.implicit_jet(x).value), 1e-9);
        }
}

TEST(ParametricTest, FrustumMantleIsDevelopable) {
    const auto cone = AnalyticSurface::cone_frustum(0.8, 0.4, 1.2);
    std::mt19937_64 rng(19);
    std::uniform_real_distribution<double> unit(0.02, 0.98);
    for (int i = 0; i < 20; ++i) {
        const Vec3 x = cone.parametric_point(unit(rng), unit(rng));
        const Jet2 jet = cone.sdf_jet(x);
        const double kg = residual_at(ResidualKind::GaussCurvature, jet, {}).values[0];
        EXPECT_LT(std::abs(kg), 1e-10);
    }
}

TEST(EnneperTest, ParametricMeanCurvatureVanishes) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> span(-0.9, 0.9);
    for (int i = 0; i < 30; ++i) {
        const double u = span(rng), v = span(rng);
        const double h = parametric_mean_curvature(enneper_point, enneper_du, enneper_dv,
                                                   enneper_duu, enneper_duv, enneper_dvv,
                                                   u, v);
        EXPECT_LT(std::abs(h), 1e-8) << "u=" << u << " v=" << v;
    }
}

TEST(EnneperTest, NearestDistanceRefinesBelowGridResolution) {
    const auto enneper = AnalyticSurface::enneper(0.9);
    // points already on the surface
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> span(-0.6, 0.6);
    for (int i = 0; i < 10; ++i) {
        const double u = span(rng), v = span(rng);
        EXPECT_LT(enneper.nearest_distance(enneper_point(u, v)), 1e-7);
    }
    // point offset along the surface normal
    const double u = 0.3, v = -0.2;
    const Vec3 n = enneper_du(u, v).cross(enneper_dv(u, v)).normalized();
    const double offset = 0.05;
    EXPECT_NEAR(enneper.nearest_distance(enneper_point(u, v) + offset * n), offset, 1e-6);
}

TEST(CatenoidTest, NearestDistance) {
    const auto cat = AnalyticSurface::catenoid(0.5, 0.5);
    EXPECT_LT(cat.nearest_distance(cat.parametric_point(0.3, 0.7)), 1e-9);
    // radial offset at the neck: distance along the profile normal
    const Vec3 on(0.5, 0, 0);
    const Jet2 jet = cat.implicit_jet(on);
    const Vec3 step = 0.07 * jet.grad / jet.grad.norm();
    EXPECT_NEAR(cat.nearest_distance(on + step), 0.07, 1e-4);
}

TEST(SurfaceTest, BoundaryCurvesLieOnSurface) {
    const auto cat = AnalyticSurface::catenoid(0.5, 0.5);
    for (const auto& curve : cat.boundary_curves())
        for (double t : {0.0, 0.25, 0.77})
            EXPECT_LT(std::abs(cat.implicit_jet(curve.point(t)).value), 1e-12);

    const auto cone = AnalyticSurface::cone_frustum(0.8, 0.4, 1.2);
    for (const auto& curve : cone.boundary_curves())
        for (double t : {0.1, 0.5, 0.9})
            EXPECT_LT(std::abs(cone.sdf(curve.point(t))), 1e-12);

    const auto enneper = AnalyticSurface::enneper(0.9);
    const auto rim = enneper.boundary_curves();
    ASSERT_EQ(rim.size(), 1u);
    for (double t : {0.0, 0.3, 0.6})
        EXPECT_LT(enneper.nearest_distance(rim[0].point(t)), 1e-6);
}

TEST(SurfaceTest, MeasurementBands) {
    const auto cat = AnalyticSurface::catenoid(0.5, 0.5);
    EXPECT_TRUE(cat.in_band(Vec3(0.5, 0, 0.2)));
    EXPECT_FALSE(cat.in_band(Vec3(0.9, 0, 0.8)));

    const auto cone = AnalyticSurface::cone_frustum(0.8, 0.4, 1.2);
    EXPECT_TRUE(cone.in_band(Vec3(0.7, 0, 0.0)));
    EXPECT_FALSE(cone.in_band(Vec3(0.7, 0, 0.9)));
}
