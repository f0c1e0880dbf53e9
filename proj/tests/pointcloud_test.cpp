#include "gnshape/pointcloud.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

using namespace gnshape;

namespace {

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

}  // namespace

TEST(PlyLoadTest, ThreePointRoundTrip) {
    const std::string path = temp_path("three.ply");
    write_file(path,
               "ply\n"
               "format ascii 1.0\n"
               "comment hand written\n"
               "element vertex 3\n"
               "property float x\nproperty float y\nproperty float z\n"
               "property float nx\nproperty float ny\nproperty float nz\n"
               "end_header\n"
               "0 0 0 0 0 1\n"
               "1 0.5 -0.25 1 0 0\n"
               "-2 4 8 0 1 0\n");
    const auto cloud = load_point_cloud(path, /*normalize=*/false);
    ASSERT_EQ(cloud.points.size(), 3u);
    EXPECT_EQ(cloud.points[1], Vec3(1, 0.5, -0.25));
    EXPECT_EQ(cloud.points[2], Vec3(-2, 4, 8));
    EXPECT_EQ(cloud.normals[0], Vec3(0, 0, 1));
}

TEST(PlyLoadTest, ExtraPropertiesAndOrderRespected) {
    const std::string path = temp_path("shuffled.ply");
    write_file(path,
               "ply\n"
               "format ascii 1.0\n"
               "element vertex 1\n"
               "property float nx\nproperty float ny\nproperty float nz\n"
               "property float quality\n"
               "property float x\nproperty float y\nproperty float z\n"
               "end_header\n"
               "0 0 1 0.5 7 8 9\n");
    const auto cloud = load_point_cloud(path, false);
    EXPECT_EQ(cloud.points[0], Vec3(7, 8, 9));
    EXPECT_EQ(cloud.normals[0], Vec3(0, 0, 1));
}

TEST(PlyLoadTest, MissingNormalsRejected) {
    const std::string path = temp_path("nonormals.ply");
    write_file(path,
               "ply\nformat ascii 1.0\nelement vertex 1\n"
               "property float x\nproperty float y\nproperty float z\n"
               "end_header\n0 0 0\n");
    EXPECT_THROW(load_point_cloud(path), ParseError);
}

TEST(PlyLoadTest, MalformedLineCarriesLineNumber) {
    const std::string path = temp_path("short.ply");
    write_file(path,
               "ply\nformat ascii 1.0\nelement vertex 2\n"
               "property float x\nproperty float y\nproperty float z\n"
               "property float nx\nproperty float ny\nproperty float nz\n"
               "end_header\n"
               "0 0 0 0 0 1\n"
               "1 2\n");
    try {
        load_point_cloud(path);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find(":12:"), std::string::npos) << e.what();
    }
}

TEST(ObjLoadTest, CountMismatchRejected) {
    const std::string path = temp_path("mismatch.obj");
    write_file(path, "v 0 0 0\nv 1 0 0\nvn 0 0 1\n");
    EXPECT_THROW(load_point_cloud(path), ParseError);
}

TEST(ObjLoadTest, PairsVerticesWithNormals) {
    const std::string path = temp_path("ok.obj");
    write_file(path, "# comment\nv 0 0 0\nvn 0 0 2\nv 1 2 3\nvn 1 0 0\nf 1 2\n");
    const auto cloud = load_point_cloud(path, false);
    ASSERT_EQ(cloud.points.size(), 2u);
    EXPECT_EQ(cloud.points[1], Vec3(1, 2, 3));
    EXPECT_NEAR(cloud.normals[0].norm(), 1.0, 1e-12);  // renormalized
}

TEST(WritePointCloudTest, WriteThenLoadWithinAsciiPrecision) {
    const std::string path = temp_path("roundtrip.ply");
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::vector<Vec3> points, normals;
    std::vector<double> scalars;
    for (int i = 0; i < 50; ++i) {
        points.emplace_back(coord(rng), coord(rng), coord(rng));
        normals.push_back(Vec3(coord(rng), coord(rng), coord(rng)).normalized());
        scalars.push_back(std::abs(coord(rng)));
    }
    write_point_cloud(path, points, &normals, &scalars);
    const auto cloud = load_point_cloud(path, false);
    ASSERT_EQ(cloud.points.size(), points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        EXPECT_LT((cloud.points[i] - points[i]).norm(), 1e-6);
        EXPECT_LT((cloud.normals[i] - normals[i]).norm(), 1e-6);
    }
}

TEST(WritePointCloudTest, EmptyCloudIsValidPly) {
    const std::string path = temp_path("empty.ply");
    write_point_cloud(path, {});
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "ply");
    bool saw_count = false;
    while (std::getline(in, line))
        if (line == "element vertex 0") saw_count = true;
    EXPECT_TRUE(saw_count);
}

TEST(WritePointCloudTest, ScalarLengthMismatchRejected) {
    const std::vector<Vec3> points = {Vec3(0, 0, 0), Vec3(1, 0, 0)};
    const std::vector<double> scalars = {1.0};
    EXPECT_THROW(write_point_cloud(temp_path("bad.ply"), points, nullptr, &scalars), Error);
}

TEST(NormalizationTest, CloudFitsUnitBoxWithMargin) {
    const std::string path = temp_path("big.ply");
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> coord(10.0, 90.0);
    std::ostringstream body;
    body.precision(12);
    const int n = 35000;
    body << "ply\nformat ascii 1.0\nelement vertex " << n << "\n"
         << "property float x\nproperty float y\nproperty float z\n"
         << "property float nx\nproperty float ny\nproperty float nz\n"
         << "end_header\n";
    std::vector<Vec3> raw;
    for (int i = 0; i < n; ++i) {
        const Vec3 p(coord(rng), 0.5 * coord(rng), 2.0 * coord(rng));
        raw.push_back(p);
        body << p[0] << " " << p[1] << " " << p[2] << " 0 0 1\n";
    }
    write_file(path, body.str());

    const auto cloud = load_point_cloud(path);
    ASSERT_EQ(cloud.points.size(), raw.size());
    for (const auto& p : cloud.points)
        for (int k = 0; k < 3; ++k) EXPECT_LE(std::abs(p[k]), 0.45 + 1e-12);

    // recorded transform maps normalized points back to source coordinates
    for (std::size_t i = 0; i < 100; ++i) {
        const Vec3 back =
            cloud.points[i] / cloud.normalize_scale + cloud.normalize_offset;
        EXPECT_LT((back - raw[i]).norm(), 1e-6);  // file stores limited digits
    }
}
