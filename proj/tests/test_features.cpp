// Copyright 2026 the pointface authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <random>

#include "pointface/features.hpp"
#include "testutil.hpp"

using namespace pointface;

namespace {

PointCloud plane_cloud(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    PointCloud cloud;
    cloud.points.resize(static_cast<std::size_t>(n));
    for (auto& p : cloud.points) p.position = Vec3(coord(rng), coord(rng), 0.0);
    return cloud;
}

Eigen::Matrix3d rotation_xyz(double a, double b, double c) {
    return (Eigen::AngleAxisd(a, Vec3::UnitX()) * Eigen::AngleAxisd(b, Vec3::UnitY()) *
            Eigen::AngleAxisd(c, Vec3::UnitZ()))
        .toRotationMatrix();
}

PointCloud transformed(const PointCloud& cloud, const Eigen::Matrix3d& rot, const Vec3& shift,
                       double scale = 1.0) {
    PointCloud out = cloud;
    for (auto& p : out.points) p.position = scale * (rot * p.position) + shift;
    return out;
}

}  // namespace

TEST_CASE("planar cloud: normals (0,0,1), curvature < 1e-6") {
    auto cloud = plane_cloud(400, 17);
    auto featured = compute_features(cloud, 20, Vec3(0, 0, 10));
    for (const auto& p : featured.points) {
        CHECK(p.normal.z() == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(std::abs(p.normal.norm() - 1.0) < 1e-6);
        CHECK(p.curvature < 1e-6);
    }
    CHECK(featured.has_normals);
    CHECK(featured.has_curvature);
}

TEST_CASE("k below 3 is rejected") {
    auto cloud = plane_cloud(10, 1);
    CHECK_THROWS_WITH_AS(estimate_normals(cloud, 2), "need >=3 neighbors for a plane fit",
                         std::invalid_argument);
}

TEST_CASE("collinear cloud is degenerate with fallback normal") {
    PointCloud cloud;
    cloud.points.resize(3);
    for (int i = 0; i < 3; ++i) cloud.points[static_cast<std::size_t>(i)].position = Vec3(i, 0, 0);
    std::vector<std::uint8_t> degenerate;
    auto featured = estimate_normals(cloud, 3, kDefaultViewpoint, &degenerate);
    for (int i = 0; i < 3; ++i) {
        CHECK(degenerate[static_cast<std::size_t>(i)] == 1);
        CHECK(featured.points[static_cast<std::size_t>(i)].normal == Vec3(0, 0, 1));
    }
}

TEST_CASE("sphere normals are radial within 5 degrees") {
    auto cloud = testutil::fibonacci_sphere(2000);
    auto featured = estimate_normals(cloud, 30, Vec3(0, 0, 0));  // viewpoint at center: inward
    int checked = 0;
    for (const auto& p : featured.points) {
        double c = p.normal.dot(-p.position.normalized());  // outward radial is -that
        double align = std::abs(c);
        CHECK(align > std::cos(5.0 * M_PI / 180.0));
        ++checked;
    }
    CHECK(checked == 2000);
}

TEST_CASE("sphere curvature is nearly constant (CoV < 5%)") {
    auto cloud = testutil::fibonacci_sphere(2000);
    auto featured = estimate_curvature(cloud, 30);
    double mean = 0.0;
    for (const auto& p : featured.points) mean += p.curvature;
    mean /= featured.size();
    double var = 0.0;
    for (const auto& p : featured.points) var += (p.curvature - mean) * (p.curvature - mean);
    var /= featured.size();
    CHECK(mean > 0.0);
    CHECK(std::sqrt(var) / mean < 0.05);
}

TEST_CASE("isotropic blob curvature approaches 1/3") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    PointCloud cloud;
    cloud.points.resize(3000);
    for (auto& p : cloud.points) p.position = Vec3(gauss(rng), gauss(rng), gauss(rng));
    auto featured = estimate_curvature(cloud, 3000);
    // With the whole isotropic blob as the neighborhood the eigenvalues equalize.
    CHECK(featured.points[0].curvature == doctest::Approx(1.0 / 3.0).epsilon(0.05));
    for (const auto& p : featured.points) CHECK(p.curvature <= 1.0 / 3.0 + 1e-9);
}

TEST_CASE("curvature is invariant under rigid transforms and uniform scale") {
    auto cloud = testutil::random_cloud(600, 23);
    auto base = estimate_curvature(cloud, 25);
    auto rot = rotation_xyz(0.3, -1.1, 0.7);

    auto moved = estimate_curvature(transformed(cloud, rot, Vec3(3, -2, 5)), 25);
    auto scaled = estimate_curvature(transformed(cloud, Eigen::Matrix3d::Identity(), Vec3::Zero(), 7.5), 25);
    for (int i = 0; i < cloud.size(); ++i) {
        CHECK(std::abs(moved.points[static_cast<std::size_t>(i)].curvature -
                       base.points[static_cast<std::size_t>(i)].curvature) < 1e-6);
        CHECK(std::abs(scaled.points[static_cast<std::size_t>(i)].curvature -
                       base.points[static_cast<std::size_t>(i)].curvature) < 1e-6);
    }
}

TEST_CASE("normal estimation is rotation-equivariant up to sign") {
    auto cloud = testutil::fibonacci_sphere(800);
    Vec3 viewpoint(0.3, 0.2, 4.0);
    auto rot = rotation_xyz(0.9, 0.4, -0.5);
    auto base = estimate_normals(cloud, 20, viewpoint);
    auto rotated = estimate_normals(transformed(cloud, rot, Vec3::Zero()), 20, rot * viewpoint);
    for (int i = 0; i < cloud.size(); ++i) {
        Vec3 expect = rot * base.points[static_cast<std::size_t>(i)].normal;
        Vec3 got = rotated.points[static_cast<std::size_t>(i)].normal;
        double err = std::min((expect - got).norm(), (expect + got).norm());
        CHECK(err < 1e-5);
    }
}
