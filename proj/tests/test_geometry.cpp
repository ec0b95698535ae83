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

#include "pointface/kdtree.hpp"
#include "testutil.hpp"

using namespace pointface;

namespace {
PointCloud cloud_from(const std::vector<Vec3>& pts) {
    PointCloud c;
    for (const auto& p : pts) c.points.push_back(Point7{p, Vec3::Zero(), 0.0});
    return c;
}
}  // namespace

TEST_CASE("build_index rejects an empty cloud") {
    PointCloud empty;
    CHECK_THROWS_WITH_AS(build_index(empty), "empty cloud", std::invalid_argument);
}

TEST_CASE("singleton cloud answers k=1") {
    auto cloud = cloud_from({{1, 2, 3}});
    SpatialIndex index(cloud);
    auto nn = index.k_nearest(Vec3(0, 0, 0), 1);
    REQUIRE(nn.size() == 1);
    CHECK(nn[0].first == 0);
    CHECK(nn[0].second == doctest::Approx(std::sqrt(14.0)));
}

TEST_CASE("unit square corners from the center") {
    auto cloud = cloud_from({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}});
    SpatialIndex index(cloud);
    auto nn = index.k_nearest(Vec3(0.5, 0.5, 0), 4);
    REQUIRE(nn.size() == 4);
    // All distances equal: tie-break yields ascending indices.
    for (int i = 0; i < 4; ++i) CHECK(nn[static_cast<std::size_t>(i)].first == i);
}

TEST_CASE("collinear points, query at the first") {
    auto cloud = cloud_from({{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}});
    SpatialIndex index(cloud);
    auto nn = index.k_nearest(Vec3(0, 0, 0), 2);
    CHECK(nn[0].first == 0);
    CHECK(nn[0].second == doctest::Approx(0.0));
    CHECK(nn[1].first == 1);
    CHECK(nn[1].second == doctest::Approx(1.0));
}

TEST_CASE("duplicate points: both returned, lower index first") {
    auto cloud = cloud_from({{5, 5, 5}, {1, 1, 1}, {1, 1, 1}, {9, 9, 9}});
    SpatialIndex index(cloud);
    auto nn = index.k_nearest(Vec3(1, 1, 1), 2);
    CHECK(nn[0].first == 1);
    CHECK(nn[1].first == 2);
}

TEST_CASE("k exceeding the cloud size throws") {
    auto cloud = cloud_from({{0, 0, 0}, {1, 0, 0}});
    SpatialIndex index(cloud);
    CHECK_THROWS_WITH_AS(index.k_nearest(Vec3(0, 0, 0), 3), "k exceeds cloud size",
                         std::invalid_argument);
}

TEST_CASE("k_nearest matches the brute-force oracle") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        auto cloud = testutil::random_cloud(1000, seed);
        SpatialIndex index(cloud);
        for (int q = 0; q < 50; ++q) {
            Vec3 query(coord(rng), coord(rng), coord(rng));
            auto got = index.k_nearest(query, 8);
            auto want = testutil::brute_knn(cloud, query, 8);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].first == want[i].first);
                CHECK(got[i].second == doctest::Approx(want[i].second));
            }
        }
    }
}

TEST_CASE("ball_query threshold behavior") {
    auto cloud = cloud_from({{0.1, 0, 0}, {0.2, 0, 0}, {0.9, 0, 0}});
    SpatialIndex index(cloud);
    auto got = index.ball_query(Vec3(0, 0, 0), 0.5, 8);
    REQUIRE(got.size() == 2);
    CHECK(got[0] == 0);
    CHECK(got[1] == 1);
}

TEST_CASE("ball_query falls back to the nearest point") {
    auto cloud = cloud_from({{2, 0, 0}, {3, 0, 0}});
    SpatialIndex index(cloud);
    auto got = index.ball_query(Vec3(0, 0, 0), 0.5, 4);
    REQUIRE(got.size() == 1);
    CHECK(got[0] == 0);
}

TEST_CASE("ball_query matches the brute-force radius scan") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    auto cloud = testutil::random_cloud(500, 21);
    SpatialIndex index(cloud);
    for (int q = 0; q < 40; ++q) {
        Vec3 query(coord(rng), coord(rng), coord(rng));
        auto got = index.ball_query(query, 0.3, 16);
        auto want = testutil::brute_ball(cloud, query, 0.3, 16);
        CHECK(got == want);
    }
}

TEST_CASE("ball results are a prefix of k_nearest restricted to the radius") {
    auto cloud = testutil::random_cloud(300, 5);
    SpatialIndex index(cloud);
    Vec3 query(0.2, -0.1, 0.4);
    auto ball = index.ball_query(query, 0.4, 10);
    auto knn = index.k_nearest(query, 10);
    std::vector<int> trimmed;
    for (const auto& [idx, d] : knn)
        if (d <= 0.4) trimmed.push_back(idx);
    if (trimmed.size() > ball.size()) trimmed.resize(ball.size());
    CHECK(ball == trimmed);
}

TEST_CASE("normalize_cloud centers the nose tip and scales the max radius to 1") {
    auto cloud = testutil::random_cloud(64, 3);
    cloud.nose_tip_index = 10;
    NormalizeTransform t;
    auto normed = normalize_cloud(cloud, &t);
    CHECK(normed.points[10].position.norm() == doctest::Approx(0.0));
    double max_r = 0.0;
    for (const auto& p : normed.points) max_r = std::max(max_r, p.position.norm());
    CHECK(max_r == doctest::Approx(1.0));
    CHECK(t.scale > 0.0);
}

TEST_CASE("resample_cloud pads by cyclic repetition and keeps the nose tip") {
    auto cloud = testutil::random_cloud(10, 4);
    cloud.nose_tip_index = 3;
    auto padded = resample_cloud(cloud, 25, 1);
    REQUIRE(padded.size() == 25);
    CHECK(padded.points[13].position == cloud.points[3].position);
    CHECK(*padded.nose_tip_index == 3);

    auto sub = resample_cloud(cloud, 4, 1);
    REQUIRE(sub.size() == 4);
    REQUIRE(sub.nose_tip_index.has_value());
    CHECK(sub.points[static_cast<std::size_t>(*sub.nose_tip_index)].position ==
          cloud.points[3].position);
    // Deterministic per seed.
    auto sub2 = resample_cloud(cloud, 4, 1);
    for (int i = 0; i < 4; ++i)
        CHECK(sub.points[static_cast<std::size_t>(i)].position ==
              sub2.points[static_cast<std::size_t>(i)].position);
}
