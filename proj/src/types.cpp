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

#include "pointface/types.hpp"

#include <random>
#include <stdexcept>

namespace pointface {

PointCloud normalize_cloud(const PointCloud& cloud, NormalizeTransform* transform) {
    if (cloud.empty()) throw std::invalid_argument("empty cloud");
    Vec3 ref = cloud.reference_point();
    double max_r = 0.0;
    for (const auto& p : cloud.points) max_r = std::max(max_r, (p.position - ref).norm());
    if (max_r == 0.0) throw std::invalid_argument("degenerate cloud: all points coincide");

    PointCloud out = cloud;
    double scale = 1.0 / max_r;
    for (auto& p : out.points) p.position = (p.position - ref) * scale;
    if (transform) *transform = NormalizeTransform{ref, scale};
    return out;
}

PointCloud resample_cloud(const PointCloud& cloud, int target_points, std::uint64_t seed) {
    if (cloud.empty()) throw std::invalid_argument("empty cloud");
    if (target_points <= 0) throw std::invalid_argument("target point count must be positive");

    const int n = cloud.size();
    std::vector<int> pick;
    pick.reserve(static_cast<std::size_t>(target_points));
    if (n >= target_points) {
        // Partial Fisher-Yates: the first target_points entries of a seeded
        // permutation, then sorted to keep the original point order.
        std::vector<int> perm(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
        std::mt19937_64 rng(seed);
        for (int i = 0; i < target_points; ++i) {
            std::uniform_int_distribution<int> dist(i, n - 1);
            std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(dist(rng))]);
        }
        pick.assign(perm.begin(), perm.begin() + target_points);
        std::sort(pick.begin(), pick.end());
    } else {
        for (int i = 0; i < target_points; ++i) pick.push_back(i % n);
    }

    PointCloud out;
    out.identity = cloud.identity;
    out.expression = cloud.expression;
    out.has_normals = cloud.has_normals;
    out.has_curvature = cloud.has_curvature;
    out.points.reserve(pick.size());
    int nose = -1;
    for (std::size_t j = 0; j < pick.size(); ++j) {
        out.points.push_back(cloud.points[static_cast<std::size_t>(pick[j])]);
        if (cloud.nose_tip_index && pick[j] == *cloud.nose_tip_index && nose < 0) nose = static_cast<int>(j);
    }
    if (cloud.nose_tip_index) {
        if (nose < 0) {
            // Nose tip was dropped by subsampling: reinstate it over the first pick.
            out.points[0] = cloud.points[static_cast<std::size_t>(*cloud.nose_tip_index)];
            nose = 0;
        }
        out.nose_tip_index = nose;
    }
    return out;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    // splitmix64 finalizer over the combined value.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace pointface
