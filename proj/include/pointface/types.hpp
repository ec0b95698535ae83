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

#ifndef POINTFACE_TYPES_HPP
#define POINTFACE_TYPES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

namespace pointface {

using Vec3 = Eigen::Vector3d;

/// One face point: position, unit surface normal and a curvature value in
/// [0, 1/3] (surface variation). Normal and curvature start unset (zero).
struct Point7 {
    Vec3 position = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    double curvature = 0.0;
};

/// An unordered face scan plus optional labels. `nose_tip_index`, when set,
/// points at the vertex used as the sampling reference.
struct PointCloud {
    std::vector<Point7> points;
    std::optional<int> identity;
    std::optional<int> expression;
    std::optional<int> nose_tip_index;
    bool has_normals = false;
    bool has_curvature = false;

    int size() const { return static_cast<int>(points.size()); }
    bool empty() const { return points.empty(); }

    /// Positions as an N x 3 matrix (copy).
    Eigen::MatrixXd positions() const {
        Eigen::MatrixXd out(points.size(), 3);
        for (std::size_t i = 0; i < points.size(); ++i) out.row(i) = points[i].position.transpose();
        return out;
    }

    Vec3 centroid() const {
        Vec3 c = Vec3::Zero();
        for (const auto& p : points) c += p.position;
        return points.empty() ? c : Vec3(c / static_cast<double>(points.size()));
    }

    /// The nose tip position when an index is recorded, the centroid otherwise.
    Vec3 reference_point() const {
        if (nose_tip_index) return points[static_cast<std::size_t>(*nose_tip_index)].position;
        return centroid();
    }
};

/// Similarity transform applied by normalize_cloud: p' = (p - offset) * scale.
struct NormalizeTransform {
    Vec3 offset = Vec3::Zero();
    double scale = 1.0;
};

/// Translates the reference point (nose tip, else centroid) to the origin and
/// scales so the farthest point sits at radius 1. Normals and curvature are
/// untouched; both are invariant under this transform.
PointCloud normalize_cloud(const PointCloud& cloud, NormalizeTransform* transform = nullptr);

/// Deterministically resamples `cloud` to exactly `target_points` points:
/// seeded subsampling without replacement when too large, cyclic repetition
/// when too small. Labels and features carry over.
PointCloud resample_cloud(const PointCloud& cloud, int target_points, std::uint64_t seed);

/// splitmix64-based mixing for deriving independent per-item seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

}  // namespace pointface

#endif  // POINTFACE_TYPES_HPP
