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

#ifndef POINTFACE_FEATURES_HPP
#define POINTFACE_FEATURES_HPP

#include <cstdint>
#include <vector>

#include "pointface/types.hpp"

namespace pointface {

/// Default neighborhood size for normal/curvature estimation.
inline constexpr int kDefaultFeatureNeighbors = 30;

/// Default viewpoint for normal orientation: far along +z, where both the
/// generated faces and cropped scans look.
inline const Vec3 kDefaultViewpoint{0.0, 0.0, 1.0e6};

/// Per-point unit normals from the eigenvector of the smallest eigenvalue of
/// the k-neighborhood covariance, oriented so dot(n, viewpoint - p) >= 0.
/// Neighborhoods of rank < 2 get normal (0,0,1) and a set bit in `degenerate`
/// (when given, resized to the cloud). Requires k >= 3 and cloud size >= k.
PointCloud estimate_normals(const PointCloud& cloud, int k = kDefaultFeatureNeighbors,
                            const Vec3& viewpoint = kDefaultViewpoint,
                            std::vector<std::uint8_t>* degenerate = nullptr);

/// Surface-variation curvature c = l0 / (l0 + l1 + l2) from the sorted
/// covariance eigenvalues of the k-neighborhood; bounded in [0, 1/3], zero on
/// exact planes and for degenerate neighborhoods (flagged as above).
PointCloud estimate_curvature(const PointCloud& cloud, int k = kDefaultFeatureNeighbors,
                              std::vector<std::uint8_t>* degenerate = nullptr);

/// Normals and curvature in a single covariance pass.
PointCloud compute_features(const PointCloud& cloud, int k = kDefaultFeatureNeighbors,
                            const Vec3& viewpoint = kDefaultViewpoint,
                            std::vector<std::uint8_t>* degenerate = nullptr);

}  // namespace pointface

#endif  // POINTFACE_FEATURES_HPP
