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

#ifndef POINTFACE_KDTREE_HPP
#define POINTFACE_KDTREE_HPP

#include <utility>
#include <vector>

#include "pointface/types.hpp"

namespace pointface {

/// k-d tree over the positions of one cloud. Immutable after construction;
/// concurrent read queries are safe. All queries resolve distance ties by the
/// lower point index so downstream sampling is reproducible.
class SpatialIndex {
  public:
    /// Builds the index. Throws std::invalid_argument("empty cloud") on an
    /// empty input.
    explicit SpatialIndex(const PointCloud& cloud);
    explicit SpatialIndex(const Eigen::MatrixXd& positions);  // N x 3

    int size() const { return static_cast<int>(points_.size()); }

    /// The k points nearest to `query`, ascending by distance, distance ties
    /// broken by lower index. Throws if k exceeds the cloud size.
    std::vector<std::pair<int, double>> k_nearest(const Vec3& query, int k) const;

    /// Indices of points with |p - center| <= radius, nearest first, at most
    /// `max_count` of them. If no point lies inside the ball, the single
    /// nearest point is returned so groups are never empty.
    std::vector<int> ball_query(const Vec3& center, double radius, int max_count) const;

  private:
    struct Node {
        int axis = -1;          // -1 marks a leaf
        double split = 0.0;
        int left = -1, right = -1;
        int begin = 0, end = 0;  // leaf range into order_
    };

    int build(int begin, int end, int depth);
    static constexpr int kLeafSize = 16;

    std::vector<Vec3> points_;
    std::vector<int> order_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

SpatialIndex build_index(const PointCloud& cloud);

}  // namespace pointface

#endif  // POINTFACE_KDTREE_HPP
