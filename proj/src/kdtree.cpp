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

#include "pointface/kdtree.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace pointface {

namespace {

// Ordering on (squared distance, index): smaller distance first, lower index
// on ties. Used both for result ordering and as the heap priority.
struct Hit {
    double d2;
    int index;
    bool operator<(const Hit& o) const {
        return d2 < o.d2 || (d2 == o.d2 && index < o.index);
    }
};

// Bounded "k best" collector: max-heap on Hit so the worst candidate is on top.
class BestSet {
  public:
    explicit BestSet(int capacity) : capacity_(capacity) { heap_.reserve(static_cast<std::size_t>(capacity)); }

    bool full() const { return static_cast<int>(heap_.size()) == capacity_; }
    const Hit& worst() const { return heap_.front(); }

    void offer(const Hit& h) {
        if (!full()) {
            heap_.push_back(h);
            std::push_heap(heap_.begin(), heap_.end());
        } else if (h < heap_.front()) {
            std::pop_heap(heap_.begin(), heap_.end());
            heap_.back() = h;
            std::push_heap(heap_.begin(), heap_.end());
        }
    }

    std::vector<Hit> sorted() && {
        std::sort(heap_.begin(), heap_.end());
        return std::move(heap_);
    }

  private:
    int capacity_;
    std::vector<Hit> heap_;
};

}  // namespace

SpatialIndex::SpatialIndex(const PointCloud& cloud) {
    if (cloud.empty()) throw std::invalid_argument("empty cloud");
    points_.reserve(cloud.points.size());
    for (const auto& p : cloud.points) points_.push_back(p.position);
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    root_ = build(0, static_cast<int>(points_.size()), 0);
}

SpatialIndex::SpatialIndex(const Eigen::MatrixXd& positions) {
    if (positions.rows() == 0) throw std::invalid_argument("empty cloud");
    points_.reserve(static_cast<std::size_t>(positions.rows()));
    for (Eigen::Index i = 0; i < positions.rows(); ++i) points_.push_back(positions.row(i).transpose());
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), 0);
    root_ = build(0, static_cast<int>(points_.size()), 0);
}

int SpatialIndex::build(int begin, int end, int depth) {
    Node node;
    node.begin = begin;
    node.end = end;
    int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    if (end - begin <= kLeafSize) return id;

    // Split on the axis of largest extent; the comparator is a total order so
    // the two halves are deterministic sets.
    Vec3 lo = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(begin)])];
    Vec3 hi = lo;
    for (int i = begin + 1; i < end; ++i) {
        const Vec3& p = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(i)])];
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    int axis = 0;
    (hi - lo).maxCoeff(&axis);

    int mid = begin + (end - begin) / 2;
    auto by_axis = [&](int a, int b) {
        double pa = points_[static_cast<std::size_t>(a)][axis], pb = points_[static_cast<std::size_t>(b)][axis];
        return pa < pb || (pa == pb && a < b);
    };
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end, by_axis);

    nodes_[static_cast<std::size_t>(id)].axis = axis;
    nodes_[static_cast<std::size_t>(id)].split = points_[static_cast<std::size_t>(order_[static_cast<std::size_t>(mid)])][axis];
    int left = build(begin, mid, depth + 1);
    int right = build(mid, end, depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = left;
    nodes_[static_cast<std::size_t>(id)].right = right;
    return id;
}

std::vector<std::pair<int, double>> SpatialIndex::k_nearest(const Vec3& query, int k) const {
    if (k <= 0) throw std::invalid_argument("k must be positive");
    if (k > size()) throw std::invalid_argument("k exceeds cloud size");

    BestSet best(k);
    // Iterative depth-first search with plane-distance pruning.
    std::vector<int> stack;
    stack.push_back(root_);
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                int idx = order_[static_cast<std::size_t>(i)];
                best.offer({(points_[static_cast<std::size_t>(idx)] - query).squaredNorm(), idx});
            }
            continue;
        }
        double delta = query[node.axis] - node.split;
        int near = delta < 0 ? node.left : node.right;
        int far = delta < 0 ? node.right : node.left;
        if (!best.full() || delta * delta <= best.worst().d2) stack.push_back(far);
        stack.push_back(near);
    }

    std::vector<std::pair<int, double>> out;
    out.reserve(static_cast<std::size_t>(k));
    for (const Hit& h : std::move(best).sorted()) out.emplace_back(h.index, std::sqrt(h.d2));
    return out;
}

std::vector<int> SpatialIndex::ball_query(const Vec3& center, double radius, int max_count) const {
    if (radius <= 0.0) throw std::invalid_argument("radius must be positive");
    if (max_count <= 0) throw std::invalid_argument("max_count must be positive");

    const double r2 = radius * radius;
    BestSet best(max_count);
    std::vector<int> stack;
    stack.push_back(root_);
    while (!stack.empty()) {
        int id = stack.back();
        stack.pop_back();
        const Node& node = nodes_[static_cast<std::size_t>(id)];
        if (node.axis < 0) {
            for (int i = node.begin; i < node.end; ++i) {
                int idx = order_[static_cast<std::size_t>(i)];
                double d2 = (points_[static_cast<std::size_t>(idx)] - center).squaredNorm();
                if (d2 <= r2) best.offer({d2, idx});
            }
            continue;
        }
        double delta = center[node.axis] - node.split;
        int near = delta < 0 ? node.left : node.right;
        int far = delta < 0 ? node.right : node.left;
        double bound = best.full() ? std::min(r2, best.worst().d2) : r2;
        if (delta * delta <= bound) stack.push_back(far);
        stack.push_back(near);
    }

    std::vector<int> out;
    for (const Hit& h : std::move(best).sorted()) out.push_back(h.index);
    if (out.empty()) out.push_back(k_nearest(center, 1)[0].first);  // never-empty fallback
    return out;
}

SpatialIndex build_index(const PointCloud& cloud) { return SpatialIndex(cloud); }

}  // namespace pointface
