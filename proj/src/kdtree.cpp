#include "scanvol/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace scanvol {

KdTree3::KdTree3(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) return;
    nodes_.reserve(points_.size());
    std::vector<int> idx(points_.size());
    std::iota(idx.begin(), idx.end(), 0);
    root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int KdTree3::build(std::vector<int>& idx, int begin, int end, int depth) {
    if (begin >= end) return -1;
    const int axis = depth % 3;
    const int mid = begin + (end - begin) / 2;
    // Total order (coordinate, index) keeps the split deterministic.
    std::nth_element(idx.begin() + begin, idx.begin() + mid, idx.begin() + end, [&](int a, int b) {
        double ca = points_[a][axis], cb = points_[b][axis];
        return ca < cb || (ca == cb && a < b);
    });
    int node = static_cast<int>(nodes_.size());
    nodes_.push_back({idx[mid], axis, -1, -1});
    int left = build(idx, begin, mid, depth + 1);
    int right = build(idx, mid + 1, end, depth + 1);
    nodes_[node].left = left;
    nodes_[node].right = right;
    return node;
}

void KdTree3::search(int node, const Vec3& q, Hit& best) const {
    if (node < 0) return;
    const Node& n = nodes_[node];
    const Vec3& p = points_[n.point];
    double d2 = (q - p).squaredNorm();
    if (d2 < best.squared_distance ||
        (d2 == best.squared_distance && n.point < best.index)) {
        best.squared_distance = d2;
        best.index = n.point;
    }
    double delta = q[n.axis] - p[n.axis];
    int near = delta < 0.0 ? n.left : n.right;
    int far = delta < 0.0 ? n.right : n.left;
    search(near, q, best);
    if (delta * delta <= best.squared_distance) search(far, q, best);
}

KdTree3::Hit KdTree3::nearest(const Vec3& q) const {
    Hit best;
    if (root_ < 0) return best;
    best.squared_distance = std::numeric_limits<double>::infinity();
    search(root_, q, best);
    return best;
}

}  // namespace scanvol
