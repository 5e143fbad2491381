#pragma once

#include <vector>

#include "scanvol/math.hpp"

namespace scanvol {

// Static 3-d tree over a point array. Nearest-neighbor ties are broken by
// the smaller point index, so queries are deterministic.
class KdTree3 {
public:
    KdTree3() = default;
    explicit KdTree3(std::vector<Vec3> points);

    size_t size() const { return points_.size(); }

    struct Hit {
        int index = -1;
        double squared_distance = 0.0;
    };

    // Nearest point to q; index -1 when the tree is empty.
    Hit nearest(const Vec3& q) const;

private:
    struct Node {
        int point = -1;
        int axis = 0;
        int left = -1;
        int right = -1;
    };

    int build(std::vector<int>& idx, int begin, int end, int depth);
    void search(int node, const Vec3& q, Hit& best) const;

    std::vector<Vec3> points_;
    std::vector<Node> nodes_;
    int root_ = -1;
};

}  // namespace scanvol
