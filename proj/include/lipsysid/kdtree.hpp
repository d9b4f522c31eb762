#pragma once

#include <vector>

#include "lipsysid/linalg.hpp"

namespace lipsysid {

// Balanced k-d tree over a fixed point set. Queries return indices into the
// point vector passed at construction. Read-only after build, so concurrent
// queries are safe.
class KdTree {
public:
    explicit KdTree(std::vector<Vector> points);

    size_t size() const { return pts_.size(); }
    const Vector& point(int i) const { return pts_[i]; }

    // All indices whose point lies inside the closed box [lo, hi].
    std::vector<int> range_query(const Vector& lo, const Vector& hi) const;

    // The k nearest points to query by l2 distance, closest first. Distance
    // ties break by index so results are deterministic.
    std::vector<int> nearest(const Vector& query, int k) const;

private:
    struct Node {
        int point = -1;
        int axis = 0;
        int left = -1;
        int right = -1;
    };

    int build(std::vector<int>& idx, int begin, int end, int depth);

    std::vector<Vector> pts_;
    std::vector<Node> nodes_;
    int root_ = -1;
    int dim_ = 0;
};

}  // namespace lipsysid
