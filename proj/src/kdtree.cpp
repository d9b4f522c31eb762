#include "lipsysid/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <queue>
#include <stdexcept>

namespace lipsysid {

KdTree::KdTree(std::vector<Vector> points) : pts_(std::move(points)) {
    if (pts_.empty()) throw std::invalid_argument("KdTree: empty point set");
    dim_ = static_cast<int>(pts_.front().size());
    nodes_.reserve(pts_.size());
    std::vector<int> idx(pts_.size());
    std::iota(idx.begin(), idx.end(), 0);
    root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int KdTree::build(std::vector<int>& idx, int begin, int end, int depth) {
    if (begin >= end) return -1;
    const int axis = depth % dim_;
    const int mid = begin + (end - begin) / 2;
    std::nth_element(idx.begin() + begin, idx.begin() + mid, idx.begin() + end,
                     [this, axis](int a, int b) {
                         if (pts_[a][axis] != pts_[b][axis]) return pts_[a][axis] < pts_[b][axis];
                         return a < b;
                     });
    Node node;
    node.point = idx[mid];
    node.axis = axis;
    const int self = static_cast<int>(nodes_.size());
    nodes_.push_back(node);
    nodes_[self].left = build(idx, begin, mid, depth + 1);
    nodes_[self].right = build(idx, mid + 1, end, depth + 1);
    return self;
}

std::vector<int> KdTree::range_query(const Vector& lo, const Vector& hi) const {
    std::vector<int> out;
    std::vector<int> stack{root_};
    while (!stack.empty()) {
        const int ni = stack.back();
        stack.pop_back();
        if (ni < 0) continue;
        const Node& node = nodes_[ni];
        const Vector& p = pts_[node.point];
        bool inside = true;
        for (int d = 0; d < dim_; ++d)
            if (p[d] < lo[d] || p[d] > hi[d]) {
                inside = false;
                break;
            }
        if (inside) out.push_back(node.point);
        const double split = p[node.axis];
        if (lo[node.axis] <= split) stack.push_back(node.left);
        if (hi[node.axis] >= split) stack.push_back(node.right);
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> KdTree::nearest(const Vector& query, int k) const {
    if (k < 1) throw std::invalid_argument("KdTree::nearest: k must be >= 1");
    k = std::min<int>(k, static_cast<int>(pts_.size()));
    // Max-heap of (distance^2, index) keeping the k best seen so far.
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry> heap;

    auto dist2 = [this, &query](int i) {
        double s = 0.0;
        for (int d = 0; d < dim_; ++d) {
            const double dd = pts_[i][d] - query[d];
            s += dd * dd;
        }
        return s;
    };

    std::function<void(int)> visit = [&](int ni) {
        if (ni < 0) return;
        const Node& node = nodes_[ni];
        const double d2 = dist2(node.point);
        if (static_cast<int>(heap.size()) < k)
            heap.push({d2, node.point});
        else if (d2 < heap.top().first ||
                 (d2 == heap.top().first && node.point < heap.top().second)) {
            heap.pop();
            heap.push({d2, node.point});
        }
        const double diff = query[node.axis] - pts_[node.point][node.axis];
        const int near = diff <= 0.0 ? node.left : node.right;
        const int far = diff <= 0.0 ? node.right : node.left;
        visit(near);
        if (static_cast<int>(heap.size()) < k || diff * diff <= heap.top().first) visit(far);
    };
    visit(root_);

    std::vector<Entry> entries;
    while (!heap.empty()) {
        entries.push_back(heap.top());
        heap.pop();
    }
    std::sort(entries.begin(), entries.end());
    std::vector<int> out;
    out.reserve(entries.size());
    for (const Entry& e : entries) out.push_back(e.second);
    return out;
}

}  // namespace lipsysid
