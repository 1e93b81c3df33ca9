#include "specsel/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "specsel/errors.hpp"

namespace specsel {

ChebyshevKdTree::ChebyshevKdTree(std::span<const double> points, std::size_t dim, std::size_t leaf_size)
    : points_(points), dim_(dim), count_(dim ? points.size() / dim : 0), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    if (dim == 0 || points.size() % dim != 0) throw PreconditionError("k-d tree: bad point buffer shape");
    order_.resize(count_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * count_ / leaf_size_ + 2);
    if (count_ > 0) build(0, count_);
}

std::size_t ChebyshevKdTree::build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back(Node{begin, end, 0, 0, boxes_.size()});
    boxes_.resize(boxes_.size() + 2 * dim_);
    double* lo = boxes_.data() + nodes_[id].box;
    double* hi = lo + dim_;
    for (std::size_t c = 0; c < dim_; ++c) {
        lo[c] = hi[c] = points_[order_[begin] * dim_ + c];
    }
    for (std::size_t i = begin + 1; i < end; ++i)
        for (std::size_t c = 0; c < dim_; ++c) {
            const double v = points_[order_[i] * dim_ + c];
            lo[c] = std::min(lo[c], v);
            hi[c] = std::max(hi[c], v);
        }
    if (end - begin <= leaf_size_) return id;

    std::size_t split = 0;
    double widest = -1.0;
    for (std::size_t c = 0; c < dim_; ++c)
        if (hi[c] - lo[c] > widest) {
            widest = hi[c] - lo[c];
            split = c;
        }
    if (!(widest > 0.0)) return id; // all points coincide

    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                     order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end), [&](std::size_t a, std::size_t b) {
                         return points_[a * dim_ + split] < points_[b * dim_ + split];
                     });
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

double ChebyshevKdTree::distance(std::span<const double> q, std::size_t idx) const {
    double d = 0.0;
    const double* p = points_.data() + idx * dim_;
    for (std::size_t c = 0; c < dim_; ++c) d = std::max(d, std::abs(q[c] - p[c]));
    return d;
}

double ChebyshevKdTree::lower_bound(std::span<const double> q, const Node& node) const {
    const double* lo = boxes_.data() + node.box;
    const double* hi = lo + dim_;
    double d = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) {
        if (q[c] < lo[c])
            d = std::max(d, lo[c] - q[c]);
        else if (q[c] > hi[c])
            d = std::max(d, q[c] - hi[c]);
    }
    return d;
}

double ChebyshevKdTree::upper_bound(std::span<const double> q, const Node& node) const {
    const double* lo = boxes_.data() + node.box;
    const double* hi = lo + dim_;
    double d = 0.0;
    for (std::size_t c = 0; c < dim_; ++c) d = std::max({d, std::abs(q[c] - lo[c]), std::abs(hi[c] - q[c])});
    return d;
}

double ChebyshevKdTree::kth_neighbor_distance(std::size_t self, std::size_t k) const {
    if (k == 0 || k >= count_) throw PreconditionError("k-d tree: k must lie in [1, size - 1]");
    const std::span<const double> q = points_.subspan(self * dim_, dim_);
    std::priority_queue<double> best; // max-heap of the k smallest distances
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        if (best.size() == k && lower_bound(q, node) >= best.top()) continue;
        if (node.left == 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                if (idx == self) continue;
                const double d = distance(q, idx);
                if (best.size() < k) {
                    best.push(d);
                } else if (d < best.top()) {
                    best.pop();
                    best.push(d);
                }
            }
            continue;
        }
        // Visit the nearer child first (pushed last).
        const double dl = lower_bound(q, nodes_[node.left]);
        const double dr = lower_bound(q, nodes_[node.right]);
        if (dl <= dr) {
            stack.push_back(node.right);
            stack.push_back(node.left);
        } else {
            stack.push_back(node.left);
            stack.push_back(node.right);
        }
    }
    return best.top();
}

std::size_t ChebyshevKdTree::count_closer(std::span<const double> query, double radius, std::size_t self) const {
    std::size_t count = 0;
    std::vector<std::size_t> stack{0};
    while (!stack.empty()) {
        const Node& node = nodes_[stack.back()];
        stack.pop_back();
        if (lower_bound(query, node) >= radius) continue;
        if (upper_bound(query, node) < radius) {
            count += node.end - node.begin;
            for (std::size_t i = node.begin; i < node.end; ++i)
                if (order_[i] == self) --count;
            continue;
        }
        if (node.left == 0) {
            for (std::size_t i = node.begin; i < node.end; ++i) {
                const std::size_t idx = order_[i];
                if (idx != self && distance(query, idx) < radius) ++count;
            }
            continue;
        }
        stack.push_back(node.left);
        stack.push_back(node.right);
    }
    return count;
}

} // namespace specsel
