#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace specsel {

/// Static k-d tree over row-major points under the max-norm (Chebyshev)
/// distance. Node boxes are the tight bounds of the points they hold, so the
/// pruning tests compare the same floating-point differences a brute-force
/// scan would: results are identical, not merely close.
class ChebyshevKdTree {
public:
    /// `points` holds `count` rows of `dim` coordinates and must outlive the tree.
    ChebyshevKdTree(std::span<const double> points, std::size_t dim, std::size_t leaf_size = 8);

    std::size_t size() const noexcept { return count_; }
    std::size_t dim() const noexcept { return dim_; }

    /// Distance from point `self` to its k-th nearest other point.
    double kth_neighbor_distance(std::size_t self, std::size_t k) const;

    /// Number of points other than `self` strictly closer than `radius` to
    /// the query (a copy of point `self`'s coordinates in this tree's space).
    std::size_t count_closer(std::span<const double> query, double radius, std::size_t self) const;

private:
    struct Node {
        std::size_t begin, end;
        std::size_t left = 0, right = 0; // 0 = leaf (root is never a child)
        std::size_t box; // offset into boxes_: dim lows then dim highs
    };

    std::size_t build(std::size_t begin, std::size_t end);
    double distance(std::span<const double> q, std::size_t idx) const;
    double lower_bound(std::span<const double> q, const Node& node) const;
    double upper_bound(std::span<const double> q, const Node& node) const;

    std::span<const double> points_;
    std::size_t dim_;
    std::size_t count_;
    std::size_t leaf_size_;
    std::vector<std::size_t> order_;
    std::vector<Node> nodes_;
    std::vector<double> boxes_;
};

} // namespace specsel
