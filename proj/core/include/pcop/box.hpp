#ifndef PCOP_BOX_HPP
#define PCOP_BOX_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace pcop {

using Coord = std::int64_t;
using Point = std::vector<Coord>;

/// Floor division (rounds toward negative infinity).
inline Coord floor_div(Coord a, Coord b) {
    Coord q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

/// Axis-aligned box of integer lattice points with inclusive bounds.
struct IndexBox {
    Point lo;
    Point hi;

    IndexBox() = default;
    IndexBox(Point lo_, Point hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
        if (lo.size() != hi.size()) throw std::invalid_argument("IndexBox: dim mismatch");
        for (std::size_t i = 0; i < lo.size(); ++i)
            if (lo[i] > hi[i]) throw std::invalid_argument("IndexBox: lo > hi");
    }

    int dim() const { return static_cast<int>(lo.size()); }

    Coord extent(int axis) const { return hi[axis] - lo[axis]; }

    std::int64_t num_points() const {
        std::int64_t n = 1;
        for (int i = 0; i < dim(); ++i) n *= extent(i) + 1;
        return n;
    }

    /// Sum of per-axis extents.
    Coord linear_dimension() const {
        Coord s = 0;
        for (int i = 0; i < dim(); ++i) s += extent(i);
        return s;
    }

    bool contains(const Point& p) const {
        for (int i = 0; i < dim(); ++i)
            if (p[i] < lo[i] || p[i] > hi[i]) return false;
        return true;
    }

    bool contains(const IndexBox& b) const {
        for (int i = 0; i < dim(); ++i)
            if (b.lo[i] < lo[i] || b.hi[i] > hi[i]) return false;
        return true;
    }

    /// Integer point closest to (lo+hi)/2, ties rounded half up.
    Point midpoint() const {
        Point m(lo.size());
        for (int i = 0; i < dim(); ++i) m[i] = floor_div(lo[i] + hi[i] + 1, 2);
        return m;
    }

    bool operator==(const IndexBox& o) const { return lo == o.lo && hi == o.hi; }
};

/// Componentwise Minkowski sum: [a.lo+b.lo, a.hi+b.hi].
IndexBox minkowski_sum(const IndexBox& a, const IndexBox& b);

/// Minkowski difference a - b = {x - y : x in a, y in b}.
IndexBox minkowski_diff(const IndexBox& a, const IndexBox& b);

/// Box translated by +p / -p.
IndexBox shift(const IndexBox& a, const Point& p);
IndexBox shift_neg(const IndexBox& a, const Point& p);

/// Negated box -a.
IndexBox negate(const IndexBox& a);

/// The 2^d corner lattice of a box (lexicographic order).
std::vector<Point> corners(const IndexBox& a);

/// Intersection; returns false if empty.
bool intersect(const IndexBox& a, const IndexBox& b, IndexBox& out);

bool boxes_overlap(const IndexBox& a, const IndexBox& b);

/// Smallest box containing both.
IndexBox bounding_box(const IndexBox& a, const IndexBox& b);

/// Calls fn(p) for every lattice point of the box, lexicographic order
/// (last axis fastest).
void for_each_point(const IndexBox& box, const std::function<void(const Point&)>& fn);

}  // namespace pcop

#endif
