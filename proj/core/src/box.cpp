#include "pcop/box.hpp"

namespace pcop {

IndexBox minkowski_sum(const IndexBox& a, const IndexBox& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("minkowski_sum: dim mismatch");
    Point lo(a.lo), hi(a.hi);
    for (int i = 0; i < a.dim(); ++i) {
        lo[i] += b.lo[i];
        hi[i] += b.hi[i];
    }
    return {lo, hi};
}

IndexBox minkowski_diff(const IndexBox& a, const IndexBox& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("minkowski_diff: dim mismatch");
    Point lo(a.lo), hi(a.hi);
    for (int i = 0; i < a.dim(); ++i) {
        lo[i] -= b.hi[i];
        hi[i] -= b.lo[i];
    }
    return {lo, hi};
}

IndexBox shift(const IndexBox& a, const Point& p) {
    Point lo(a.lo), hi(a.hi);
    for (int i = 0; i < a.dim(); ++i) {
        lo[i] += p[i];
        hi[i] += p[i];
    }
    return {lo, hi};
}

IndexBox shift_neg(const IndexBox& a, const Point& p) {
    Point lo(a.lo), hi(a.hi);
    for (int i = 0; i < a.dim(); ++i) {
        lo[i] -= p[i];
        hi[i] -= p[i];
    }
    return {lo, hi};
}

IndexBox negate(const IndexBox& a) {
    Point lo(a.hi), hi(a.lo);
    for (int i = 0; i < a.dim(); ++i) {
        lo[i] = -a.hi[i];
        hi[i] = -a.lo[i];
    }
    return {lo, hi};
}

std::vector<Point> corners(const IndexBox& a) {
    const int d = a.dim();
    std::vector<Point> out;
    out.reserve(std::size_t(1) << d);
    Point p(a.lo);
    const std::size_t n = std::size_t(1) << d;
    for (std::size_t mask = 0; mask < n; ++mask) {
        for (int i = 0; i < d; ++i)
            p[i] = (mask & (std::size_t(1) << (d - 1 - i))) ? a.hi[i] : a.lo[i];
        out.push_back(p);
    }
    return out;
}

bool intersect(const IndexBox& a, const IndexBox& b, IndexBox& out) {
    Point lo(a.lo), hi(a.hi);
    for (int i = 0; i < a.dim(); ++i) {
        lo[i] = std::max(a.lo[i], b.lo[i]);
        hi[i] = std::min(a.hi[i], b.hi[i]);
        if (lo[i] > hi[i]) return false;
    }
    out = IndexBox(lo, hi);
    return true;
}

bool boxes_overlap(const IndexBox& a, const IndexBox& b) {
    for (int i = 0; i < a.dim(); ++i)
        if (std::max(a.lo[i], b.lo[i]) > std::min(a.hi[i], b.hi[i])) return false;
    return true;
}

IndexBox bounding_box(const IndexBox& a, const IndexBox& b) {
    Point lo(a.lo), hi(a.hi);
    for (int i = 0; i < a.dim(); ++i) {
        lo[i] = std::min(a.lo[i], b.lo[i]);
        hi[i] = std::max(a.hi[i], b.hi[i]);
    }
    return {lo, hi};
}

void for_each_point(const IndexBox& box, const std::function<void(const Point&)>& fn) {
    const int d = box.dim();
    Point p(box.lo);
    while (true) {
        fn(p);
        int axis = d - 1;
        while (axis >= 0) {
            if (p[axis] < box.hi[axis]) {
                ++p[axis];
                break;
            }
            p[axis] = box.lo[axis];
            --axis;
        }
        if (axis < 0) break;
    }
}

}  // namespace pcop
