#include "pcop/grid_function.hpp"

namespace pcop {

namespace {

// Iterates the intersection box, calling fn(dst_lin, src_lin, run_length)
// for each contiguous run along the last axis.
template <typename Fn>
void for_each_overlap_run(const GridFunction& dst, const GridFunction& src, const Point& shift,
                          Fn&& fn) {
    const int d = dst.dim();
    IndexBox src_in_dst = shift.empty() ? src.box() : pcop::shift(src.box(), shift);
    IndexBox overlap;
    if (!intersect(dst.box(), src_in_dst, overlap)) return;

    const std::int64_t run = overlap.extent(d - 1) + 1;
    Point p(overlap.lo);
    Point q(p);  // p - shift
    for (int i = 0; i < d; ++i) q[i] = p[i] - (shift.empty() ? 0 : shift[i]);

    while (true) {
        fn(dst.linear_index(p), src.linear_index(q), run);
        int axis = d - 2;
        while (axis >= 0) {
            if (p[axis] < overlap.hi[axis]) {
                ++p[axis];
                ++q[axis];
                break;
            }
            p[axis] = overlap.lo[axis];
            q[axis] = p[axis] - (shift.empty() ? 0 : shift[axis]);
            --axis;
        }
        if (axis < 0) break;
    }
}

}  // namespace

void accumulate_shifted(GridFunction& dst, const GridFunction& src, const Point& shift,
                        double scale) {
    double* out = dst.data();
    const double* in = src.data();
    for_each_overlap_run(dst, src, shift, [&](std::int64_t di, std::int64_t si, std::int64_t n) {
        for (std::int64_t j = 0; j < n; ++j) out[di + j] += scale * in[si + j];
    });
}

void accumulate(GridFunction& dst, const GridFunction& src, double scale) {
    accumulate_shifted(dst, src, Point(), scale);
}

void overwrite(GridFunction& dst, const GridFunction& src) {
    double* out = dst.data();
    const double* in = src.data();
    for_each_overlap_run(dst, src, Point(), [&](std::int64_t di, std::int64_t si, std::int64_t n) {
        for (std::int64_t j = 0; j < n; ++j) out[di + j] = in[si + j];
    });
}

GridFunction restrict_to(const GridFunction& f, const IndexBox& box) {
    GridFunction out(box);
    double* o = out.data();
    const double* in = f.data();
    for_each_overlap_run(out, f, Point(), [&](std::int64_t di, std::int64_t si, std::int64_t n) {
        for (std::int64_t j = 0; j < n; ++j) o[di + j] = in[si + j];
    });
    return out;
}

GridFunction flip(const GridFunction& f) {
    GridFunction out(negate(f.box()));
    const int d = f.dim();
    Point p(d);
    for_each_point(out.box(), [&](const Point& z) {
        for (int i = 0; i < d; ++i) p[i] = -z[i];
        out.at(z) = f.at(p);
    });
    return out;
}

void multiply_into(GridFunction& dst, const GridFunction& src) {
    // Points of dst outside src's box read src as 0.
    GridFunction mask(dst.box());
    double* m = mask.data();
    const double* in = src.data();
    for_each_overlap_run(mask, src, Point(), [&](std::int64_t di, std::int64_t si, std::int64_t n) {
        for (std::int64_t j = 0; j < n; ++j) m[di + j] = in[si + j];
    });
    double* out = dst.data();
    for (std::int64_t i = 0; i < dst.size(); ++i) out[i] *= m[i];
}

double squared_norm_on_box(const GridFunction& f, const IndexBox& box) {
    GridFunction probe(box);
    double s = 0.0;
    const double* in = f.data();
    for_each_overlap_run(probe, f, Point(), [&](std::int64_t, std::int64_t si, std::int64_t n) {
        for (std::int64_t j = 0; j < n; ++j) s += in[si + j] * in[si + j];
    });
    return s;
}

double dot_overlap(const GridFunction& a, const GridFunction& b) {
    double s = 0.0;
    const double* pa = a.data();
    const double* pb = b.data();
    for_each_overlap_run(a, b, Point(), [&](std::int64_t di, std::int64_t si, std::int64_t n) {
        for (std::int64_t j = 0; j < n; ++j) s += pa[di + j] * pb[si + j];
    });
    return s;
}

}  // namespace pcop
