#ifndef PCOP_GRID_FUNCTION_HPP
#define PCOP_GRID_FUNCTION_HPP

#include <cmath>
#include <vector>

#include "pcop/box.hpp"

namespace pcop {

/// Scalar field stored densely on an integer box; evaluation outside the
/// stored box is 0 (extension-by-zero convention). Values are laid out in
/// lexicographic order with the last axis fastest.
class GridFunction {
  public:
    GridFunction() = default;
    explicit GridFunction(const IndexBox& box, double fill = 0.0)
        : box_(box), values_(static_cast<std::size_t>(box.num_points()), fill) {
        init_strides();
    }

    const IndexBox& box() const { return box_; }
    int dim() const { return box_.dim(); }
    std::int64_t size() const { return static_cast<std::int64_t>(values_.size()); }

    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }

    std::int64_t linear_index(const Point& p) const {
        std::int64_t idx = 0;
        for (int i = 0; i < dim(); ++i) idx += (p[i] - box_.lo[i]) * strides_[i];
        return idx;
    }

    double& at(const Point& p) { return values_[static_cast<std::size_t>(linear_index(p))]; }
    double at(const Point& p) const { return values_[static_cast<std::size_t>(linear_index(p))]; }

    /// Value at p, or 0 if p lies outside the stored box.
    double value_or_zero(const Point& p) const {
        return box_.contains(p) ? at(p) : 0.0;
    }

    const std::vector<std::int64_t>& strides() const { return strides_; }

    double squared_norm() const {
        double s = 0.0;
        for (double v : values_) s += v * v;
        return s;
    }
    double norm() const { return std::sqrt(squared_norm()); }

    void fill(double v) { values_.assign(values_.size(), v); }

  private:
    void init_strides() {
        const int d = box_.dim();
        strides_.assign(d, 1);
        for (int i = d - 2; i >= 0; --i)
            strides_[i] = strides_[i + 1] * (box_.extent(i + 1) + 1);
    }

    IndexBox box_;
    std::vector<std::int64_t> strides_;
    std::vector<double> values_;
};

/// dst[p] += scale * src[p - shift] over dst's box (reads outside src are 0).
void accumulate_shifted(GridFunction& dst, const GridFunction& src, const Point& shift,
                        double scale);

/// dst[p] += scale * src[p] on the overlap of the two boxes.
void accumulate(GridFunction& dst, const GridFunction& src, double scale = 1.0);

/// dst[p] = src[p] on the overlap of the two boxes.
void overwrite(GridFunction& dst, const GridFunction& src);

/// Restriction of f to a box; points outside f's box read as 0.
GridFunction restrict_to(const GridFunction& f, const IndexBox& box);

/// flip(f)[z] = f[-z].
GridFunction flip(const GridFunction& f);

/// dst[p] *= src[p] on dst's box; points outside src read as 0.
void multiply_into(GridFunction& dst, const GridFunction& src);

/// sum over overlap of a[p] * b[p].
double dot_overlap(const GridFunction& a, const GridFunction& b);

/// sum of f[p]^2 over box (points outside f's box contribute 0).
double squared_norm_on_box(const GridFunction& f, const IndexBox& box);

}  // namespace pcop

#endif
