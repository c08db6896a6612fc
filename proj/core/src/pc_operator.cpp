#include "pcop/pc_operator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "pcop/fft.hpp"

namespace pcop {

namespace {

// dst[p] += scale * a[p] * b[p] over the common overlap with dst.
void accumulate_product(GridFunction& dst, const GridFunction& a, const GridFunction& b,
                        double scale = 1.0) {
    IndexBox ov;
    if (!intersect(a.box(), b.box(), ov)) return;
    IndexBox ov2;
    if (!intersect(ov, dst.box(), ov2)) return;
    for_each_point(ov2, [&](const Point& p) { dst.at(p) += scale * a.at(p) * b.at(p); });
}

}  // namespace

ProductConvolutionOperator::ProductConvolutionOperator(IndexBox domain,
                                                       std::shared_ptr<const AdaptiveGrid> grid,
                                                       std::vector<WeightFunction> weights,
                                                       std::vector<ExtendedImpulse> impulses)
    : domain_(std::move(domain)),
      grid_(std::move(grid)),
      weights_(std::move(weights)),
      impulses_(std::move(impulses)) {
    if (weights_.size() != impulses_.size())
        throw std::invalid_argument("PCOp: one weight per impulse required");
    if (grid_ && static_cast<int>(weights_.size()) != grid_->num_points())
        throw std::invalid_argument("PCOp: one pair per registered sample point required");
}

void ProductConvolutionOperator::append_pair(WeightFunction w, ExtendedImpulse e) {
    weights_.push_back(std::move(w));
    impulses_.push_back(std::move(e));
}

Eigen::VectorXd ProductConvolutionOperator::apply(const Eigen::VectorXd& f) const {
    if (f.size() != domain_.num_points()) throw std::invalid_argument("PCOp::apply: shape mismatch");
    GridFunction fg = to_grid_function(domain_, f);
    GridFunction out(domain_);
    for (int k = 0; k < rank(); ++k) {
        const WeightFunction& w = weights_[static_cast<std::size_t>(k)];
        GridFunction wf = restrict_to(fg, w.footprint());
        multiply_into(wf, w.values);
        accumulate(out, fft_convolve(impulses_[static_cast<std::size_t>(k)].values, wf));
    }
    return to_vector(out);
}

Eigen::VectorXd ProductConvolutionOperator::apply_adjoint(const Eigen::VectorXd& f) const {
    if (f.size() != domain_.num_points())
        throw std::invalid_argument("PCOp::apply_adjoint: shape mismatch");
    GridFunction fg = to_grid_function(domain_, f);
    GridFunction out(domain_);
    for (int k = 0; k < rank(); ++k) {
        const WeightFunction& w = weights_[static_cast<std::size_t>(k)];
        GridFunction conv = fft_convolve(flip(impulses_[static_cast<std::size_t>(k)].values), fg);
        accumulate_product(out, w.values, conv);
    }
    return to_vector(out);
}

std::vector<int> ProductConvolutionOperator::terms_at(const Point& x) const {
    if (grid_) {
        std::set<int> ks;
        for (int leaf : grid_->leaves_containing(x))
            for (int j : grid_->points_in_leaf(leaf)) ks.insert(j);
        return {ks.begin(), ks.end()};
    }
    std::vector<int> ks;
    for (int k = 0; k < rank(); ++k)
        if (weights_[static_cast<std::size_t>(k)].footprint().contains(x)) ks.push_back(k);
    return ks;
}

double ProductConvolutionOperator::entry(const Point& y, const Point& x) const {
    if (!domain_.contains(y) || !domain_.contains(x))
        throw std::invalid_argument("PCOp::entry: index outside the domain");
    Point z(y);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] -= x[i];
    double sum = 0.0;
    for (int k : terms_at(x)) {
        const double wx = weights_[static_cast<std::size_t>(k)].values.value_or_zero(x);
        if (wx == 0.0) continue;
        sum += wx * impulses_[static_cast<std::size_t>(k)].values.value_or_zero(z);
    }
    return sum;
}

GridFunction ProductConvolutionOperator::apply_block(const IndexBox& T, const IndexBox& S,
                                                     const GridFunction& f, bool adjoint) const {
    if (!domain_.contains(T) || !domain_.contains(S))
        throw std::invalid_argument("PCOp::apply_block: boxes must lie inside the domain");
    GridFunction out(T);
    const IndexBox G = minkowski_diff(T, S);
    for (int k = 0; k < rank(); ++k) {
        const WeightFunction& w = weights_[static_cast<std::size_t>(k)];
        const GridFunction& phi = impulses_[static_cast<std::size_t>(k)].values;
        if (!adjoint) {
            if (!boxes_overlap(w.footprint(), S)) continue;
            GridFunction wf(S);
            overwrite(wf, f);
            multiply_into(wf, w.values);
            IndexBox slice_box;
            GridFunction slice =
                intersect(phi.box(), G, slice_box) ? restrict_to(phi, slice_box) : GridFunction();
            if (slice.size() == 0) continue;
            accumulate(out, fft_convolve(slice, wf));
        } else {
            if (!boxes_overlap(w.footprint(), T)) continue;
            // flip(phi) restricted to G = flip of phi restricted to S - T
            IndexBox slice_box;
            if (!intersect(phi.box(), minkowski_diff(S, T), slice_box)) continue;
            GridFunction slice = flip(restrict_to(phi, slice_box));
            GridFunction fs(S);
            overwrite(fs, f);
            GridFunction conv = fft_convolve(slice, fs);
            accumulate_product(out, w.values, conv);
        }
    }
    return out;
}

Eigen::MatrixXd ProductConvolutionOperator::materialize() const {
    const std::int64_t N = domain_.num_points();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    GridFunction layout(domain_);
    GridFunction col(domain_);
    for_each_point(domain_, [&](const Point& x) {
        col.fill(0.0);
        for (int k : terms_at(x)) {
            const double wx = weights_[static_cast<std::size_t>(k)].values.value_or_zero(x);
            if (wx == 0.0) continue;
            accumulate_shifted(col, impulses_[static_cast<std::size_t>(k)].values, x, wx);
        }
        const auto j = static_cast<Eigen::Index>(layout.linear_index(x));
        A.col(j) = to_vector(col);
    });
    return A;
}

ProductConvolutionOperator assemble_on_grid(const OperatorHandle& op,
                                            std::shared_ptr<const AdaptiveGrid> grid,
                                            bool extend, double pou_tol) {
    const AdaptiveGrid& g = *grid;
    WeightBuilder wb(g, pou_tol);
    const int r = g.num_points();

    std::vector<ImpulseResponse> raw;
    raw.reserve(static_cast<std::size_t>(r));
    for (int k = 0; k < r; ++k) raw.push_back(compute_impulse(op, g, k));

    std::vector<WeightFunction> weights;
    std::vector<ExtendedImpulse> extended;
    weights.reserve(static_cast<std::size_t>(r));
    extended.reserve(static_cast<std::size_t>(r));
    for (int k = 0; k < r; ++k) {
        weights.push_back(wb.build(k));
        if (extend) {
            ExtensionWeights ew = build_extension_weights(g, k);
            std::vector<const GridFunction*> nbr_phi;
            for (int j : ew.nbrs) nbr_phi.push_back(&raw[static_cast<std::size_t>(j)].values);
            extended.push_back(extend_impulse(ew, nbr_phi));
        } else {
            extended.push_back(zero_extend_impulse(raw[static_cast<std::size_t>(k)]));
        }
    }
    return {op.domain(), std::move(grid), std::move(weights), std::move(extended)};
}

ProductConvolutionOperator regular_grid_approximation(const OperatorHandle& op,
                                                      int cells_per_axis) {
    const IndexBox& omega = op.domain();
    const int d = omega.dim();
    const int m = cells_per_axis;
    if (m < 1) throw std::invalid_argument("regular_grid_approximation: need >= 1 cell per axis");

    // Equispaced node coordinates per axis (rounded to integers).
    std::vector<std::vector<Coord>> nodes(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
        for (int j = 0; j <= m; ++j) {
            const double t = static_cast<double>(j) / m;
            nodes[static_cast<std::size_t>(a)].push_back(
                omega.lo[a] + static_cast<Coord>(std::llround(t * static_cast<double>(omega.extent(a)))));
        }
    }

    // Sample points: the node lattice, lexicographic.
    std::vector<Point> samples;
    Point idx(static_cast<std::size_t>(d), 0);
    while (true) {
        Point p(static_cast<std::size_t>(d));
        for (int a = 0; a < d; ++a)
            p[static_cast<std::size_t>(a)] =
                nodes[static_cast<std::size_t>(a)][static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
        samples.push_back(p);
        int a = d - 1;
        while (a >= 0) {
            if (idx[static_cast<std::size_t>(a)] < m) {
                ++idx[static_cast<std::size_t>(a)];
                break;
            }
            idx[static_cast<std::size_t>(a)] = 0;
            --a;
        }
        if (a < 0) break;
    }

    std::vector<WeightFunction> weights;
    std::vector<ExtendedImpulse> extended;
    for (std::size_t s = 0; s < samples.size(); ++s) {
        const Point& p = samples[s];
        // multilinear hat: product of per-axis piecewise-linear hats at p
        Point lo(p), hi(p);
        for (int a = 0; a < d; ++a) {
            const auto& ns = nodes[static_cast<std::size_t>(a)];
            const auto it = std::find(ns.begin(), ns.end(), p[static_cast<std::size_t>(a)]);
            const auto j = static_cast<std::size_t>(it - ns.begin());
            if (j > 0) lo[static_cast<std::size_t>(a)] = ns[j - 1];
            if (j + 1 < ns.size()) hi[static_cast<std::size_t>(a)] = ns[j + 1];
        }
        WeightFunction w;
        w.k = static_cast<int>(s);
        w.values = GridFunction(IndexBox(lo, hi));
        for_each_point(w.values.box(), [&](const Point& x) {
            double v = 1.0;
            for (int a = 0; a < d; ++a) {
                const Coord xa = x[static_cast<std::size_t>(a)];
                const Coord pa = p[static_cast<std::size_t>(a)];
                const Coord la = lo[static_cast<std::size_t>(a)];
                const Coord ha = hi[static_cast<std::size_t>(a)];
                if (xa == pa) continue;
                if (xa < pa)
                    v *= static_cast<double>(xa - la) / static_cast<double>(pa - la);
                else
                    v *= 1.0 - static_cast<double>(xa - pa) / static_cast<double>(ha - pa);
            }
            w.values.at(x) = v;
        });
        weights.push_back(std::move(w));

        GridFunction delta(omega);
        delta.at(p) = 1.0;
        Eigen::VectorXd g = op.apply(to_vector(delta));
        extended.push_back(
            ExtendedImpulse{static_cast<int>(s), to_grid_function(shift_neg(omega, p), g)});
    }
    return {omega, nullptr, std::move(weights), std::move(extended)};
}

}  // namespace pcop
