#include "pcop/pou.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <set>
#include <stdexcept>

namespace pcop {

namespace {

std::vector<int> free_axes(const IndexBox& box) {
    std::vector<int> out;
    for (int i = 0; i < box.dim(); ++i)
        if (box.extent(i) > 0) out.push_back(i);
    return out;
}

// Per-axis split coordinates of a facet: coordinates of sample points lying
// on the facet that are strictly interior along that axis. A hanging point
// on a facet edge still breaks the facet (the adjacent finer cells' facets
// are the pieces), so strictness is per axis, not joint.
std::vector<std::vector<Coord>> facet_cuts(const IndexBox& box, const std::vector<Point>& pts) {
    const int d = box.dim();
    std::vector<std::vector<Coord>> cuts(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
        cuts[static_cast<std::size_t>(a)].push_back(box.lo[a]);
        cuts[static_cast<std::size_t>(a)].push_back(box.hi[a]);
    }
    for (const auto& p : pts) {
        if (!box.contains(p)) continue;
        for (int a = 0; a < d; ++a)
            if (p[a] > box.lo[a] && p[a] < box.hi[a]) cuts[static_cast<std::size_t>(a)].push_back(p[a]);
    }
    for (auto& c : cuts) {
        std::sort(c.begin(), c.end());
        c.erase(std::unique(c.begin(), c.end()), c.end());
    }
    return cuts;
}

// Tensor split of a box along the facet_cuts hyperplanes.
std::vector<IndexBox> tensor_split(const IndexBox& box, const std::vector<Point>& pts) {
    const int d = box.dim();
    const auto cuts = facet_cuts(box, pts);
    std::vector<IndexBox> out;
    Point idx(static_cast<std::size_t>(d), 0);
    while (true) {
        Point lo(static_cast<std::size_t>(d)), hi(static_cast<std::size_t>(d));
        for (int a = 0; a < d; ++a) {
            const auto& c = cuts[static_cast<std::size_t>(a)];
            const auto i = static_cast<std::size_t>(idx[static_cast<std::size_t>(a)]);
            lo[static_cast<std::size_t>(a)] = c[i];
            hi[static_cast<std::size_t>(a)] = c.size() == 1 ? c[i] : c[i + 1];
        }
        out.emplace_back(lo, hi);
        int a = d - 1;
        while (a >= 0) {
            const auto n = static_cast<Coord>(
                std::max<std::size_t>(1, cuts[static_cast<std::size_t>(a)].size() - 1));
            if (idx[static_cast<std::size_t>(a)] + 1 < n) {
                ++idx[static_cast<std::size_t>(a)];
                break;
            }
            idx[static_cast<std::size_t>(a)] = 0;
            --a;
        }
        if (a < 0) break;
    }
    return out;
}

struct BoxLess {
    bool operator()(const IndexBox& a, const IndexBox& b) const {
        if (a.lo != b.lo) return a.lo < b.lo;
        return a.hi < b.hi;
    }
};

// Shared state of one cell-basis evaluation: ns fields on the cell box plus
// a known-mask over the box.
struct EvalState {
    IndexBox box;
    std::vector<GridFunction>* fields = nullptr;
    std::vector<char> known;

    std::int64_t lin(const Point& p) const { return (*fields)[0].linear_index(p); }
    bool is_known(const Point& p) const { return known[static_cast<std::size_t>(lin(p))] != 0; }
    void mark(const Point& p) { known[static_cast<std::size_t>(lin(p))] = 1; }
};

// Linear interpolation along a 1-dimensional box between consecutive known
// points (the discrete harmonic solution in 1D).
void solve_line(EvalState& st, const IndexBox& line) {
    const auto fa = free_axes(line);
    if (fa.size() != 1) throw std::logic_error("solve_line: not 1-dimensional");
    const int a = fa[0];
    std::vector<Coord> knowns;
    Point p(line.lo);
    for (Coord t = line.lo[a]; t <= line.hi[a]; ++t) {
        p[static_cast<std::size_t>(a)] = t;
        if (st.is_known(p)) knowns.push_back(t);
    }
    if (knowns.empty() || knowns.front() != line.lo[a] || knowns.back() != line.hi[a])
        throw std::logic_error("solve_line: endpoints not yet assigned");
    const std::size_t ns = st.fields->size();
    Point q0(line.lo), q1(line.lo);
    for (std::size_t i = 0; i + 1 < knowns.size(); ++i) {
        const Coord t0 = knowns[i], t1 = knowns[i + 1];
        q0[static_cast<std::size_t>(a)] = t0;
        q1[static_cast<std::size_t>(a)] = t1;
        for (Coord t = t0 + 1; t < t1; ++t) {
            p[static_cast<std::size_t>(a)] = t;
            const double s = static_cast<double>(t - t0) / static_cast<double>(t1 - t0);
            for (std::size_t j = 0; j < ns; ++j) {
                auto& f = (*st.fields)[j];
                f.at(p) = (1.0 - s) * f.at(q0) + s * f.at(q1);
            }
            st.mark(p);
        }
    }
}

// Dirichlet graph-Laplacian solve of the relative interior of `face`
// (boundary values must be known already). Works for any dimension >= 2.
void solve_interior(EvalState& st, const IndexBox& face, double tol) {
    const auto fa = free_axes(face);
    const int m = static_cast<int>(fa.size());
    if (m < 2) throw std::logic_error("solve_interior: dimension < 2");

    IndexBox interior = face;
    for (int a : fa) {
        interior.lo[a] += 1;
        interior.hi[a] -= 1;
    }
    for (int a : fa)
        if (interior.lo[a] > interior.hi[a]) return;  // no interior points

    std::vector<Point> ipts;
    std::map<Point, int> index;
    for_each_point(interior, [&](const Point& p) {
        index.emplace(p, static_cast<int>(ipts.size()));
        ipts.push_back(p);
    });

    const int n = static_cast<int>(ipts.size());
    const std::size_t ns = st.fields->size();
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(ns));
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(2 * m + 1));

    for (int i = 0; i < n; ++i) {
        trip.emplace_back(i, i, 2.0 * m);
        Point nb = ipts[static_cast<std::size_t>(i)];
        for (int a : fa) {
            for (int s : {-1, +1}) {
                nb[static_cast<std::size_t>(a)] += s;
                auto it = index.find(nb);
                if (it != index.end()) {
                    trip.emplace_back(i, it->second, -1.0);
                } else {
                    if (!st.is_known(nb))
                        throw std::logic_error("solve_interior: boundary value missing");
                    for (std::size_t j = 0; j < ns; ++j)
                        rhs(i, static_cast<Eigen::Index>(j)) += (*st.fields)[j].at(nb);
                }
                nb[static_cast<std::size_t>(a)] -= s;
            }
        }
    }

    Eigen::SparseMatrix<double> L(n, n);
    L.setFromTriplets(trip.begin(), trip.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(L);
    if (solver.info() != Eigen::Success) throw std::runtime_error("harmonic solve: factorization failed");
    Eigen::MatrixXd sol = solver.solve(rhs);

    const double rhs_norm = rhs.norm();
    const double res = (L * sol - rhs).norm();
    if (res > tol * std::max(rhs_norm, 1.0))
        throw std::runtime_error("harmonic solve: residual above tolerance");

    for (int i = 0; i < n; ++i) {
        const Point& p = ipts[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < ns; ++j)
            (*st.fields)[j].at(p) = sol(i, static_cast<Eigen::Index>(j));
        st.mark(p);
    }
}

// Enumerates the k-dimensional "edges" of a box: all boxes obtained by
// keeping `keep` axes free and pinning every other free axis to lo or hi.
std::vector<IndexBox> sub_boxes_of_dim(const IndexBox& box, int keep) {
    const auto fa = free_axes(box);
    const int m = static_cast<int>(fa.size());
    std::vector<IndexBox> out;
    if (keep > m) return out;
    std::vector<int> comb(static_cast<std::size_t>(keep));
    // iterate over combinations of free axes to keep
    std::function<void(int, int)> rec = [&](int start, int chosen) {
        if (chosen == keep) {
            const int fixed = m - keep;
            for (std::size_t mask = 0; mask < (std::size_t(1) << fixed); ++mask) {
                IndexBox b = box;
                int bit = 0;
                for (int idx = 0; idx < m; ++idx) {
                    const int axis = fa[static_cast<std::size_t>(idx)];
                    if (std::find(comb.begin(), comb.end(), axis) != comb.end()) continue;
                    const bool hi = (mask >> bit) & 1;
                    b.lo[axis] = b.hi[axis] = hi ? box.hi[axis] : box.lo[axis];
                    ++bit;
                }
                out.push_back(b);
            }
            return;
        }
        for (int i = start; i < m; ++i) {
            comb[static_cast<std::size_t>(chosen)] = fa[static_cast<std::size_t>(i)];
            rec(i + 1, chosen + 1);
        }
    };
    rec(0, 0);
    return out;
}

}  // namespace

std::vector<CellSkeleton> facet_skeleton(const AdaptiveGrid& grid, int k) {
    std::vector<CellSkeleton> out;
    for (int cid : grid.cells_of_point(k)) {
        const IndexBox& box = grid.cell(cid).box;
        const int d = box.dim();
        std::vector<Point> pts;
        for (int j : grid.points_in_leaf(cid)) pts.push_back(grid.point(j));

        CellSkeleton sk;
        sk.cell_id = cid;
        sk.by_dim.assign(static_cast<std::size_t>(d) + 1, {});
        sk.by_dim[static_cast<std::size_t>(d)].push_back(box);

        for (int m = d; m >= 1; --m) {
            std::set<IndexBox, BoxLess> lower;
            for (const auto& e : sk.by_dim[static_cast<std::size_t>(m)]) {
                for (int a : free_axes(e)) {
                    for (Coord v : {e.lo[a], e.hi[a]}) {
                        IndexBox facet = e;
                        facet.lo[a] = facet.hi[a] = v;
                        for (const auto& piece : tensor_split(facet, pts)) lower.insert(piece);
                    }
                }
            }
            sk.by_dim[static_cast<std::size_t>(m - 1)].assign(lower.begin(), lower.end());
        }
        out.push_back(std::move(sk));
    }
    return out;
}

GridFunction harmonic_solve(const GridFunction& boundary_values, double tol) {
    if (tol <= 0) throw std::invalid_argument("harmonic_solve: tol must be positive");
    GridFunction out = boundary_values;
    const IndexBox& box = out.box();
    const auto fa = free_axes(box);

    bool has_interior = !fa.empty();
    for (int a : fa)
        if (box.extent(a) < 2) has_interior = false;
    if (!has_interior) return out;

    std::vector<GridFunction> fields{out};
    EvalState st;
    st.box = box;
    st.fields = &fields;
    st.known.assign(static_cast<std::size_t>(box.num_points()), 1);
    // mark interior unknown
    IndexBox interior = box;
    for (int a : fa) {
        interior.lo[a] += 1;
        interior.hi[a] -= 1;
    }
    for_each_point(interior,
                   [&](const Point& p) { st.known[static_cast<std::size_t>(st.lin(p))] = 0; });

    if (fa.size() == 1) {
        solve_line(st, box);
    } else {
        solve_interior(st, box, tol);
    }
    return fields[0];
}

namespace {

// Lowest-id leaf whose box contains p; the canonical owner of the stored
// value at multi-cell points.
int canonical_leaf(const AdaptiveGrid& g, const Point& p) {
    return g.leaves_containing(p).front();
}

}  // namespace

WeightBuilder::WeightBuilder(const AdaptiveGrid& grid, double tol) : grid_(&grid), tol_(tol) {}

void WeightBuilder::invalidate_cell(int cell_id) { cache_.erase(cell_id); }

const WeightBuilder::CellBasis& WeightBuilder::cell_basis(int cell_id) {
    auto it = cache_.find(cell_id);
    if (it != cache_.end()) return it->second;
    return cache_.emplace(cell_id, compute_cell_basis(cell_id)).first->second;
}

WeightBuilder::CellBasis WeightBuilder::compute_cell_basis(int cell_id) const {
    const AdaptiveGrid& g = *grid_;
    const IndexBox& box = g.cell(cell_id).box;
    const int d = box.dim();

    CellBasis basis;
    basis.sample_ids = g.points_in_leaf(cell_id);
    const std::size_t ns = basis.sample_ids.size();
    basis.fields.assign(ns, GridFunction(box));

    EvalState st;
    st.box = box;
    st.fields = &basis.fields;
    st.known.assign(static_cast<std::size_t>(box.num_points()), 0);

    // Dimension 0: Kronecker data at the sample points.
    for (std::size_t j = 0; j < ns; ++j) {
        const Point& p = g.point(basis.sample_ids[j]);
        basis.fields[j].at(p) = 1.0;
        st.mark(p);
    }

    // Dimension 1: the edge lines of the cell. Sample points in their
    // relative interiors act as additional interpolation knots, which is
    // exactly the solve of each broken sub-segment.
    for (const auto& line : sub_boxes_of_dim(box, 1)) solve_line(st, line);
    if (d == 1) return basis;

    // Dimension 2: faces. For d = 3 a face broken by hanging sample points is
    // tensor-split; the split lines are solved first (axis order, then
    // coordinate order), then each sub-face.
    for (const auto& face : sub_boxes_of_dim(box, 2)) {
        std::vector<Point> pts;
        for (int id : g.points_in_leaf(cell_id)) pts.push_back(g.point(id));
        const auto cuts = facet_cuts(face, pts);
        bool broken = false;
        for (int a = 0; a < d; ++a)
            if (cuts[static_cast<std::size_t>(a)].size() > 2) broken = true;
        if (broken) {
            for (int a : free_axes(face)) {
                for (Coord c : cuts[static_cast<std::size_t>(a)]) {
                    if (c == face.lo[a] || c == face.hi[a]) continue;
                    IndexBox line = face;
                    line.lo[a] = line.hi[a] = c;
                    solve_line(st, line);
                }
            }
            for (const auto& piece : tensor_split(face, pts))
                if (free_axes(piece).size() == 2) solve_interior(st, piece, tol_);
        } else {
            solve_interior(st, face, tol_);
        }
    }
    if (d == 2) return basis;

    // Dimension 3: the cell interior.
    solve_interior(st, box, tol_);
    return basis;
}

WeightFunction WeightBuilder::build(int k) {
    const AdaptiveGrid& g = *grid_;
    WeightFunction w;
    w.k = k;
    w.values = GridFunction(g.footprint(k));
    for (int cid : g.cells_of_point(k)) {
        const CellBasis& basis = cell_basis(cid);
        auto it = std::lower_bound(basis.sample_ids.begin(), basis.sample_ids.end(), k);
        if (it == basis.sample_ids.end() || *it != k)
            throw std::logic_error("build_weight: sample point missing from cell basis");
        const auto idx = static_cast<std::size_t>(it - basis.sample_ids.begin());
        if (g.dim() <= 2) {
            // shared-facet traces agree bitwise in 1d/2d
            overwrite(w.values, basis.fields[idx]);
        } else {
            // Nonconforming 3d facets can carry different per-cell traces at
            // shared points; the lowest-id containing leaf owns the stored
            // value (zero when the owner's sample set excludes k), which
            // keeps the family single-valued and summing to one.
            for_each_point(g.cell(cid).box, [&](const Point& p) {
                if (canonical_leaf(g, p) == cid) w.values.at(p) = basis.fields[idx].at(p);
            });
        }
    }
    return w;
}

WeightFunction build_weight(const AdaptiveGrid& grid, int k, double tol) {
    WeightBuilder builder(grid, tol);
    return builder.build(k);
}

}  // namespace pcop
