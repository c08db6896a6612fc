#include "pcop/grid.hpp"

#include <algorithm>
#include <set>

namespace pcop {

AdaptiveGrid AdaptiveGrid::make_root(const IndexBox& domain) {
    for (int i = 0; i < domain.dim(); ++i)
        if (domain.extent(i) < 2)
            throw std::invalid_argument("make_root: need >= 3 points per axis");

    AdaptiveGrid g;
    g.domain_ = domain;
    g.cells_.push_back(CellNode{domain, -1, -1, -1, -1});

    // Subdivide once in each coordinate direction, ascending axis order.
    std::vector<int> frontier{0};
    for (int axis = 0; axis < domain.dim(); ++axis) {
        std::vector<int> next;
        for (int id : frontier) {
            const IndexBox box = g.cells_[static_cast<std::size_t>(id)].box;
            const Coord m = box.midpoint()[axis];
            IndexBox lo_box = box, hi_box = box;
            lo_box.hi[axis] = m;
            hi_box.lo[axis] = m;
            const int lo_id = static_cast<int>(g.cells_.size());
            g.cells_.push_back(CellNode{lo_box, id, -1, -1, -1});
            const int hi_id = static_cast<int>(g.cells_.size());
            g.cells_.push_back(CellNode{hi_box, id, -1, -1, -1});
            auto& parent = g.cells_[static_cast<std::size_t>(id)];
            parent.child_lo = lo_id;
            parent.child_hi = hi_id;
            parent.split_axis = axis;
            next.push_back(lo_id);
            next.push_back(hi_id);
        }
        frontier = std::move(next);
    }

    g.leaf_points_.resize(g.cells_.size());
    for (const auto& c : g.cells_)
        for (const auto& p : corners(c.box)) g.register_point(p);
    for (int k = 0; k < g.num_points(); ++k) g.rebuild_point_cells(k);
    for (int k = 0; k < g.num_points(); ++k) g.rebuild_nbrs(k);
    return g;
}

int AdaptiveGrid::register_point(const Point& p) {
    auto it = point_ids_.find(p);
    if (it != point_ids_.end()) return it->second;
    const int id = static_cast<int>(points_.size());
    points_.push_back(p);
    point_ids_.emplace(p, id);
    cells_of_point_.emplace_back();
    nbrs_.emplace_back();
    return id;
}

void AdaptiveGrid::rebuild_point_cells(int k) {
    for (int c : cells_of_point_[static_cast<std::size_t>(k)]) {
        auto& lp = leaf_points_[static_cast<std::size_t>(c)];
        lp.erase(std::remove(lp.begin(), lp.end(), k), lp.end());
    }
    auto leaves = leaves_containing(points_[static_cast<std::size_t>(k)]);
    cells_of_point_[static_cast<std::size_t>(k)] = leaves;
    for (int c : leaves) {
        auto& lp = leaf_points_[static_cast<std::size_t>(c)];
        lp.insert(std::lower_bound(lp.begin(), lp.end(), k), k);
    }
}

void AdaptiveGrid::rebuild_nbrs(int k) {
    std::set<int> s;
    for (int c : cells_of_point_[static_cast<std::size_t>(k)])
        for (int j : leaf_points_[static_cast<std::size_t>(c)]) s.insert(j);
    nbrs_[static_cast<std::size_t>(k)].assign(s.begin(), s.end());
}

std::vector<int> AdaptiveGrid::leaf_ids() const {
    std::vector<int> out;
    for (int i = 0; i < static_cast<int>(cells_.size()); ++i)
        if (cells_[static_cast<std::size_t>(i)].is_leaf()) out.push_back(i);
    return out;
}

std::optional<int> AdaptiveGrid::find_point(const Point& p) const {
    auto it = point_ids_.find(p);
    if (it == point_ids_.end()) return std::nullopt;
    return it->second;
}

std::vector<IndexBox> AdaptiveGrid::blocky_neighborhood(int k) const {
    std::vector<IndexBox> out;
    for (int c : cells_of_point(k)) out.push_back(cell(c).box);
    return out;
}

IndexBox AdaptiveGrid::footprint(int k) const {
    const auto& cs = cells_of_point(k);
    IndexBox b = cell(cs.front()).box;
    for (std::size_t i = 1; i < cs.size(); ++i) b = bounding_box(b, cell(cs[i]).box);
    return b;
}

std::vector<int> AdaptiveGrid::leaves_containing(const Point& p) const {
    std::vector<int> out;
    if (!domain_.contains(p)) return out;
    std::vector<int> stack{0};
    while (!stack.empty()) {
        const int id = stack.back();
        stack.pop_back();
        const auto& c = cells_[static_cast<std::size_t>(id)];
        if (!c.box.contains(p)) continue;
        if (c.is_leaf()) {
            out.push_back(id);
        } else {
            stack.push_back(c.child_hi);
            stack.push_back(c.child_lo);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

bool AdaptiveGrid::cell_refinable(int cell_id) const {
    for (int i = 0; i < dim(); ++i)
        if (axis_refinable(cell_id, i)) return true;
    return false;
}

std::vector<int> AdaptiveGrid::subdivide(int cell_id, int axis) {
    if (cell_id < 0 || cell_id >= static_cast<int>(cells_.size()))
        throw std::invalid_argument("subdivide: bad cell id");
    if (!cell(cell_id).is_leaf()) throw std::invalid_argument("subdivide: not a leaf");
    if (axis < 0 || axis >= dim()) throw std::invalid_argument("subdivide: bad axis");
    if (!axis_refinable(cell_id, axis))
        throw std::invalid_argument("subdivide: axis extent too small to split");

    const IndexBox box = cell(cell_id).box;
    const Coord m = box.midpoint()[axis];
    IndexBox lo_box = box, hi_box = box;
    lo_box.hi[axis] = m;
    hi_box.lo[axis] = m;

    const int lo_id = static_cast<int>(cells_.size());
    cells_.push_back(CellNode{lo_box, cell_id, -1, -1, -1});
    const int hi_id = static_cast<int>(cells_.size());
    cells_.push_back(CellNode{hi_box, cell_id, -1, -1, -1});
    leaf_points_.emplace_back();
    leaf_points_.emplace_back();
    {
        auto& parent = cells_[static_cast<std::size_t>(cell_id)];
        parent.child_lo = lo_id;
        parent.child_hi = hi_id;
        parent.split_axis = axis;
    }

    // Points previously mapped to the parent leaf move to the children.
    const std::vector<int> old_pts = leaf_points_[static_cast<std::size_t>(cell_id)];
    leaf_points_[static_cast<std::size_t>(cell_id)].clear();
    for (int k : old_pts) {
        auto& cp = cells_of_point_[static_cast<std::size_t>(k)];
        cp.erase(std::remove(cp.begin(), cp.end(), cell_id), cp.end());
        const Point& p = points_[static_cast<std::size_t>(k)];
        for (int child : {lo_id, hi_id}) {
            if (cells_[static_cast<std::size_t>(child)].box.contains(p)) {
                cp.insert(std::lower_bound(cp.begin(), cp.end(), child), child);
                auto& lp = leaf_points_[static_cast<std::size_t>(child)];
                lp.insert(std::lower_bound(lp.begin(), lp.end(), k), k);
            }
        }
    }

    // Register the corners of both children; new ones get fresh ids.
    std::vector<int> new_ids;
    for (int child : {lo_id, hi_id}) {
        for (const auto& c : corners(cells_[static_cast<std::size_t>(child)].box)) {
            const int before = num_points();
            const int id = register_point(c);
            if (id >= before) new_ids.push_back(id);
        }
    }
    // A new point may lie on facets of other leaves (hanging node); map it to
    // every leaf that contains it.
    for (int id : new_ids) rebuild_point_cells(id);

    // Neighbor sets must be rebuilt for points of the split cell, the new
    // points, and points sharing a leaf with a new point.
    std::set<int> affected(old_pts.begin(), old_pts.end());
    for (int id : new_ids) {
        affected.insert(id);
        for (int c : cells_of_point_[static_cast<std::size_t>(id)])
            for (int j : leaf_points_[static_cast<std::size_t>(c)]) affected.insert(j);
    }

    last_changed_.clear();
    for (int k : affected) {
        std::vector<int> before = nbrs_[static_cast<std::size_t>(k)];
        rebuild_nbrs(k);
        if (before != nbrs_[static_cast<std::size_t>(k)]) last_changed_.push_back(k);
    }
    std::sort(last_changed_.begin(), last_changed_.end());
    return new_ids;
}

}  // namespace pcop
