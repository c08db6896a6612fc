#ifndef PCOP_GRID_HPP
#define PCOP_GRID_HPP

#include <map>
#include <optional>
#include <vector>

#include "pcop/box.hpp"

namespace pcop {

/// Node of the binary cell tree. Leaf iff children absent.
struct CellNode {
    IndexBox box;
    int parent = -1;
    int child_lo = -1;  // child on the low side of the split plane
    int child_hi = -1;
    int split_axis = -1;

    bool is_leaf() const { return child_lo < 0; }
};

/// Binary tree of boxes over the domain, with the sample-point registry,
/// leaf membership maps and the neighbor relation. Sample points are the
/// corners of all tree cells; ids are append-only and never reused.
class AdaptiveGrid {
  public:
    /// Splits the domain once per axis (ascending axis order), registering
    /// the 3^d initial sample points. Requires >= 3 points per axis.
    static AdaptiveGrid make_root(const IndexBox& domain);

    const IndexBox& domain() const { return domain_; }
    int dim() const { return domain_.dim(); }

    const std::vector<CellNode>& cells() const { return cells_; }
    const CellNode& cell(int id) const { return cells_[static_cast<std::size_t>(id)]; }
    std::vector<int> leaf_ids() const;

    int num_points() const { return static_cast<int>(points_.size()); }
    const Point& point(int k) const { return points_[static_cast<std::size_t>(k)]; }
    const std::vector<Point>& points() const { return points_; }
    std::optional<int> find_point(const Point& p) const;

    /// Leaf cells whose box contains p_k.
    const std::vector<int>& cells_of_point(int k) const {
        return cells_of_point_[static_cast<std::size_t>(k)];
    }
    /// Sample-point ids inside the box of leaf cell `cell_id`.
    const std::vector<int>& points_in_leaf(int cell_id) const {
        return leaf_points_[static_cast<std::size_t>(cell_id)];
    }
    /// Indices j such that p_j and p_k share a leaf cell; includes k.
    const std::vector<int>& nbrs(int k) const { return nbrs_[static_cast<std::size_t>(k)]; }

    /// Boxes of all leaf cells containing p_k; their union is U_k.
    std::vector<IndexBox> blocky_neighborhood(int k) const;

    /// Bounding box of U_k.
    IndexBox footprint(int k) const;

    /// Ids of all leaves whose box contains p (tree descent).
    std::vector<int> leaves_containing(const Point& p) const;

    /// An axis can be split when its extent is >= 2 (at least 3 points).
    static constexpr Coord kMinSplitExtent = 2;
    bool axis_refinable(int cell_id, int axis) const {
        return cell(cell_id).box.extent(axis) >= kMinSplitExtent;
    }
    bool cell_refinable(int cell_id) const;

    /// Splits leaf `cell_id` at the midpoint of `axis`; registers the corners
    /// of both children and updates membership and neighbor maps. Returns the
    /// ids of genuinely new sample points.
    std::vector<int> subdivide(int cell_id, int axis);

    /// Ids whose neighbor set changed during the last subdivide (includes the
    /// new points).
    const std::vector<int>& last_changed_neighbors() const { return last_changed_; }

  private:
    AdaptiveGrid() = default;

    int register_point(const Point& p);  // returns id; may be existing
    void rebuild_point_cells(int k);
    void rebuild_nbrs(int k);

    IndexBox domain_;
    std::vector<CellNode> cells_;
    std::vector<Point> points_;
    std::map<Point, int> point_ids_;
    std::vector<std::vector<int>> cells_of_point_;
    std::vector<std::vector<int>> leaf_points_;  // indexed by cell id; valid for leaves
    std::vector<std::vector<int>> nbrs_;
    std::vector<int> last_changed_;
};

}  // namespace pcop

#endif
