#ifndef PCOP_POU_HPP
#define PCOP_POU_HPP

#include <map>
#include <vector>

#include "pcop/grid.hpp"
#include "pcop/grid_function.hpp"

namespace pcop {

/// Harmonic weighting function w_k: 1 at p_k, 0 at all other sample points,
/// discrete-harmonic in between; stored on the bounding box of U_k with exact
/// zeros outside U_k.
struct WeightFunction {
    int k = -1;
    GridFunction values;

    const IndexBox& footprint() const { return values.box(); }
};

/// Rectilinear complex of one cell: boxes of each dimension 0..d, where
/// broken facets are replaced by their constituent smaller boxes.
struct CellSkeleton {
    int cell_id = -1;
    std::vector<std::vector<IndexBox>> by_dim;  // by_dim[m] = m-dimensional boxes
};

/// Skeletons of all cells of U_k.
std::vector<CellSkeleton> facet_skeleton(const AdaptiveGrid& grid, int k);

/// Dirichlet graph-Laplacian solve on the box of `boundary_values` (all
/// boundary points pre-filled); interior filled with the discrete-harmonic
/// extension. 1-dimensional boxes are solved in closed form. Throws if the
/// relative residual exceeds tol.
GridFunction harmonic_solve(const GridFunction& boundary_values, double tol);

/// Builds weighting functions, caching per-cell harmonic bases so that
/// repeated builds after local refinement only re-solve affected cells.
class WeightBuilder {
  public:
    explicit WeightBuilder(const AdaptiveGrid& grid, double tol = 1e-12);

    WeightFunction build(int k);

    /// Drop cached bases for cells whose skeleton changed (split cells and
    /// leaves that gained a hanging point).
    void invalidate_cell(int cell_id);

    const AdaptiveGrid& grid() const { return *grid_; }
    double tol() const { return tol_; }

  private:
    struct CellBasis {
        std::vector<int> sample_ids;       // sorted; all registered points in the cell box
        std::vector<GridFunction> fields;  // one per sample id, on the cell box
    };

    const CellBasis& cell_basis(int cell_id);
    CellBasis compute_cell_basis(int cell_id) const;

    const AdaptiveGrid* grid_;
    double tol_;
    std::map<int, CellBasis> cache_;
};

/// One-off construction of w_k (Fig.-4-style recursive solve).
WeightFunction build_weight(const AdaptiveGrid& grid, int k, double tol = 1e-12);

}  // namespace pcop

#endif
