#ifndef PCOP_IMPULSE_HPP
#define PCOP_IMPULSE_HPP

#include <vector>

#include "pcop/grid.hpp"
#include "pcop/grid_function.hpp"
#include "pcop/operators.hpp"

namespace pcop {

/// Recentered impulse response: values[z] = (A delta_{p_k})[z + p_k] on
/// Omega - p_k.
struct ImpulseResponse {
    int k = -1;
    GridFunction values;
};

/// Counting function and per-neighbor weights used to stitch neighbor
/// impulses into the extended impulse.
struct ExtensionWeights {
    int k = -1;
    Point p_k;
    IndexBox omega;
    std::vector<int> nbrs;          // neighbor ids, sorted, includes k
    std::vector<Point> nbr_points;  // aligned with nbrs
    GridFunction counting;          // c_k on the bounding box of its support

    /// Materializes v_k^{(j)}: 1/c_k on the region where impulse j
    /// contributes, 0 elsewhere.
    GridFunction v_of(int j) const;
};

/// Boundary-artifact-free extended impulse; values agree with the raw
/// impulse on Omega - p_k bitwise.
struct ExtendedImpulse {
    int k = -1;
    GridFunction values;
};

/// One application of A to the Kronecker delta at p_k, recentered.
ImpulseResponse compute_impulse(const OperatorHandle& op, const AdaptiveGrid& grid, int k);

ExtensionWeights build_extension_weights(const AdaptiveGrid& grid, int k);

/// phi_k^E = sum_j v_k^{(j)} . phi_j; `neighbor_impulses` aligned with
/// weights.nbrs. The region covered by no neighbor is stored as 0.
ExtendedImpulse extend_impulse(const ExtensionWeights& weights,
                               const std::vector<const GridFunction*>& neighbor_impulses);

/// Zero-extension variant (no stitching): the raw impulse kept on its
/// natural box, reads outside give 0. Used as the boundary-artifact
/// contrast control.
ExtendedImpulse zero_extend_impulse(const ImpulseResponse& impulse);

}  // namespace pcop

#endif
