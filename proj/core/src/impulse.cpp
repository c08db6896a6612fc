#include "pcop/impulse.hpp"

namespace pcop {

ImpulseResponse compute_impulse(const OperatorHandle& op, const AdaptiveGrid& grid, int k) {
    const IndexBox& omega = op.domain();
    GridFunction delta(omega);
    delta.at(grid.point(k)) = 1.0;
    Eigen::VectorXd g = op.apply(to_vector(delta));

    ImpulseResponse out;
    out.k = k;
    out.values = to_grid_function(shift_neg(omega, grid.point(k)), g);
    return out;
}

ExtensionWeights build_extension_weights(const AdaptiveGrid& grid, int k) {
    ExtensionWeights w;
    w.k = k;
    w.p_k = grid.point(k);
    w.omega = grid.domain();
    w.nbrs = grid.nbrs(k);
    for (int j : w.nbrs) w.nbr_points.push_back(grid.point(j));

    IndexBox support = shift_neg(w.omega, w.nbr_points.front());
    for (std::size_t i = 1; i < w.nbr_points.size(); ++i)
        support = bounding_box(support, shift_neg(w.omega, w.nbr_points[i]));

    // c_k: 1 on Omega - p_k, elsewhere the number of covering neighbors.
    GridFunction counting(support);
    GridFunction one(shift_neg(w.omega, w.p_k), 1.0);
    for (std::size_t i = 0; i < w.nbr_points.size(); ++i) {
        if (w.nbrs[i] == k) continue;
        GridFunction ind(shift_neg(w.omega, w.nbr_points[i]), 1.0);
        accumulate(counting, ind, 1.0);
    }
    // overwrite the self region with exactly 1
    for_each_point(one.box(), [&](const Point& z) { counting.at(z) = 1.0; });
    w.counting = std::move(counting);
    return w;
}

GridFunction ExtensionWeights::v_of(int j) const {
    auto it = std::find(nbrs.begin(), nbrs.end(), j);
    if (it == nbrs.end()) throw std::invalid_argument("v_of: not a neighbor");
    const Point& p_j = nbr_points[static_cast<std::size_t>(it - nbrs.begin())];

    const IndexBox self_box = shift_neg(omega, p_k);
    GridFunction v(counting.box());
    for_each_point(shift_neg(omega, p_j), [&](const Point& z) {
        const bool in_self = self_box.contains(z);
        if (j == k) {
            if (in_self) v.at(z) = 1.0;  // c_k == 1 there
        } else if (!in_self) {
            v.at(z) = 1.0 / counting.at(z);
        }
    });
    return v;
}

ExtendedImpulse extend_impulse(const ExtensionWeights& weights,
                               const std::vector<const GridFunction*>& neighbor_impulses) {
    if (neighbor_impulses.size() != weights.nbrs.size())
        throw std::invalid_argument("extend_impulse: impulse list does not match neighbors");

    const IndexBox self_box = shift_neg(weights.omega, weights.p_k);
    const GridFunction* phi_k = nullptr;
    for (std::size_t i = 0; i < weights.nbrs.size(); ++i)
        if (weights.nbrs[i] == weights.k) phi_k = neighbor_impulses[i];
    if (!phi_k) throw std::invalid_argument("extend_impulse: own impulse missing");

    ExtendedImpulse out;
    out.k = weights.k;
    out.values = GridFunction(weights.counting.box());

    // Step 1: exact copy on Omega - p_k.
    overwrite(out.values, *phi_k);

    // Step 2: averaged neighbor data outside; step 3 regions stay 0.
    for (std::size_t i = 0; i < weights.nbrs.size(); ++i) {
        if (weights.nbrs[i] == weights.k) continue;
        const GridFunction& phi_j = *neighbor_impulses[i];
        for_each_point(phi_j.box(), [&](const Point& z) {
            if (self_box.contains(z)) return;
            out.values.at(z) += phi_j.at(z) / weights.counting.at(z);
        });
    }
    return out;
}

ExtendedImpulse zero_extend_impulse(const ImpulseResponse& impulse) {
    return ExtendedImpulse{impulse.k, impulse.values};
}

}  // namespace pcop
