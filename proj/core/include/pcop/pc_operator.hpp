#ifndef PCOP_PC_OPERATOR_HPP
#define PCOP_PC_OPERATOR_HPP

#include <Eigen/Dense>

#include <memory>
#include <vector>

#include "pcop/grid.hpp"
#include "pcop/impulse.hpp"
#include "pcop/pou.hpp"

namespace pcop {

/// The assembled approximation: f -> sum_k phi_k^E * (w_k . f), restricted
/// to the domain. Immutable once assembled; apply/entry/apply_block are pure.
class ProductConvolutionOperator {
  public:
    ProductConvolutionOperator() = default;
    ProductConvolutionOperator(IndexBox domain, std::shared_ptr<const AdaptiveGrid> grid,
                               std::vector<WeightFunction> weights,
                               std::vector<ExtendedImpulse> impulses);

    const IndexBox& domain() const { return domain_; }
    int rank() const { return static_cast<int>(weights_.size()); }
    /// Null for regular-grid (non-tree) constructions.
    const AdaptiveGrid* grid() const { return grid_.get(); }

    const WeightFunction& weight(int k) const { return weights_[static_cast<std::size_t>(k)]; }
    const ExtendedImpulse& extended_impulse(int k) const {
        return impulses_[static_cast<std::size_t>(k)];
    }
    const std::vector<ExtendedImpulse>& impulse_family() const { return impulses_; }

    Eigen::VectorXd apply(const Eigen::VectorXd& f) const;
    Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& f) const;

    /// O(1) matrix entry: sum over the <= 2^d terms with x in U_k.
    double entry(const Point& y, const Point& x) const;

    /// Block apply: g on T from f on S (T,S inside the domain); only terms
    /// whose U_k meets S (or T, for the adjoint) convolve, on G = T - S
    /// sized kernel slices.
    GridFunction apply_block(const IndexBox& T, const IndexBox& S, const GridFunction& f,
                             bool adjoint = false) const;

    /// Dense matrix via the entry route (column assembly).
    Eigen::MatrixXd materialize() const;

    /// Terms with x in U_k (grid lookup when available, else a scan).
    std::vector<int> terms_at(const Point& x) const;

    // Mutators used by the adaptive builder while the expansion grows; the
    // operator is treated as immutable once handed out.
    void append_pair(WeightFunction w, ExtendedImpulse e);
    void set_weight(int k, WeightFunction w) { weights_[static_cast<std::size_t>(k)] = std::move(w); }
    void set_impulse(int k, ExtendedImpulse e) {
        impulses_[static_cast<std::size_t>(k)] = std::move(e);
    }

  private:
    IndexBox domain_;
    std::shared_ptr<const AdaptiveGrid> grid_;
    std::vector<WeightFunction> weights_;
    std::vector<ExtendedImpulse> impulses_;
};

/// Builds weights, impulses and extensions on the given grid and assembles
/// the operator. `extend` = false substitutes extension-by-zero (the
/// boundary-artifact control variant). Costs |points| applications of A.
ProductConvolutionOperator assemble_on_grid(const OperatorHandle& op,
                                            std::shared_ptr<const AdaptiveGrid> grid,
                                            bool extend = true, double pou_tol = 1e-12);

/// Non-adaptive comparator: (cells_per_axis+1)^d equispaced sample points,
/// multilinear-interpolant weights, impulses extended by zero.
ProductConvolutionOperator regular_grid_approximation(const OperatorHandle& op,
                                                      int cells_per_axis);

}  // namespace pcop

#endif
