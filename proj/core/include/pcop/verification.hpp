#ifndef PCOP_VERIFICATION_HPP
#define PCOP_VERIFICATION_HPP

#include <Eigen/Dense>

#include <string>

#include "pcop/adaptivity.hpp"
#include "pcop/pc_operator.hpp"

namespace pcop {

enum class MaterializeRoute { ViaApply, ViaEntry };

/// Dense matrix of a matrix-free operator, column by column. Throws when the
/// point count exceeds `cap`.
Eigen::MatrixXd materialize_dense(const OperatorHandle& op, std::int64_t cap = 1 << 22);

/// Dense matrix of the approximation; the entry route assembles columns in
/// O(2^d N) each, the apply route costs N applications.
Eigen::MatrixXd materialize_dense(const ProductConvolutionOperator& pcop,
                                  std::int64_t cap = 1 << 22,
                                  MaterializeRoute route = MaterializeRoute::ViaEntry);

/// Pointwise translation failure: F[y,x] = max_{k:(y,x) in mu_k^E} |F_k[y,x]|
/// with F_k[y,x] = A[y-x+p_k, p_k] - A[y,x]; coverage counts the covering k
/// per (y,x).
struct TranslationFailureField {
    Eigen::MatrixXd F;
    Eigen::MatrixXi coverage;
    std::int64_t n_coverage_gaps = 0;

    double frobenius_norm() const { return F.norm(); }
};

TranslationFailureField compute_failure_field(const Eigen::MatrixXd& A_dense,
                                              const AdaptiveGrid& grid);

/// The induced pair weights W_k[y,x] = sum_{j in nbrs(k)} w_j[x] v_j^{(k)}[y-x],
/// materialized one k at a time.
class PairWeightField {
  public:
    PairWeightField(const AdaptiveGrid& grid, const ProductConvolutionOperator& pcop);

    Eigen::MatrixXd W(int k) const;
    /// sum_k W_k over the whole product space.
    Eigen::MatrixXd sum_all() const;
    /// true if W_k is nonzero only on mu_k^E.
    bool subordinate_to_cover(int k, double tol = 0.0) const;

    /// mu_k^E membership test.
    bool in_mu(int k, const Point& y, const Point& x) const;

  private:
    const AdaptiveGrid* grid_;
    const ProductConvolutionOperator* pcop_;
    std::vector<ExtensionWeights> ext_;
    std::vector<std::vector<char>> u_ext_;  // indicator of U_k^E over the domain
};

/// Numerical audit of the error theory on one (operator, grid) instance.
struct TheoryAudit {
    double err_fro = 0.0;        // ||Atilde - A||_F
    double bound_fro = 0.0;      // ||F||_F
    double prop43_entry_dev = 0.0;     // identity via pair weights
    double prop43_pou_dev = 0.0;       // |sum_k W_k - 1|_max
    bool prop43_subordinate = false;   // supp W_k inside mu_k^E
    double prop44_max_dev = 0.0;       // pointwise error identity
    double pointwise_excess = 0.0;     // max(|err| - F)
    std::int64_t n_coverage_gaps = 0;
    bool holds = false;

    std::string to_json() const;
};

TheoryAudit check_theorem(const Eigen::MatrixXd& A_dense, const ProductConvolutionOperator& pcop,
                          const AdaptiveGrid& grid);

}  // namespace pcop

#endif
