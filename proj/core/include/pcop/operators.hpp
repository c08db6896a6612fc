#ifndef PCOP_OPERATORS_HPP
#define PCOP_OPERATORS_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <atomic>
#include <functional>
#include <memory>
#include <string>

#include "pcop/box.hpp"
#include "pcop/grid_function.hpp"

namespace pcop {

/// Matrix-free operator on functions over a box domain. Vectors use the
/// domain's lexicographic ordering (last axis fastest). Application counters
/// are atomic; everything else is immutable after construction.
class OperatorHandle {
  public:
    using ApplyFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
    using EntryFn = std::function<double(const Point& y, const Point& x)>;

    OperatorHandle() = default;
    OperatorHandle(IndexBox domain, ApplyFn apply, ApplyFn apply_adjoint, EntryFn entry = nullptr);

    const IndexBox& domain() const { return impl_->domain; }
    std::int64_t n() const { return impl_->domain.num_points(); }

    Eigen::VectorXd apply(const Eigen::VectorXd& f) const;
    Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& f) const;

    bool has_entry() const { return static_cast<bool>(impl_->entry); }
    double entry(const Point& y, const Point& x) const { return impl_->entry(y, x); }

    std::int64_t apply_count() const { return impl_->n_apply.load(); }
    std::int64_t adjoint_count() const { return impl_->n_adjoint.load(); }
    void reset_counters() const;

  private:
    struct Impl {
        IndexBox domain;
        ApplyFn apply;
        ApplyFn adjoint;
        EntryFn entry;
        mutable std::atomic<std::int64_t> n_apply{0};
        mutable std::atomic<std::int64_t> n_adjoint{0};
    };
    std::shared_ptr<Impl> impl_;
};

GridFunction to_grid_function(const IndexBox& box, const Eigen::VectorXd& v);
Eigen::VectorXd to_vector(const GridFunction& f);

OperatorHandle identity_operator(const IndexBox& domain);
OperatorHandle zero_operator(const IndexBox& domain);

/// A f = restriction to the domain of kernel * f (translation-invariant).
OperatorHandle convolution_operator(const IndexBox& domain, GridFunction kernel);

/// Multiplication operator (A f)[x] = diag[x] f[x].
OperatorHandle multiplication_operator(const IndexBox& domain, GridFunction diag);

/// Dense operator from an explicit matrix (rows/cols in domain ordering).
OperatorHandle dense_operator(const IndexBox& domain, Eigen::MatrixXd A);

/// Spatially varying blur on [-1,1]^2 sampled with an n x n grid:
/// a[y,x] = exp(-h^2 |y-x|^2 / (2 sigma(x)^2)), sigma = sigma_in where
/// |g(x)|^2 < 0.5 and sigma_out elsewhere. sigma_in == sigma_out gives the
/// translation-invariant single-kernel case.
OperatorHandle blur_operator(int n, double sigma_in = 0.1, double sigma_out = 0.2);

/// Physical coordinate of grid index i on [-1,1] with n points per axis.
double blur_coordinate(int n, Coord i);

/// Randomized locally-varying Gaussian kernel operator (dense-backed; used
/// by the theory audit). d in {1,2}; kernel width and amplitude vary
/// smoothly with the source location.
OperatorHandle varying_kernel_operator(const IndexBox& domain, std::uint64_t seed);

/// FD Poisson problem on (-1,1)^dim split by the middle hyperplane;
/// A = K_it K_tt^-1 K_ti + K_ib K_bb^-1 K_bi acting on interface functions.
struct PoissonSchurProblem {
    OperatorHandle handle;                // the non-local Schur component A
    IndexBox interface_domain;            // (dim-1)-dimensional index box
    Eigen::SparseMatrix<double> K_ii;     // interface diagonal block
    std::shared_ptr<std::atomic<std::int64_t>> solve_count;  // sub-block solves
};

PoissonSchurProblem poisson_schur_operator(int dim, int n);

/// CLI-facing constructor registry: "blur", "poisson-schur-2d",
/// "poisson-schur-3d".
OperatorHandle make_operator_by_name(const std::string& name, int n);

}  // namespace pcop

#endif
