#include "pcop/verification.hpp"

#include <json.hpp>

#include <stdexcept>

namespace pcop {

Eigen::MatrixXd materialize_dense(const OperatorHandle& op, std::int64_t cap) {
    const std::int64_t N = op.n();
    if (N > cap) throw std::invalid_argument("materialize_dense: oracle cap exceeded");
    Eigen::MatrixXd A(N, N);
    for (std::int64_t j = 0; j < N; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(N);
        e[j] = 1.0;
        A.col(j) = op.apply(e);
    }
    return A;
}

Eigen::MatrixXd materialize_dense(const ProductConvolutionOperator& pcop, std::int64_t cap,
                                  MaterializeRoute route) {
    const std::int64_t N = pcop.domain().num_points();
    if (N > cap) throw std::invalid_argument("materialize_dense: oracle cap exceeded");
    if (route == MaterializeRoute::ViaEntry) return pcop.materialize();
    Eigen::MatrixXd A(N, N);
    for (std::int64_t j = 0; j < N; ++j) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(N);
        e[j] = 1.0;
        A.col(j) = pcop.apply(e);
    }
    return A;
}

namespace {

// U_k^E indicator over the domain for every k.
std::vector<std::vector<char>> extended_cover(const AdaptiveGrid& grid) {
    GridFunction layout(grid.domain());
    std::vector<std::vector<char>> out(static_cast<std::size_t>(grid.num_points()));
    for (int k = 0; k < grid.num_points(); ++k) {
        auto& ind = out[static_cast<std::size_t>(k)];
        ind.assign(static_cast<std::size_t>(grid.domain().num_points()), 0);
        for (int j : grid.nbrs(k))
            for (int c : grid.cells_of_point(j))
                for_each_point(grid.cell(c).box, [&](const Point& p) {
                    ind[static_cast<std::size_t>(layout.linear_index(p))] = 1;
                });
    }
    return out;
}

}  // namespace

TranslationFailureField compute_failure_field(const Eigen::MatrixXd& A_dense,
                                              const AdaptiveGrid& grid) {
    const IndexBox& omega = grid.domain();
    const std::int64_t N = omega.num_points();
    if (A_dense.rows() != N || A_dense.cols() != N)
        throw std::invalid_argument("compute_failure_field: matrix/domain mismatch");

    GridFunction layout(omega);
    auto u_ext = extended_cover(grid);

    TranslationFailureField out;
    out.F = Eigen::MatrixXd::Zero(N, N);
    out.coverage = Eigen::MatrixXi::Zero(N, N);

    for (int k = 0; k < grid.num_points(); ++k) {
        const Point& pk = grid.point(k);
        const auto pk_lin = static_cast<Eigen::Index>(layout.linear_index(pk));
        const auto& ind = u_ext[static_cast<std::size_t>(k)];
        Point shifted(pk);
        for_each_point(omega, [&](const Point& x) {
            const auto xl = static_cast<Eigen::Index>(layout.linear_index(x));
            if (!ind[static_cast<std::size_t>(xl)]) return;
            for_each_point(omega, [&](const Point& y) {
                // y - x + p_k must stay inside the domain
                bool inside = true;
                for (std::size_t i = 0; i < shifted.size(); ++i) {
                    shifted[i] = y[i] - x[i] + pk[i];
                    if (shifted[i] < omega.lo[i] || shifted[i] > omega.hi[i]) inside = false;
                }
                if (!inside) return;
                const auto yl = static_cast<Eigen::Index>(layout.linear_index(y));
                const double fk =
                    A_dense(static_cast<Eigen::Index>(layout.linear_index(shifted)), pk_lin) -
                    A_dense(yl, xl);
                out.F(yl, xl) = std::max(out.F(yl, xl), std::abs(fk));
                out.coverage(yl, xl) += 1;
            });
        });
    }
    out.n_coverage_gaps = (out.coverage.array() == 0).count();
    return out;
}

PairWeightField::PairWeightField(const AdaptiveGrid& grid, const ProductConvolutionOperator& pcop)
    : grid_(&grid), pcop_(&pcop) {
    for (int k = 0; k < grid.num_points(); ++k) ext_.push_back(build_extension_weights(grid, k));
    u_ext_ = extended_cover(grid);
}

bool PairWeightField::in_mu(int k, const Point& y, const Point& x) const {
    GridFunction layout(grid_->domain());
    if (!u_ext_[static_cast<std::size_t>(k)][static_cast<std::size_t>(layout.linear_index(x))])
        return false;
    const Point& pk = grid_->point(k);
    for (std::size_t i = 0; i < x.size(); ++i) {
        const Coord s = y[i] - x[i] + pk[i];
        if (s < grid_->domain().lo[i] || s > grid_->domain().hi[i]) return false;
    }
    return true;
}

Eigen::MatrixXd PairWeightField::W(int k) const {
    const IndexBox& omega = grid_->domain();
    const std::int64_t N = omega.num_points();
    GridFunction layout(omega);
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(N, N);

    for (int j : grid_->nbrs(k)) {
        const GridFunction v = ext_[static_cast<std::size_t>(j)].v_of(k);
        const WeightFunction& wj = pcop_->weight(j);
        for_each_point(wj.footprint(), [&](const Point& x) {
            const double wx = wj.values.at(x);
            if (wx == 0.0) return;
            const auto xl = static_cast<Eigen::Index>(layout.linear_index(x));
            Point z(x);
            for_each_point(omega, [&](const Point& y) {
                for (std::size_t i = 0; i < z.size(); ++i) z[i] = y[i] - x[i];
                const double vv = v.value_or_zero(z);
                if (vv == 0.0) return;
                out(static_cast<Eigen::Index>(layout.linear_index(y)), xl) += wx * vv;
            });
        });
    }
    return out;
}

Eigen::MatrixXd PairWeightField::sum_all() const {
    const std::int64_t N = grid_->domain().num_points();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(N, N);
    for (int k = 0; k < grid_->num_points(); ++k) sum += W(k);
    return sum;
}

bool PairWeightField::subordinate_to_cover(int k, double tol) const {
    const Eigen::MatrixXd Wk = W(k);
    GridFunction layout(grid_->domain());
    bool ok = true;
    for_each_point(grid_->domain(), [&](const Point& x) {
        const auto xl = static_cast<Eigen::Index>(layout.linear_index(x));
        for_each_point(grid_->domain(), [&](const Point& y) {
            const auto yl = static_cast<Eigen::Index>(layout.linear_index(y));
            if (std::abs(Wk(yl, xl)) > tol && !in_mu(k, y, x)) ok = false;
        });
    });
    return ok;
}

std::string TheoryAudit::to_json() const {
    nlohmann::json j;
    j["err_fro"] = err_fro;
    j["bound_fro"] = bound_fro;
    j["n_coverage_gaps"] = n_coverage_gaps;
    j["prop43_max_dev"] = std::max(prop43_entry_dev, prop43_pou_dev);
    j["prop43_entry_dev"] = prop43_entry_dev;
    j["prop43_pou_dev"] = prop43_pou_dev;
    j["prop43_subordinate"] = prop43_subordinate;
    j["prop44_max_dev"] = prop44_max_dev;
    j["pointwise_excess"] = pointwise_excess;
    j["holds"] = holds;
    return j.dump(2);
}

TheoryAudit check_theorem(const Eigen::MatrixXd& A_dense, const ProductConvolutionOperator& pcop,
                          const AdaptiveGrid& grid) {
    const IndexBox& omega = grid.domain();
    const std::int64_t N = omega.num_points();
    GridFunction layout(omega);

    const Eigen::MatrixXd At = materialize_dense(pcop);
    const Eigen::MatrixXd err = At - A_dense;
    const TranslationFailureField ff = compute_failure_field(A_dense, grid);
    PairWeightField pw(grid, pcop);

    TheoryAudit audit;
    audit.err_fro = err.norm();
    audit.bound_fro = ff.frobenius_norm();
    audit.n_coverage_gaps = ff.n_coverage_gaps;

    // pair-weight identities: entry reconstruction, partition of unity,
    // subordination to the cover, and the pointwise error representation
    // Atilde - A = sum_k W_k F_k
    Eigen::MatrixXd pou_sum = Eigen::MatrixXd::Zero(N, N);
    Eigen::MatrixXd entry_sum = Eigen::MatrixXd::Zero(N, N);
    Eigen::MatrixXd residual_sum = Eigen::MatrixXd::Zero(N, N);
    audit.prop43_subordinate = true;

    for (int k = 0; k < grid.num_points(); ++k) {
        const Eigen::MatrixXd Wk = pw.W(k);
        pou_sum += Wk;
        const Point& pk = grid.point(k);
        const auto pk_lin = static_cast<Eigen::Index>(layout.linear_index(pk));
        Point shifted(pk);
        for_each_point(omega, [&](const Point& x) {
            const auto xl = static_cast<Eigen::Index>(layout.linear_index(x));
            for_each_point(omega, [&](const Point& y) {
                const auto yl = static_cast<Eigen::Index>(layout.linear_index(y));
                const double wk = Wk(yl, xl);
                if (wk == 0.0) return;
                if (!pw.in_mu(k, y, x)) {
                    audit.prop43_subordinate = false;
                    return;
                }
                bool inside = true;
                for (std::size_t i = 0; i < shifted.size(); ++i) {
                    shifted[i] = y[i] - x[i] + pk[i];
                    if (shifted[i] < omega.lo[i] || shifted[i] > omega.hi[i]) inside = false;
                }
                // inside is guaranteed by in_mu
                if (!inside) return;
                const double phi_k =
                    A_dense(static_cast<Eigen::Index>(layout.linear_index(shifted)), pk_lin);
                entry_sum(yl, xl) += wk * phi_k;
                residual_sum(yl, xl) += wk * (phi_k - A_dense(yl, xl));
            });
        });
    }

    audit.prop43_pou_dev = (pou_sum.array() - 1.0).abs().maxCoeff();
    audit.prop43_entry_dev = (entry_sum - At).array().abs().maxCoeff();
    audit.prop44_max_dev = (residual_sum - err).array().abs().maxCoeff();
    audit.pointwise_excess = (err.array().abs() - ff.F.array()).maxCoeff();

    audit.holds = audit.prop43_pou_dev <= 1e-12 && audit.prop43_entry_dev <= 1e-12 &&
                  audit.prop43_subordinate && audit.prop44_max_dev <= 1e-12 &&
                  audit.pointwise_excess <= 1e-12 &&
                  audit.err_fro <= audit.bound_fro + 1e-10;
    return audit;
}

}  // namespace pcop
