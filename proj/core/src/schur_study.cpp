#include "pcop/schur_study.hpp"

#include <Eigen/Eigenvalues>

#include <limits>

#include "pcop/verification.hpp"

namespace pcop {

SchurStudyRow schur_preconditioner_study(int dim, int n, double tau, int q, std::uint64_t seed) {
    PoissonSchurProblem problem = poisson_schur_operator(dim, n);

    BuildOptions opt;
    opt.tol = tau;
    opt.q = q;
    opt.seed = seed;
    BuildResult built = build_adaptive(problem.handle, problem.interface_domain, opt);

    const Eigen::MatrixXd A = materialize_dense(problem.handle);
    const Eigen::MatrixXd At = materialize_dense(built.op);
    const Eigen::MatrixXd S = Eigen::MatrixXd(problem.K_ii) - A;
    const Eigen::MatrixXd St = Eigen::MatrixXd(problem.K_ii) - At;

    SchurStudyRow row;
    row.n = n;
    row.r = built.op.rank();
    row.eta_rel = built.report.final_eta_rel;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
    row.cond_S = es.eigenvalues().maxCoeff() / es.eigenvalues().minCoeff();

    // generalized problem S v = lambda Stilde v; requires Stilde SPD
    Eigen::MatrixXd St_sym = 0.5 * (St + St.transpose());
    Eigen::LLT<Eigen::MatrixXd> llt(St_sym);
    if (llt.info() != Eigen::Success) {
        row.stilde_spd = false;
        row.cond_precond = std::numeric_limits<double>::quiet_NaN();
        return row;
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(0.5 * (S + S.transpose()),
                                                                  St_sym);
    row.cond_precond = ges.eigenvalues().maxCoeff() / ges.eigenvalues().minCoeff();
    return row;
}

}  // namespace pcop
