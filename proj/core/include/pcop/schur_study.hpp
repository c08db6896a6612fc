#ifndef PCOP_SCHUR_STUDY_HPP
#define PCOP_SCHUR_STUDY_HPP

#include "pcop/adaptivity.hpp"
#include "pcop/operators.hpp"

namespace pcop {

struct SchurStudyRow {
    int n = 0;
    double cond_S = 0.0;
    double cond_precond = 0.0;  // cond(Stilde^-1 S), dense factorization
    int r = 0;
    double eta_rel = 0.0;
    bool stilde_spd = true;
};

/// Builds the product-convolution approximation of the non-local Schur
/// component at relative tolerance tau, forms S = K_ii - A and
/// Stilde = K_ii - Atilde densely, and returns the spectral condition
/// numbers of S and of Stilde^-1 S.
SchurStudyRow schur_preconditioner_study(int dim, int n, double tau, int q = 5,
                                         std::uint64_t seed = 0);

}  // namespace pcop

#endif
