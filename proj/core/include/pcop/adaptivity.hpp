#ifndef PCOP_ADAPTIVITY_HPP
#define PCOP_ADAPTIVITY_HPP

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <functional>

#include "pcop/pc_operator.hpp"

namespace pcop {

/// Gaussian probes Z and their adjoint images Y = A* Z. Y is computed once;
/// the whole set is deterministic given the seed.
struct ProbeSet {
    std::uint64_t seed = 0;
    int q = 0;
    std::vector<GridFunction> zeta;  // on the domain
    std::vector<GridFunction> y;     // A* zeta_i on the domain
};

ProbeSet make_probes(const OperatorHandle& op, int q, std::uint64_t seed);

/// Cached adjoint-sample state: Theta_{k,i} = flip(phi_k^E) * zeta_i
/// restricted to the weight footprint, the assembled Ytilde = Atilde* Z,
/// and the per-leaf error estimators.
struct EstimatorState {
    int q = 0;
    double y_norm = 0.0;                           // ||Y||_F
    std::vector<std::vector<GridFunction>> theta;  // [k][i]
    std::vector<GridFunction> ytilde;              // q functions on the domain
    std::vector<GridFunction> diff;                // Ytilde - Y
    std::map<int, double> cell_errors;             // leaf id -> eta_C
    double eta_abs = 0.0;
    double eta_rel = 0.0;

    // probe spectra keyed by padded transform shape
    std::map<std::vector<int>, std::vector<std::vector<std::complex<double>>>> zeta_hat;
};

EstimatorState make_estimator_state(const ProbeSet& probes);

/// Recomputes Theta only for changed_ks (new points and points whose
/// neighbor set changed), reassembles Ytilde over all k and refreshes the
/// estimators. A k outside the cache that is not listed as changed is a hard
/// error.
void update_samples(EstimatorState& state, const ProductConvolutionOperator& pcop,
                    const std::vector<int>& changed_ks, const ProbeSet& probes);

/// eta_C = (1/sqrt q) ||(Ytilde - Y)[C,.]|| per leaf; eta_Omega over the
/// whole domain (no facet double-counting).
void eta_for_cells(EstimatorState& state, const AdaptiveGrid& grid);

/// Subdivision direction: the refinable axis along which the averaged
/// corner impulses of the cell change the most (ties: lowest axis).
int choose_axis(const AdaptiveGrid& grid, int cell_id,
                const std::vector<ExtendedImpulse>& extended_impulses);

struct BuildOptions {
    double tol = 0.05;  // relative eta tolerance; 0 = refine until budget
    int q = 5;
    int max_points = 1 << 30;
    std::uint64_t seed = 0;
    double pou_tol = 1e-12;
    bool with_extension = true;
    /// Called after every estimator refresh (including the initial grid).
    std::function<void(const ProductConvolutionOperator&, const EstimatorState&, int iteration)>
        on_iteration;
};

struct BuildRow {
    int iteration = 0;
    int r = 0;
    double eta_abs = 0.0;
    double eta_rel = 0.0;
    std::int64_t n_apply_A = 0;
    std::int64_t n_apply_Astar = 0;
    double wall_ms = 0.0;
};

struct BuildReport {
    std::vector<BuildRow> rows;
    bool tolerance_reached = false;
    bool budget_exhausted = false;
    double final_eta_rel = 0.0;

    std::string to_csv() const;
};

struct BuildResult {
    ProductConvolutionOperator op;
    std::shared_ptr<AdaptiveGrid> grid;
    BuildReport report;
};

/// Adaptive construction loop: initialize the grid, then repeatedly refine
/// the leaf with the largest eta_C along the chosen axis, rebuilding only
/// the affected weights, extensions and adjoint samples.
BuildResult build_adaptive(const OperatorHandle& op, const IndexBox& domain,
                           const BuildOptions& options);

}  // namespace pcop

#endif
