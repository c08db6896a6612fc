#include "pcop/adaptivity.hpp"

#include <algorithm>
#include <chrono>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "pcop/fft.hpp"

namespace pcop {

ProbeSet make_probes(const OperatorHandle& op, int q, std::uint64_t seed) {
    if (q < 1) throw std::invalid_argument("make_probes: q >= 1 required");
    ProbeSet p;
    p.seed = seed;
    p.q = q;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < q; ++i) {
        GridFunction z(op.domain());
        for (auto& v : z.values()) v = gauss(rng);
        p.y.push_back(to_grid_function(op.domain(), op.apply_adjoint(to_vector(z))));
        p.zeta.push_back(std::move(z));
    }
    return p;
}

EstimatorState make_estimator_state(const ProbeSet& probes) {
    EstimatorState st;
    st.q = probes.q;
    double y2 = 0.0;
    for (const auto& y : probes.y) y2 += y.squared_norm();
    st.y_norm = std::sqrt(y2);
    return st;
}

namespace {

// Theta_{k,.} = flip(phi_k^E) * zeta_i restricted to the weight footprint,
// with the probe spectra cached per padded shape.
std::vector<GridFunction> compute_theta(EstimatorState& state, const GridFunction& phi,
                                        const IndexBox& footprint, const IndexBox& omega,
                                        const ProbeSet& probes) {
    GridFunction kernel = flip(phi);
    const auto shape = conv_padded_shape(kernel.box(), omega);
    auto& spectra = state.zeta_hat[shape];
    if (spectra.empty()) {
        for (const auto& z : probes.zeta) {
            auto hat = embed_padded(z, shape);
            FftEngine::instance().forward(hat, shape);
            spectra.push_back(std::move(hat));
        }
    }
    std::vector<const std::vector<std::complex<double>>*> hats;
    for (const auto& s : spectra) hats.push_back(&s);
    auto convs = fft_convolve_batch(kernel, omega, hats, shape);
    std::vector<GridFunction> out;
    out.reserve(convs.size());
    for (auto& c : convs) out.push_back(restrict_to(c, footprint));
    return out;
}

void accumulate_product(GridFunction& dst, const GridFunction& a, const GridFunction& b) {
    IndexBox ov;
    if (!intersect(a.box(), b.box(), ov)) return;
    IndexBox ov2;
    if (!intersect(ov, dst.box(), ov2)) return;
    for_each_point(ov2, [&](const Point& p) { dst.at(p) += a.at(p) * b.at(p); });
}

}  // namespace

void update_samples(EstimatorState& state, const ProductConvolutionOperator& pcop,
                    const std::vector<int>& changed_ks, const ProbeSet& probes) {
    const IndexBox& omega = pcop.domain();
    const int r = pcop.rank();

    std::set<int> changed(changed_ks.begin(), changed_ks.end());
    for (int k : changed)
        if (k < 0 || k >= r) throw std::invalid_argument("update_samples: bad changed id");
    if (static_cast<int>(state.theta.size()) > r)
        throw std::logic_error("update_samples: stale cache (rank shrank)");
    for (int k = static_cast<int>(state.theta.size()); k < r; ++k)
        if (!changed.count(k))
            throw std::logic_error("update_samples: uncached sample point not marked changed");
    state.theta.resize(static_cast<std::size_t>(r));

    for (int k : changed)
        state.theta[static_cast<std::size_t>(k)] =
            compute_theta(state, pcop.extended_impulse(k).values, pcop.weight(k).footprint(),
                          omega, probes);

    // Ytilde_i = sum_k w_k . Theta_{k,i}  (convolution-product adjoint form)
    state.ytilde.assign(static_cast<std::size_t>(state.q), GridFunction(omega));
    for (int k = 0; k < r; ++k)
        for (int i = 0; i < state.q; ++i)
            accumulate_product(state.ytilde[static_cast<std::size_t>(i)], pcop.weight(k).values,
                               state.theta[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]);

    state.diff.clear();
    double d2 = 0.0;
    for (int i = 0; i < state.q; ++i) {
        GridFunction d = state.ytilde[static_cast<std::size_t>(i)];
        accumulate(d, probes.y[static_cast<std::size_t>(i)], -1.0);
        d2 += d.squared_norm();
        state.diff.push_back(std::move(d));
    }
    state.eta_abs = std::sqrt(d2 / state.q);
    state.eta_rel = state.y_norm > 0.0 ? std::sqrt(d2) / state.y_norm : 0.0;
}

void eta_for_cells(EstimatorState& state, const AdaptiveGrid& grid) {
    state.cell_errors.clear();
    for (int leaf : grid.leaf_ids()) {
        double s = 0.0;
        for (const auto& d : state.diff) s += squared_norm_on_box(d, grid.cell(leaf).box);
        state.cell_errors[leaf] = std::sqrt(s / state.q);
    }
}

int choose_axis(const AdaptiveGrid& grid, int cell_id,
                const std::vector<ExtendedImpulse>& extended_impulses) {
    const IndexBox& box = grid.cell(cell_id).box;
    const int d = grid.dim();
    std::vector<int> axes;
    for (int a = 0; a < d; ++a)
        if (grid.axis_refinable(cell_id, a)) axes.push_back(a);
    if (axes.empty()) throw std::invalid_argument("choose_axis: no refinable axis");

    const IndexBox score_box = shift_neg(grid.domain(), box.midpoint());
    const double group = static_cast<double>(std::int64_t(1) << (d - 1));

    std::vector<double> scores(axes.size(), 0.0);
    double scale = 0.0;
    for (std::size_t i = 0; i < axes.size(); ++i) {
        const int a = axes[i];
        GridFunction diff(score_box);
        GridFunction avg(score_box);
        for (const auto& c : corners(box)) {
            auto id = grid.find_point(c);
            if (!id) throw std::logic_error("choose_axis: cell corner is not a sample point");
            const double sign = (c[static_cast<std::size_t>(a)] == box.hi[a]) ? 1.0 : -1.0;
            accumulate(diff, extended_impulses[static_cast<std::size_t>(*id)].values, sign / group);
            accumulate(avg, extended_impulses[static_cast<std::size_t>(*id)].values,
                       0.5 / group);
        }
        scores[i] = diff.norm();
        scale = std::max(scale, avg.norm());
    }
    // scores at rounding-noise level count as exact ties
    int best = axes.front();
    double best_score = -1.0;
    for (std::size_t i = 0; i < axes.size(); ++i) {
        const double score = scores[i] <= 1e-12 * scale ? 0.0 : scores[i];
        if (score > best_score) {  // strict improvement keeps the lowest axis on ties
            best_score = score;
            best = axes[i];
        }
    }
    return best;
}

std::string BuildReport::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "iteration,r,eta_abs,eta_rel,n_apply_A,n_apply_Astar,wall_ms\n";
    for (const auto& row : rows)
        os << row.iteration << ',' << row.r << ',' << row.eta_abs << ',' << row.eta_rel << ','
           << row.n_apply_A << ',' << row.n_apply_Astar << ',' << row.wall_ms << "\n";
    return os.str();
}

BuildResult build_adaptive(const OperatorHandle& op, const IndexBox& domain,
                           const BuildOptions& options) {
    if (!(options.tol > 0.0) && options.max_points >= (1 << 30))
        throw std::invalid_argument("build_adaptive: need tol > 0 or a finite point budget");
    const auto t0 = std::chrono::steady_clock::now();
    auto wall_ms = [&t0] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
            .count();
    };
    const std::int64_t base_apply = op.apply_count();
    const std::int64_t base_adjoint = op.adjoint_count();

    auto grid = std::make_shared<AdaptiveGrid>(AdaptiveGrid::make_root(domain));
    WeightBuilder weight_builder(*grid, options.pou_tol);

    std::vector<ImpulseResponse> raw;
    std::vector<WeightFunction> weights0;
    std::vector<ExtendedImpulse> ext0;
    for (int k = 0; k < grid->num_points(); ++k) {
        raw.push_back(compute_impulse(op, *grid, k));
        weights0.push_back(weight_builder.build(k));
        ext0.push_back(zero_extend_impulse(raw.back()));
    }
    ProductConvolutionOperator pcop(domain, grid, std::move(weights0), std::move(ext0));

    auto rebuild_extension = [&](int k) {
        if (!options.with_extension) {
            pcop.set_impulse(k, zero_extend_impulse(raw[static_cast<std::size_t>(k)]));
            return;
        }
        ExtensionWeights ew = build_extension_weights(*grid, k);
        std::vector<const GridFunction*> nbr_phi;
        for (int j : ew.nbrs) nbr_phi.push_back(&raw[static_cast<std::size_t>(j)].values);
        pcop.set_impulse(k, extend_impulse(ew, nbr_phi));
    };
    if (options.with_extension)
        for (int k = 0; k < grid->num_points(); ++k) rebuild_extension(k);

    ProbeSet probes = make_probes(op, options.q, options.seed);
    EstimatorState state = make_estimator_state(probes);
    std::vector<int> all_ks(static_cast<std::size_t>(grid->num_points()));
    for (int k = 0; k < grid->num_points(); ++k) all_ks[static_cast<std::size_t>(k)] = k;
    update_samples(state, pcop, all_ks, probes);
    eta_for_cells(state, *grid);

    BuildReport report;
    auto record = [&](int iteration) {
        report.rows.push_back(BuildRow{iteration, grid->num_points(), state.eta_abs,
                                       state.eta_rel, op.apply_count() - base_apply,
                                       op.adjoint_count() - base_adjoint, wall_ms()});
        if (options.on_iteration) options.on_iteration(pcop, state, iteration);
    };
    record(0);

    int iteration = 0;
    while (state.eta_rel > options.tol && grid->num_points() < options.max_points) {
        // largest eta_C among refinable leaves; ties by lowest cell id
        int target = -1;
        double best = -1.0;
        for (const auto& [leaf, eta] : state.cell_errors) {
            if (!grid->cell_refinable(leaf)) continue;
            if (eta > best) {
                best = eta;
                target = leaf;
            }
        }
        if (target < 0) break;  // nothing left to refine

        const int axis = choose_axis(*grid, target, pcop.impulse_family());
        const std::vector<int> new_pts = grid->subdivide(target, axis);
        const std::vector<int> changed = grid->last_changed_neighbors();

        // cells whose skeleton changed: the two children plus any leaf that
        // gained a hanging point
        std::set<int> affected_cells{grid->cell(target).child_lo, grid->cell(target).child_hi};
        for (int id : new_pts)
            for (int c : grid->cells_of_point(id)) affected_cells.insert(c);
        weight_builder.invalidate_cell(target);
        for (int c : affected_cells) weight_builder.invalidate_cell(c);

        std::set<int> weight_ks;
        for (int c : affected_cells)
            for (int j : grid->points_in_leaf(c)) weight_ks.insert(j);

        for (int id : new_pts) {
            raw.push_back(compute_impulse(op, *grid, id));
            pcop.append_pair(WeightFunction{}, zero_extend_impulse(raw.back()));
        }
        for (int k : weight_ks) pcop.set_weight(k, weight_builder.build(k));
        for (int k : changed) rebuild_extension(k);

        update_samples(state, pcop, changed, probes);
        eta_for_cells(state, *grid);
        record(++iteration);
    }

    report.tolerance_reached = state.eta_rel <= options.tol;
    report.budget_exhausted = !report.tolerance_reached;
    report.final_eta_rel = state.eta_rel;

    BuildResult result;
    result.op = std::move(pcop);
    result.grid = grid;
    result.report = std::move(report);
    return result;
}

}  // namespace pcop
