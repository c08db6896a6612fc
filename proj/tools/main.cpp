// pcop: experiment runner for the adaptive product-convolution toolkit.
// Subcommands: build, convergence, schur-study, hmatrix-export, verify-theory.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <random>
#include <fstream>
#include <iostream>

#include "pcop/adaptivity.hpp"
#include "pcop/grid_io.hpp"
#include "pcop/hmatrix.hpp"
#include "pcop/schur_study.hpp"
#include "pcop/verification.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitBadConfig = 2;
constexpr int kExitBudgetExhausted = 3;

struct CommonOpts {
    std::string op_name = "blur";
    int n = 25;
    double tol = 0.05;
    int q = 5;
    int max_points = 1 << 30;
    std::uint64_t seed = 0;
    std::string out = "out";
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--op", o.op_name, "operator: blur, blur-single, poisson-schur-2d, poisson-schur-3d");
    cmd->add_option("--n", o.n, "grid size per axis");
    cmd->add_option("--tol", o.tol, "relative error tolerance");
    cmd->add_option("--q", o.q, "number of random adjoint samples");
    cmd->add_option("--max-points", o.max_points, "sample point budget");
    cmd->add_option("--seed", o.seed, "random seed");
    cmd->add_option("--out", o.out, "output directory");
}

json config_json(const CommonOpts& o) {
    return json{{"op", o.op_name},   {"n", o.n},       {"tol", o.tol},          {"q", o.q},
                {"max_points", o.max_points}, {"seed", o.seed}, {"out", o.out}};
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    f << text;
}

fs::path prepare_out(const CommonOpts& o, const json& config) {
    fs::path dir(o.out);
    fs::create_directories(dir);
    write_text(dir / "config.json", config.dump(2) + "\n");
    return dir;
}

pcop::OperatorHandle make_op(const CommonOpts& o) {
    return pcop::make_operator_by_name(o.op_name, o.n);
}

double exact_relative_error(const pcop::OperatorHandle& op,
                            const pcop::ProductConvolutionOperator& pcop_, std::int64_t cap) {
    const Eigen::MatrixXd A = pcop::materialize_dense(op, cap);
    const Eigen::MatrixXd At = pcop::materialize_dense(pcop_, cap);
    return (A - At).norm() / A.norm();
}

void dump_weight_csv(const pcop::ProductConvolutionOperator& approx, int k, const fs::path& path) {
    if (k < 0 || k >= approx.rank()) throw std::invalid_argument("weight id out of range");
    std::ostringstream csv;
    csv.precision(17);
    const auto& w = approx.weight(k).values;
    const int d = w.box().dim();
    for (int a = 0; a < d; ++a) csv << 'x' << a << ',';
    csv << "value\n";
    pcop::for_each_point(w.box(), [&](const pcop::Point& p) {
        for (pcop::Coord c : p) csv << c << ',';
        csv << w.at(p) << "\n";
    });
    write_text(path, csv.str());
}

int cmd_build(const CommonOpts& o, int dump_weight, bool dump_dense) {
    auto op = make_op(o);
    json config = config_json(o);
    if (dump_weight >= 0) config["dump_weight"] = dump_weight;
    const fs::path dir = prepare_out(o, config);

    pcop::BuildOptions bo;
    bo.tol = o.tol;
    bo.q = o.q;
    bo.max_points = o.max_points;
    bo.seed = o.seed;
    pcop::BuildResult res = pcop::build_adaptive(op, op.domain(), bo);

    write_text(dir / "build_report.csv", res.report.to_csv());
    pcop::write_grid_json(*res.grid, (dir / "grid.json").string());
    if (dump_weight >= 0)
        dump_weight_csv(res.op, dump_weight,
                        dir / ("weight_" + std::to_string(dump_weight) + ".csv"));
    if (dump_dense) {
        const Eigen::MatrixXd At = pcop::materialize_dense(res.op, 1 << 22);
        std::ostringstream csv;
        csv.precision(17);
        for (Eigen::Index i = 0; i < At.rows(); ++i) {
            for (Eigen::Index j = 0; j < At.cols(); ++j) csv << At(i, j) << (j + 1 < At.cols() ? "," : "");
            csv << "\n";
        }
        write_text(dir / "dense.csv", csv.str());
    }

    json summary{{"r", res.op.rank()},
                 {"eta_rel", res.report.final_eta_rel},
                 {"tolerance_reached", res.report.tolerance_reached},
                 {"budget_exhausted", res.report.budget_exhausted},
                 {"n_apply_A", op.apply_count()},
                 {"n_apply_Astar", op.adjoint_count()}};
    if (op.n() <= 4096) {
        summary["rel_error_exact"] = exact_relative_error(op, res.op, 4096);
    }
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    std::cout << "r=" << res.op.rank() << " eta_rel=" << res.report.final_eta_rel << "\n";
    return res.report.budget_exhausted ? kExitBudgetExhausted : 0;
}

int cmd_convergence(const CommonOpts& o, int max_rank) {
    auto op = make_op(o);
    const std::int64_t cap = 1 << 22;
    if (op.n() * op.n() > cap * 16) throw CLI::ValidationError("--n", "domain above the oracle cap");
    json config = config_json(o);
    config["max_rank"] = max_rank;
    const fs::path dir = prepare_out(o, config);

    const Eigen::MatrixXd A = pcop::materialize_dense(op, cap);
    const double a_norm = A.norm();
    const int d = op.domain().dim();

    // matched rank targets: the regular-grid scheme realizes (m+1)^d
    std::vector<int> targets;
    for (int m = 1;; ++m) {
        int r = 1;
        for (int i = 0; i < d; ++i) r *= m + 1;
        if (r > max_rank) break;
        targets.push_back(r);
    }

    std::ostringstream csv;
    csv.precision(17);
    csv << "scheme,r,rel_error_exact,eta_rel\n";

    // adaptive run with snapshots at the first iteration reaching each target
    std::size_t next = 0;
    pcop::BuildOptions bo;
    bo.tol = 0.0;
    bo.q = o.q;
    bo.max_points = max_rank;
    bo.seed = o.seed;
    bo.on_iteration = [&](const pcop::ProductConvolutionOperator& approx,
                          const pcop::EstimatorState& state, int) {
        if (next >= targets.size() || approx.rank() < targets[next]) return;
        ++next;
        const double err = (pcop::materialize_dense(approx, cap) - A).norm() / a_norm;
        csv << "adaptive," << approx.rank() << ',' << err << ',' << state.eta_rel << "\n";
    };
    pcop::BuildResult res = pcop::build_adaptive(op, op.domain(), bo);
    {
        const double err = (pcop::materialize_dense(res.op, cap) - A).norm() / a_norm;
        csv << "adaptive," << res.op.rank() << ',' << err << ',' << res.report.final_eta_rel
            << "\n";
    }

    for (int m = 1;; ++m) {
        int r = 1;
        for (int i = 0; i < d; ++i) r *= m + 1;
        if (r > max_rank) break;
        auto base = pcop::regular_grid_approximation(op, m);
        const double err = (pcop::materialize_dense(base, cap) - A).norm() / a_norm;
        csv << "regular-grid," << base.rank() << ',' << err << ",\n";
    }

    write_text(dir / "convergence.csv", csv.str());
    std::cout << "wrote " << (dir / "convergence.csv").string() << "\n";
    return 0;
}

int cmd_schur_study(const CommonOpts& o, std::vector<int> n_list, int dim) {
    if (n_list.empty()) n_list = {10, 20, 30, 40};
    for (int n : n_list)
        if (n % 2 != 0 || n < 6)
            throw CLI::ValidationError("--n", "interface centering requires even n >= 6");
    json config = config_json(o);
    config["n_list"] = n_list;
    config["dim"] = dim;
    const fs::path dir = prepare_out(o, config);

    std::ostringstream csv;
    csv.precision(17);
    csv << "n,cond_S,cond_precond,r,eta_rel,stilde_spd\n";
    for (int n : n_list) {
        pcop::SchurStudyRow row = pcop::schur_preconditioner_study(dim, n, o.tol, o.q, o.seed);
        csv << row.n << ',' << row.cond_S << ',' << row.cond_precond << ',' << row.r << ','
            << row.eta_rel << ',' << (row.stilde_spd ? 1 : 0) << "\n";
        std::cout << "n=" << row.n << " cond(S)=" << row.cond_S
                  << " cond(precond)=" << row.cond_precond << " r=" << row.r << "\n";
    }
    write_text(dir / "table.csv", csv.str());
    return 0;
}

int cmd_hmatrix_export(const CommonOpts& o, const std::string& method_name, int rank,
                       int leaf_cap, double hmat_tol) {
    auto op = make_op(o);
    json config = config_json(o);
    config["method"] = method_name;
    config["rank"] = rank;
    config["leaf_cap"] = leaf_cap;
    config["hmat_tol"] = hmat_tol;
    const fs::path dir = prepare_out(o, config);

    pcop::BuildOptions bo;
    bo.tol = o.tol;
    bo.q = o.q;
    bo.max_points = o.max_points;
    bo.seed = o.seed;
    pcop::BuildResult res = pcop::build_adaptive(op, op.domain(), bo);

    const auto method = method_name == "cur" ? pcop::CompressionMethod::Cur
                                             : pcop::CompressionMethod::Randomized;
    pcop::HMatrix h = pcop::assemble_hmatrix(res.op, hmat_tol, leaf_cap, method, rank);
    pcop::save_hmatrix(h, (dir / "approximation.pchm").string());

    std::int64_t low_rank_blocks = 0, dense_blocks = 0, max_rank = 0;
    for (const auto& blk : h.blocks) {
        if (blk.low_rank) {
            ++low_rank_blocks;
            max_rank = std::max(max_rank, blk.factors.rank());
        } else {
            ++dense_blocks;
        }
    }
    json summary{{"r", res.op.rank()},
                 {"low_rank_blocks", low_rank_blocks},
                 {"dense_blocks", dense_blocks},
                 {"max_block_rank", max_rank},
                 {"any_rank_capped", h.any_rank_capped},
                 {"n_apply_A_during_conversion", 0}};
    write_text(dir / "summary.json", summary.dump(2) + "\n");
    std::cout << "wrote " << (dir / "approximation.pchm").string() << "\n";
    return res.report.budget_exhausted ? kExitBudgetExhausted : 0;
}

int cmd_verify_theory(const CommonOpts& o, int refinements) {
    json config = config_json(o);
    config["refinements"] = refinements;
    const fs::path dir = prepare_out(o, config);

    pcop::OperatorHandle op;
    pcop::IndexBox domain;
    if (o.op_name == "random") {
        domain = o.n > 0 ? pcop::IndexBox({0, 0}, {o.n - 1, o.n - 1}) : pcop::IndexBox({0}, {31});
        op = pcop::varying_kernel_operator(domain, o.seed);
    } else {
        op = make_op(o);
        domain = op.domain();
    }
    if (op.n() > 1024) throw CLI::ValidationError("--n", "verify-theory is dense-oracle sized (N <= 1024)");

    auto grid = std::make_shared<pcop::AdaptiveGrid>(pcop::AdaptiveGrid::make_root(domain));
    std::mt19937_64 rng(o.seed);
    for (int s = 0; s < refinements; ++s) {
        std::vector<std::pair<int, int>> options;
        for (int leaf : grid->leaf_ids())
            for (int a = 0; a < grid->dim(); ++a)
                if (grid->axis_refinable(leaf, a)) options.emplace_back(leaf, a);
        if (options.empty()) break;
        const auto& [leaf, axis] =
            options[std::uniform_int_distribution<std::size_t>(0, options.size() - 1)(rng)];
        grid->subdivide(leaf, axis);
    }
    auto pc = pcop::assemble_on_grid(op, grid);
    const Eigen::MatrixXd A = pcop::materialize_dense(op);
    pcop::TheoryAudit audit = pcop::check_theorem(A, pc, *grid);
    write_text(dir / "audit.json", audit.to_json() + "\n");
    std::cout << audit.to_json() << "\n";
    return audit.holds ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive product-convolution operator toolkit"};
    app.require_subcommand(1);

    CommonOpts o;
    int max_rank = 256;
    std::vector<int> n_list;
    int dim = 3;
    std::string method = "randomized";
    int rank = 0;
    int leaf_cap = 32;
    double hmat_tol = 1e-8;
    int refinements = 12;

    int dump_weight = -1;
    bool dump_dense = false;
    auto* build = app.add_subcommand("build", "adaptive construction; writes build_report.csv and grid.json");
    add_common(build, o);
    build->add_option("--dump-weight", dump_weight, "also write weight_<k>.csv for this sample id");
    build->add_flag("--dump-dense", dump_dense, "also write the dense approximation as dense.csv (desk scale)");

    auto* conv = app.add_subcommand("convergence", "adaptive vs regular-grid error curves");
    add_common(conv, o);
    conv->add_option("--max-rank", max_rank, "largest rank to test");

    auto* schur = app.add_subcommand("schur-study", "condition-number table for the interface Schur complement");
    schur->add_option("--n", n_list, "mesh sizes, comma separated")->delimiter(',');
    schur->add_option("--tol", o.tol, "relative error tolerance");
    schur->add_option("--q", o.q, "number of random adjoint samples");
    schur->add_option("--seed", o.seed, "random seed");
    schur->add_option("--out", o.out, "output directory");
    schur->add_option("--dim", dim, "2 or 3");

    auto* hexp = app.add_subcommand("hmatrix-export", "convert the approximation to the PCHM block format");
    add_common(hexp, o);
    hexp->add_option("--method", method, "randomized or cur")
        ->check(CLI::IsMember({"randomized", "cur"}));
    hexp->add_option("--rank", rank, "fixed block rank (0 = tolerance mode)");
    hexp->add_option("--leaf-cap", leaf_cap, "cluster leaf size cap");
    hexp->add_option("--hmat-tol", hmat_tol, "block compression tolerance");

    auto* verify = app.add_subcommand("verify-theory", "dense audit of the error theory");
    add_common(verify, o);
    verify->add_option("--refinements", refinements, "random refinement steps");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitBadConfig;
    }

    try {
        if (build->parsed()) return cmd_build(o, dump_weight, dump_dense);
        if (conv->parsed()) return cmd_convergence(o, max_rank);
        if (schur->parsed()) return cmd_schur_study(o, n_list, dim);
        if (hexp->parsed()) return cmd_hmatrix_export(o, method, rank, leaf_cap, hmat_tol);
        if (verify->parsed()) return cmd_verify_theory(o, refinements);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBadConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitBadConfig;
}
