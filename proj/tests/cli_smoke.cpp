#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(PCOP_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

// build_report.csv without the wall_ms column (timings differ run to run)
std::string report_without_timings(const fs::path& p) {
    std::istringstream in(slurp(p));
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line)) {
        const auto cut = line.rfind(',');
        out << line.substr(0, cut) << "\n";
    }
    return out.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("build command writes its artifacts and meets the tolerance") {
    TempDir dir("pcop_cli_build");
    const int code =
        run("build --op blur --n 25 --tol 0.05 --q 5 --seed 7 --out " + dir.path.string());
    CHECK(code == 0);
    CHECK(fs::exists(dir.path / "build_report.csv"));
    CHECK(fs::exists(dir.path / "grid.json"));
    CHECK(fs::exists(dir.path / "config.json"));
    const std::string summary = slurp(dir.path / "summary.json");
    CHECK(summary.find("\"tolerance_reached\": true") != std::string::npos);
    const std::string report = slurp(dir.path / "build_report.csv");
    CHECK(report.rfind("iteration,r,eta_abs,eta_rel,n_apply_A,n_apply_Astar,wall_ms\n", 0) == 0);
}

TEST_CASE("unreachable tolerance with a point budget sets the flag and exit code") {
    TempDir dir("pcop_cli_budget");
    const int code =
        run("build --op blur --n 16 --tol 0 --max-points 27 --q 2 --seed 1 --out " +
            dir.path.string());
    CHECK(code == 3);
    CHECK(slurp(dir.path / "summary.json").find("\"budget_exhausted\": true") !=
          std::string::npos);
}

TEST_CASE("repeat runs are identical apart from wall-clock timings") {
    TempDir a("pcop_cli_det_a"), b("pcop_cli_det_b");
    const std::string args = "build --op blur --n 16 --tol 0.1 --q 3 --seed 42 --out ";
    REQUIRE(run(args + a.path.string()) == 0);
    REQUIRE(run(args + b.path.string()) == 0);
    CHECK(report_without_timings(a.path / "build_report.csv") ==
          report_without_timings(b.path / "build_report.csv"));
    CHECK(slurp(a.path / "grid.json") == slurp(b.path / "grid.json"));
}

TEST_CASE("bad configs exit with code 2") {
    CHECK(run("build --op does-not-exist") == 2);
    CHECK(run("schur-study --n 9,10 --dim 3") == 2);  // odd n rejected
    CHECK(run("build --badflag 3") == 2);
}

TEST_CASE("convergence command writes both schemes") {
    TempDir dir("pcop_cli_conv");
    const int code = run("convergence --op blur --n 12 --q 3 --seed 5 --max-rank 16 --out " +
                         dir.path.string());
    CHECK(code == 0);
    const std::string csv = slurp(dir.path / "convergence.csv");
    CHECK(csv.find("adaptive,") != std::string::npos);
    CHECK(csv.find("regular-grid,") != std::string::npos);
}

TEST_CASE("verify-theory writes the audit report") {
    TempDir dir("pcop_cli_verify");
    const int code =
        run("verify-theory --op random --n 9 --seed 11 --refinements 5 --out " + dir.path.string());
    CHECK(code == 0);
    const std::string audit = slurp(dir.path / "audit.json");
    CHECK(audit.find("\"holds\": true") != std::string::npos);
    CHECK(audit.find("err_fro") != std::string::npos);
}

TEST_CASE("hmatrix-export writes a loadable container") {
    TempDir dir("pcop_cli_hmat");
    const int code = run(
        "hmatrix-export --op blur --n 12 --tol 0.2 --q 2 --seed 3 --leaf-cap 16 --hmat-tol 1e-6 "
        "--method cur --out " +
        dir.path.string());
    CHECK(code == 0);
    CHECK(fs::exists(dir.path / "approximation.pchm"));
    std::ifstream f(dir.path / "approximation.pchm", std::ios::binary);
    char magic[4];
    f.read(magic, 4);
    CHECK(std::string(magic, 4) == "PCHM");
}
