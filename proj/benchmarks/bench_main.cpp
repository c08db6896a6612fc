#include <benchmark/benchmark.h>

#include <random>

#include "pcop/adaptivity.hpp"
#include "pcop/fft.hpp"
#include "pcop/hmatrix.hpp"

using namespace pcop;

namespace {

GridFunction random_field(const IndexBox& box, std::mt19937_64& rng) {
    GridFunction f(box);
    std::normal_distribution<double> gauss;
    for (auto& v : f.values()) v = gauss(rng);
    return f;
}

BuildResult blur_build(int n, double tol) {
    auto op = blur_operator(n);
    BuildOptions bo;
    bo.tol = tol;
    bo.q = 5;
    bo.seed = 1;
    return build_adaptive(op, op.domain(), bo);
}

}  // namespace

static void BM_FftConvolve2d(benchmark::State& state) {
    const Coord ext = state.range(0);
    std::mt19937_64 rng(1);
    GridFunction psi = random_field(IndexBox({0, 0}, {ext, ext}), rng);
    GridFunction f = random_field(IndexBox({0, 0}, {ext, ext}), rng);
    for (auto _ : state) benchmark::DoNotOptimize(fft_convolve(psi, f));
}
BENCHMARK(BM_FftConvolve2d)->Arg(15)->Arg(31)->Arg(63)->Arg(127);

static void BM_PcopApply(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    BuildResult res = blur_build(n, 0.1);
    std::mt19937_64 rng(2);
    Eigen::VectorXd f = to_vector(random_field(res.op.domain(), rng));
    for (auto _ : state) benchmark::DoNotOptimize(res.op.apply(f));
    state.counters["r"] = res.op.rank();
}
BENCHMARK(BM_PcopApply)->Arg(16)->Arg(25)->Arg(40)->Unit(benchmark::kMillisecond);

static void BM_PcopEntry(benchmark::State& state) {
    BuildResult res = blur_build(25, 0.1);
    const IndexBox& omega = res.op.domain();
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<Coord> c(0, omega.hi[0]);
    for (auto _ : state) {
        Point y{c(rng), c(rng)}, x{c(rng), c(rng)};
        benchmark::DoNotOptimize(res.op.entry(y, x));
    }
}
BENCHMARK(BM_PcopEntry);

static void BM_AdaptiveBuild(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(blur_build(n, 0.1));
}
BENCHMARK(BM_AdaptiveBuild)->Arg(16)->Arg(25)->Unit(benchmark::kMillisecond);

static void BM_HmatMatvec(benchmark::State& state) {
    BuildResult res = blur_build(25, 0.1);
    HMatrix h = assemble_hmatrix(res.op, 1e-8, 32, CompressionMethod::Randomized);
    std::mt19937_64 rng(4);
    Eigen::VectorXd f = to_vector(random_field(res.op.domain(), rng));
    for (auto _ : state) benchmark::DoNotOptimize(h.matvec(f));
}
BENCHMARK(BM_HmatMatvec);

BENCHMARK_MAIN();
