#include <doctest.h>

#include <cstdio>
#include <random>

#include "pcop/hmatrix.hpp"
#include "pcop/verification.hpp"
#include "test_helpers.hpp"

using namespace pcop;

namespace {

ProductConvolutionOperator blur_pcop(int n, double s_in = 0.15, double s_out = 0.15) {
    auto op = blur_operator(n, s_in, s_out);
    auto grid = std::make_shared<AdaptiveGrid>(AdaptiveGrid::make_root(op.domain()));
    return assemble_on_grid(op, grid);
}

}  // namespace

TEST_CASE("1d cluster tree with cap 2 is the balanced depth-2 tree") {
    ClusterTree t = ClusterTree::build(IndexBox({0}, {7}), 2);
    // 8 points, leaves of size 2: 1 + 2 + 4 nodes
    CHECK(t.nodes().size() == 7);
    for (const auto& n : t.nodes())
        if (n.is_leaf()) CHECK(n.size() == 2);
}

TEST_CASE("8x8 grid with cap 32 splits once into 8x4 halves") {
    ClusterTree t = ClusterTree::build(IndexBox({0, 0}, {7, 7}), 32);
    REQUIRE(t.nodes().size() == 3);
    CHECK(t.node(0).size() == 64);
    CHECK(t.node(1).size() == 32);
    CHECK(t.node(2).size() == 32);
    CHECK(t.node(1).is_leaf());
    // split normal to the widest direction; equal box -> axis 0
    CHECK(t.node(0).split_axis == 0);
    CHECK(t.node(1).bbox == IndexBox({0, 0}, {3, 7}));
    CHECK(t.node(2).bbox == IndexBox({4, 0}, {7, 7}));
}

TEST_CASE("tiny point set is a single leaf") {
    ClusterTree t = ClusterTree::build(IndexBox({0, 0}, {2, 2}), 32);
    CHECK(t.nodes().size() == 1);
    CHECK(t.node(0).is_leaf());
}

TEST_CASE("odd split gives the lower half the extra point") {
    ClusterTree t = ClusterTree::build(IndexBox({0}, {6}), 3);  // 7 points
    CHECK(t.node(0).child_lo >= 0);
    CHECK(t.node(t.node(0).child_lo).size() == 4);
    CHECK(t.node(t.node(0).child_hi).size() == 3);
}

TEST_CASE("admissibility matches a brute-force bounding-box computation") {
    ClusterTree t = ClusterTree::build(IndexBox({0, 0}, {10, 10}), 8);
    // metric is Euclidean on the cluster bounding boxes; recompute the boxes
    // independently from the permuted points
    auto brute_bbox = [&](int id) {
        const ClusterNode& n = t.node(id);
        Point lo = t.point_at(n.begin), hi = lo;
        for (std::int64_t i = n.begin; i < n.end; ++i) {
            const Point p = t.point_at(i);
            for (std::size_t q = 0; q < p.size(); ++q) {
                lo[q] = std::min(lo[q], p[q]);
                hi[q] = std::max(hi[q], p[q]);
            }
        }
        return IndexBox(lo, hi);
    };
    auto brute_diam = [&](const IndexBox& b) {
        double s = 0;
        for (int q = 0; q < b.dim(); ++q) s += static_cast<double>(b.extent(q) * b.extent(q));
        return std::sqrt(s);
    };
    auto brute_dist = [&](const IndexBox& a, const IndexBox& b) {
        double s = 0;
        for (int q = 0; q < a.dim(); ++q) {
            const Coord gap = std::max<Coord>(0, std::max(a.lo[q] - b.hi[q], b.lo[q] - a.hi[q]));
            s += static_cast<double>(gap * gap);
        }
        return std::sqrt(s);
    };
    std::mt19937_64 rng(2);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(t.nodes().size()) - 1);
    for (int trial = 0; trial < 40; ++trial) {
        const int a = pick(rng), b = pick(rng);
        const IndexBox ba = brute_bbox(a), bb = brute_bbox(b);
        CHECK(t.node(a).bbox == ba);
        CHECK(t.diameter(a) == doctest::Approx(brute_diam(ba)).epsilon(1e-12));
        CHECK(ClusterTree::distance(t.node(a).bbox, t.node(b).bbox) ==
              doctest::Approx(brute_dist(ba, bb)).epsilon(1e-12));
        const bool adm_brute = brute_dist(ba, bb) >= std::min(brute_diam(ba), brute_diam(bb));
        CHECK(admissible(t, a, b) == adm_brute);
        CHECK(admissible(t, a, b) == admissible(t, b, a));
    }
}

TEST_CASE("block partition covers the product space exactly once") {
    auto pcop = blur_pcop(9);
    HMatrix h = assemble_hmatrix(pcop, 1e-8, 8, CompressionMethod::Randomized);
    const std::int64_t N = pcop.domain().num_points();
    Eigen::MatrixXi cover = Eigen::MatrixXi::Zero(N, N);
    const auto& perm = h.tree.perm();
    for (const auto& blk : h.blocks) {
        const ClusterNode& tn = h.tree.node(blk.t_node);
        const ClusterNode& sn = h.tree.node(blk.s_node);
        for (std::int64_t i = tn.begin; i < tn.end; ++i)
            for (std::int64_t j = sn.begin; j < sn.end; ++j)
                cover(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(i)]),
                      static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)])) += 1;
    }
    CHECK((cover.array() == 1).all());
}

TEST_CASE("compressed blocks match the dense oracle") {
    auto pcop = blur_pcop(16);
    const double tol = 1e-8;
    ClusterTree tree = ClusterTree::build(pcop.domain(), 24);

    // find a few admissible pairs
    int tested = 0;
    for (int a = 0; a < static_cast<int>(tree.nodes().size()) && tested < 4; ++a) {
        for (int b = a + 1; b < static_cast<int>(tree.nodes().size()) && tested < 4; ++b) {
            if (!admissible(tree, a, b)) continue;
            ++tested;
            // dense oracle
            const ClusterNode& tn = tree.node(a);
            const ClusterNode& sn = tree.node(b);
            Eigen::MatrixXd dense(tn.size(), sn.size());
            for (std::int64_t j = 0; j < sn.size(); ++j)
                for (std::int64_t i = 0; i < tn.size(); ++i)
                    dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                        pcop.entry(tree.point_at(tn.begin + i), tree.point_at(sn.begin + j));

            for (auto method : {CompressionMethod::Randomized, CompressionMethod::Cur}) {
                BlockFactors f = compress_block(pcop, tree, a, b, method, tol);
                const double err = (dense - f.B * f.C).norm();
                CHECK(err <= tol * std::max(dense.norm(), 1e-14));
                // smooth kernels stay low rank
                CHECK(f.rank() <= 14);
            }
        }
    }
    CHECK(tested > 0);
}

TEST_CASE("zero blocks compress to rank zero") {
    // two separated supports: identity has zero off-diagonal blocks
    auto grid = std::make_shared<AdaptiveGrid>(AdaptiveGrid::make_root(IndexBox({0}, {31})));
    auto op = identity_operator(grid->domain());
    auto pcop = assemble_on_grid(op, grid);
    ClusterTree tree = ClusterTree::build(pcop.domain(), 8);
    int t_leaf = -1, s_leaf = -1;
    for (int i = 0; i < static_cast<int>(tree.nodes().size()); ++i) {
        if (!tree.node(i).is_leaf()) continue;
        if (t_leaf < 0) {
            t_leaf = i;
        } else if (ClusterTree::distance(tree.node(t_leaf).bbox, tree.node(i).bbox) > 10) {
            s_leaf = i;
            break;
        }
    }
    REQUIRE(t_leaf >= 0);
    REQUIRE(s_leaf >= 0);
    BlockFactors f =
        compress_block(pcop, tree, t_leaf, s_leaf, CompressionMethod::Randomized, 1e-10);
    CHECK(f.rank() == 0);
}

TEST_CASE("hmatrix matvec matches the pcop apply") {
    std::mt19937_64 rng(5);
    auto pcop = blur_pcop(16);
    for (auto method : {CompressionMethod::Randomized, CompressionMethod::Cur}) {
        HMatrix h = assemble_hmatrix(pcop, 1e-10, 32, method);
        for (int t = 0; t < 3; ++t) {
            Eigen::VectorXd f(pcop.domain().num_points());
            std::normal_distribution<double> gauss;
            for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = gauss(rng);
            Eigen::VectorXd a = pcop.apply(f);
            Eigen::VectorXd b = h.matvec(f);
            CHECK((a - b).norm() <= 1e-8 * a.norm());
        }
    }
}

TEST_CASE("identity pcop: admissible blocks vanish, dense leaves are identity") {
    auto grid = std::make_shared<AdaptiveGrid>(AdaptiveGrid::make_root(IndexBox({0}, {24})));
    auto op = identity_operator(grid->domain());
    auto pcop = assemble_on_grid(op, grid);
    HMatrix h = assemble_hmatrix(pcop, 1e-10, 4, CompressionMethod::Randomized);
    for (const auto& blk : h.blocks) {
        if (blk.low_rank) {
            CHECK(blk.factors.rank() == 0);
        } else if (blk.t_node == blk.s_node) {
            CHECK((blk.dense - Eigen::MatrixXd::Identity(blk.dense.rows(), blk.dense.cols()))
                      .norm() <= 1e-12);
        } else {
            CHECK(blk.dense.norm() <= 1e-12);
        }
    }
}

TEST_CASE("fixed-rank mode caps the rank") {
    auto pcop = blur_pcop(16);
    HMatrix h = assemble_hmatrix(pcop, 1e-12, 32, CompressionMethod::Randomized, 5);
    bool saw_lowrank = false;
    for (const auto& blk : h.blocks)
        if (blk.low_rank && blk.factors.rank() > 0) {
            saw_lowrank = true;
            CHECK(blk.factors.rank() <= 5);
        }
    CHECK(saw_lowrank);
}

TEST_CASE("pchm file round-trips") {
    std::mt19937_64 rng(9);
    auto pcop = blur_pcop(12);
    HMatrix h = assemble_hmatrix(pcop, 1e-9, 16, CompressionMethod::Randomized);
    const std::string path = "hmat_roundtrip_test.pchm";
    save_hmatrix(h, path);
    HMatrix g = load_hmatrix(path);
    std::remove(path.c_str());
    REQUIRE(g.blocks.size() == h.blocks.size());
    CHECK(g.tree.perm() == h.tree.perm());
    Eigen::VectorXd f(pcop.domain().num_points());
    std::normal_distribution<double> gauss;
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = gauss(rng);
    CHECK((h.matvec(f) - g.matvec(f)).norm() == 0.0);
}

TEST_CASE("far-separated 1d clusters of a smooth kernel stay low rank") {
    // 1d convolution with a wide Gaussian: admissible blocks are numerically
    // low rank at tol 1e-8
    const IndexBox domain({0}, {63});
    GridFunction kern(IndexBox({-63}, {63}));
    for_each_point(kern.box(), [&](const Point& z) {
        kern.at(z) = std::exp(-static_cast<double>(z[0] * z[0]) / (2.0 * 36.0));
    });
    auto op = convolution_operator(domain, kern);
    auto grid = std::make_shared<AdaptiveGrid>(AdaptiveGrid::make_root(domain));
    auto pcop = assemble_on_grid(op, grid);
    ClusterTree tree = ClusterTree::build(domain, 8);
    int audited = 0;
    for (int a = 0; a < static_cast<int>(tree.nodes().size()); ++a) {
        for (int b = 0; b < static_cast<int>(tree.nodes().size()); ++b) {
            if (!tree.node(a).is_leaf() || !tree.node(b).is_leaf()) continue;
            if (ClusterTree::distance(tree.node(a).bbox, tree.node(b).bbox) < 16) continue;
            BlockFactors f = compress_block(pcop, tree, a, b, CompressionMethod::Randomized, 1e-8);
            CHECK(f.rank() <= 10);
            ++audited;
            if (audited > 6) return;
        }
    }
    CHECK(audited > 0);
}
