#include "pcop/hmatrix.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>

namespace pcop {

namespace {

Point delinearize(const IndexBox& box, std::int64_t lin) {
    const int d = box.dim();
    Point p(static_cast<std::size_t>(d));
    for (int i = d - 1; i >= 0; --i) {
        const Coord w = box.extent(i) + 1;
        p[static_cast<std::size_t>(i)] = box.lo[i] + lin % w;
        lin /= w;
    }
    return p;
}

IndexBox points_bbox(const IndexBox& domain, const std::vector<std::int64_t>& perm,
                     std::int64_t b, std::int64_t e) {
    Point lo = delinearize(domain, perm[static_cast<std::size_t>(b)]);
    Point hi = lo;
    for (std::int64_t i = b + 1; i < e; ++i) {
        const Point p = delinearize(domain, perm[static_cast<std::size_t>(i)]);
        for (std::size_t a = 0; a < p.size(); ++a) {
            lo[a] = std::min(lo[a], p[a]);
            hi[a] = std::max(hi[a], p[a]);
        }
    }
    return {lo, hi};
}

}  // namespace

ClusterTree ClusterTree::build(const IndexBox& domain, int leaf_cap) {
    if (leaf_cap < 1) throw std::invalid_argument("ClusterTree: leaf_cap >= 1 required");
    ClusterTree t;
    t.domain_ = domain;
    t.leaf_cap_ = leaf_cap;
    const std::int64_t N = domain.num_points();
    t.perm_.resize(static_cast<std::size_t>(N));
    for (std::int64_t i = 0; i < N; ++i) t.perm_[static_cast<std::size_t>(i)] = i;

    // preorder recursive construction
    std::function<int(std::int64_t, std::int64_t)> rec = [&](std::int64_t b, std::int64_t e) {
        const int id = static_cast<int>(t.nodes_.size());
        t.nodes_.push_back(ClusterNode{b, e, -1, -1, -1, points_bbox(domain, t.perm_, b, e)});
        if (e - b > leaf_cap) {
            const IndexBox& bbox = t.nodes_[static_cast<std::size_t>(id)].bbox;
            int axis = 0;
            for (int a = 1; a < domain.dim(); ++a)
                if (bbox.extent(a) > bbox.extent(axis)) axis = a;
            std::sort(t.perm_.begin() + b, t.perm_.begin() + e,
                      [&](std::int64_t x, std::int64_t y) {
                          const Point px = delinearize(domain, x), py = delinearize(domain, y);
                          if (px[static_cast<std::size_t>(axis)] != py[static_cast<std::size_t>(axis)])
                              return px[static_cast<std::size_t>(axis)] < py[static_cast<std::size_t>(axis)];
                          return x < y;
                      });
            const std::int64_t mid = b + (e - b + 1) / 2;  // lower half gets the extra point
            const int lo = rec(b, mid);
            const int hi = rec(mid, e);
            t.nodes_[static_cast<std::size_t>(id)].child_lo = lo;
            t.nodes_[static_cast<std::size_t>(id)].child_hi = hi;
            t.nodes_[static_cast<std::size_t>(id)].split_axis = axis;
        }
        return id;
    };
    rec(0, N);
    return t;
}

Point ClusterTree::point_at(std::int64_t perm_pos) const {
    return delinearize(domain_, perm_[static_cast<std::size_t>(perm_pos)]);
}

void ClusterTree::restore(IndexBox domain, int leaf_cap, std::vector<std::int64_t> perm,
                          std::vector<ClusterNode> nodes) {
    domain_ = std::move(domain);
    leaf_cap_ = leaf_cap;
    perm_ = std::move(perm);
    nodes_ = std::move(nodes);
}

double ClusterTree::diameter(int node_id) const {
    const IndexBox& b = node(node_id).bbox;
    double s = 0.0;
    for (int i = 0; i < b.dim(); ++i) s += static_cast<double>(b.extent(i) * b.extent(i));
    return std::sqrt(s);
}

double ClusterTree::distance(const IndexBox& a, const IndexBox& b) {
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i) {
        const Coord gap = std::max<Coord>(0, std::max(a.lo[i] - b.hi[i], b.lo[i] - a.hi[i]));
        s += static_cast<double>(gap * gap);
    }
    return std::sqrt(s);
}

bool admissible(const ClusterTree& tree, int t_node, int s_node) {
    const double dist = ClusterTree::distance(tree.node(t_node).bbox, tree.node(s_node).bbox);
    const double dmin = std::min(tree.diameter(t_node), tree.diameter(s_node));
    return dist >= dmin;
}

namespace {

// Apply the (T,S) block of the approximation to a vector in cluster
// ordering: scatter into the source bounding box, block-convolve, gather.
Eigen::VectorXd block_apply(const ProductConvolutionOperator& pcop, const ClusterTree& tree,
                            int t_node, int s_node, const Eigen::VectorXd& x, bool adjoint) {
    const ClusterNode& tn = tree.node(t_node);
    const ClusterNode& sn = tree.node(s_node);
    // For the adjoint, the roles of rows/cols swap: input lives on T.
    const ClusterNode& in_node = adjoint ? tn : sn;
    const ClusterNode& out_node = adjoint ? sn : tn;

    GridFunction f(in_node.bbox);
    for (std::int64_t i = 0; i < in_node.size(); ++i)
        f.at(tree.point_at(in_node.begin + i)) = x[static_cast<Eigen::Index>(i)];

    // adjoint of the (T,S) block maps T-data to S-data: (A[T,S])^* = A^*[S,T]
    GridFunction g = adjoint ? pcop.apply_block(sn.bbox, tn.bbox, f, true)
                             : pcop.apply_block(tn.bbox, sn.bbox, f, false);

    Eigen::VectorXd out(out_node.size());
    for (std::int64_t i = 0; i < out_node.size(); ++i)
        out[static_cast<Eigen::Index>(i)] = g.at(tree.point_at(out_node.begin + i));
    return out;
}

Eigen::MatrixXd dense_block(const ProductConvolutionOperator& pcop, const ClusterTree& tree,
                            int t_node, int s_node) {
    const ClusterNode& tn = tree.node(t_node);
    const ClusterNode& sn = tree.node(s_node);
    Eigen::MatrixXd out(tn.size(), sn.size());
    for (std::int64_t j = 0; j < sn.size(); ++j) {
        const Point x = tree.point_at(sn.begin + j);
        for (std::int64_t i = 0; i < tn.size(); ++i)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                pcop.entry(tree.point_at(tn.begin + i), x);
    }
    return out;
}

BlockFactors compress_randomized(const ProductConvolutionOperator& pcop, const ClusterTree& tree,
                                 int t_node, int s_node, double tol, int fixed_rank) {
    const std::int64_t nt = tree.node(t_node).size();
    const std::int64_t ns = tree.node(s_node).size();
    const std::int64_t max_rank = std::min(nt, ns);
    const int oversample = 10;

    // deterministic probes seeded by the block position
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull ^ (static_cast<std::uint64_t>(t_node) << 32) ^
                        static_cast<std::uint64_t>(s_node));
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto gauss_vec = [&](std::int64_t n) {
        Eigen::VectorXd v(n);
        for (std::int64_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = gauss(rng);
        return v;
    };

    std::int64_t l = fixed_rank > 0 ? std::min<std::int64_t>(fixed_rank + oversample, max_rank)
                                    : std::min<std::int64_t>(20, max_rank);

    Eigen::MatrixXd Q;
    double scale = 0.0;
    bool capped = false;
    while (true) {
        Eigen::MatrixXd Y(nt, l);
        double y_fro2 = 0.0;
        for (std::int64_t j = 0; j < l; ++j) {
            Y.col(static_cast<Eigen::Index>(j)) =
                block_apply(pcop, tree, t_node, s_node, gauss_vec(ns), false);
            y_fro2 += Y.col(static_cast<Eigen::Index>(j)).squaredNorm();
        }
        scale = std::sqrt(y_fro2 / static_cast<double>(l));  // ~ ||A_blk||_F
        if (scale == 0.0) return BlockFactors{Eigen::MatrixXd(nt, 0), Eigen::MatrixXd(0, ns), false};

        Eigen::HouseholderQR<Eigen::MatrixXd> qr(Y);
        Q = qr.householderQ() * Eigen::MatrixXd::Identity(nt, std::min(nt, l));

        if (fixed_rank > 0 || l >= max_rank) break;
        // residual estimate with a few fresh probes
        const int s_probes = 4;
        double r2 = 0.0;
        for (int j = 0; j < s_probes; ++j) {
            Eigen::VectorXd y = block_apply(pcop, tree, t_node, s_node, gauss_vec(ns), false);
            r2 += (y - Q * (Q.transpose() * y)).squaredNorm();
        }
        const double res = std::sqrt(r2 / s_probes);
        if (res <= 0.25 * tol * scale) break;
        l = std::min(max_rank, 2 * l);
    }

    // adjoint pass: B = Q^T A = (A^* Q)^T
    Eigen::MatrixXd Bt(ns, Q.cols());
    for (Eigen::Index j = 0; j < Q.cols(); ++j)
        Bt.col(j) = block_apply(pcop, tree, t_node, s_node, Q.col(j), true);
    Eigen::MatrixXd B = Bt.transpose();

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(B, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();

    std::int64_t rank;
    if (fixed_rank > 0) {
        rank = std::min<std::int64_t>(fixed_rank, sv.size());
        capped = rank < sv.size() && sv[static_cast<Eigen::Index>(rank)] > tol * sv[0];
    } else {
        // keep the smallest rank whose dropped Frobenius tail is <= tol/2
        double total2 = sv.squaredNorm();
        double tail2 = 0.0;
        rank = sv.size();
        for (Eigen::Index i = sv.size() - 1; i >= 0; --i) {
            const double t2 = tail2 + sv[i] * sv[i];
            if (std::sqrt(t2) > 0.5 * tol * std::sqrt(total2)) break;
            tail2 = t2;
            rank = i;
        }
    }

    BlockFactors out;
    out.B = Q * svd.matrixU().leftCols(rank) *
            sv.head(rank).asDiagonal().toDenseMatrix();
    out.C = svd.matrixV().leftCols(rank).transpose();
    out.rank_capped = capped;
    return out;
}

BlockFactors compress_cur(const ProductConvolutionOperator& pcop, const ClusterTree& tree,
                          int t_node, int s_node, double tol, int fixed_rank) {
    const ClusterNode& tn = tree.node(t_node);
    const ClusterNode& sn = tree.node(s_node);
    const std::int64_t nt = tn.size(), ns = sn.size();
    const std::int64_t max_rank =
        fixed_rank > 0 ? std::min<std::int64_t>(fixed_rank, std::min(nt, ns)) : std::min(nt, ns);

    auto row_of = [&](std::int64_t i) {
        Eigen::VectorXd r(ns);
        const Point y = tree.point_at(tn.begin + i);
        for (std::int64_t j = 0; j < ns; ++j)
            r[static_cast<Eigen::Index>(j)] = pcop.entry(y, tree.point_at(sn.begin + j));
        return r;
    };
    auto col_of = [&](std::int64_t j) {
        Eigen::VectorXd c(nt);
        const Point x = tree.point_at(sn.begin + j);
        for (std::int64_t i = 0; i < nt; ++i)
            c[static_cast<Eigen::Index>(i)] = pcop.entry(tree.point_at(tn.begin + i), x);
        return c;
    };

    // partially pivoted adaptive cross approximation
    std::vector<Eigen::VectorXd> us, vs;
    std::vector<char> used_row(static_cast<std::size_t>(nt), 0);
    double approx_fro2 = 0.0;
    std::int64_t next_row = 0;
    bool capped = false;

    while (static_cast<std::int64_t>(us.size()) < max_rank) {
        Eigen::VectorXd r = row_of(next_row);
        for (std::size_t k = 0; k < us.size(); ++k)
            r -= us[k][static_cast<Eigen::Index>(next_row)] * vs[k];
        used_row[static_cast<std::size_t>(next_row)] = 1;

        Eigen::Index jpiv;
        const double rmax = r.cwiseAbs().maxCoeff(&jpiv);
        if (rmax == 0.0) {
            // pick another unused row; all exhausted -> done
            std::int64_t cand = -1;
            for (std::int64_t i = 0; i < nt; ++i)
                if (!used_row[static_cast<std::size_t>(i)]) {
                    cand = i;
                    break;
                }
            if (cand < 0) break;
            next_row = cand;
            continue;
        }

        Eigen::VectorXd v = r / r[jpiv];
        Eigen::VectorXd u = col_of(jpiv);
        for (std::size_t k = 0; k < us.size(); ++k) u -= vs[k][jpiv] * us[k];

        // running Frobenius estimate of the accumulated approximation
        double cross = 0.0;
        for (std::size_t k = 0; k < us.size(); ++k)
            cross += us[k].dot(u) * vs[k].dot(v);
        approx_fro2 += 2.0 * cross + u.squaredNorm() * v.squaredNorm();

        us.push_back(u);
        vs.push_back(v);

        if (u.norm() * v.norm() <= tol * std::sqrt(std::max(approx_fro2, 1e-300))) break;

        // next pivot row: largest |u| among unused rows
        next_row = -1;
        double best = -1.0;
        for (std::int64_t i = 0; i < nt; ++i) {
            if (used_row[static_cast<std::size_t>(i)]) continue;
            const double a = std::abs(u[static_cast<Eigen::Index>(i)]);
            if (a > best) {
                best = a;
                next_row = i;
            }
        }
        if (next_row < 0) break;
    }
    if (static_cast<std::int64_t>(us.size()) >= max_rank && fixed_rank > 0) capped = true;

    BlockFactors out;
    out.B = Eigen::MatrixXd(nt, static_cast<Eigen::Index>(us.size()));
    out.C = Eigen::MatrixXd(static_cast<Eigen::Index>(vs.size()), ns);
    for (std::size_t k = 0; k < us.size(); ++k) {
        out.B.col(static_cast<Eigen::Index>(k)) = us[k];
        out.C.row(static_cast<Eigen::Index>(k)) = vs[k].transpose();
    }
    out.rank_capped = capped;
    return out;
}

}  // namespace

BlockFactors compress_block(const ProductConvolutionOperator& pcop, const ClusterTree& tree,
                            int t_node, int s_node, CompressionMethod method, double tol,
                            int fixed_rank) {
    if (method == CompressionMethod::Randomized)
        return compress_randomized(pcop, tree, t_node, s_node, tol, fixed_rank);
    return compress_cur(pcop, tree, t_node, s_node, tol, fixed_rank);
}

HMatrix assemble_hmatrix(const ProductConvolutionOperator& pcop, double tol, int leaf_cap,
                         CompressionMethod method, int fixed_rank) {
    HMatrix h;
    h.tree = ClusterTree::build(pcop.domain(), leaf_cap);
    h.tol = tol;
    h.fixed_rank = fixed_rank;
    h.method = method;

    std::function<void(int, int)> rec = [&](int t, int s) {
        const ClusterNode& tn = h.tree.node(t);
        const ClusterNode& sn = h.tree.node(s);
        if (admissible(h.tree, t, s)) {
            HBlock blk;
            blk.t_node = t;
            blk.s_node = s;
            blk.low_rank = true;
            blk.factors = compress_block(pcop, h.tree, t, s, method, tol, fixed_rank);
            h.any_rank_capped = h.any_rank_capped || blk.factors.rank_capped;
            h.blocks.push_back(std::move(blk));
            return;
        }
        if (tn.is_leaf() && sn.is_leaf()) {
            HBlock blk;
            blk.t_node = t;
            blk.s_node = s;
            blk.low_rank = false;
            blk.dense = dense_block(pcop, h.tree, t, s);
            h.blocks.push_back(std::move(blk));
            return;
        }
        const std::vector<int> ts = tn.is_leaf() ? std::vector<int>{t}
                                                 : std::vector<int>{tn.child_lo, tn.child_hi};
        const std::vector<int> ss = sn.is_leaf() ? std::vector<int>{s}
                                                 : std::vector<int>{sn.child_lo, sn.child_hi};
        for (int tc : ts)
            for (int sc : ss) rec(tc, sc);
    };
    rec(0, 0);
    return h;
}

Eigen::VectorXd HMatrix::matvec(const Eigen::VectorXd& f) const {
    const std::int64_t N = tree.domain().num_points();
    if (f.size() != N) throw std::invalid_argument("HMatrix::matvec: size mismatch");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(N);
    const auto& perm = tree.perm();
    for (const auto& blk : blocks) {
        const ClusterNode& tn = tree.node(blk.t_node);
        const ClusterNode& sn = tree.node(blk.s_node);
        Eigen::VectorXd x(sn.size());
        for (std::int64_t j = 0; j < sn.size(); ++j)
            x[static_cast<Eigen::Index>(j)] =
                f[static_cast<Eigen::Index>(perm[static_cast<std::size_t>(sn.begin + j)])];
        Eigen::VectorXd y = blk.low_rank ? (blk.factors.B * (blk.factors.C * x)).eval()
                                         : (blk.dense * x).eval();
        for (std::int64_t i = 0; i < tn.size(); ++i)
            out[static_cast<Eigen::Index>(perm[static_cast<std::size_t>(tn.begin + i)])] +=
                y[static_cast<Eigen::Index>(i)];
    }
    return out;
}

namespace {

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

void write_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m.rows()));
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(m.cols()));
    // row-major payload
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) write_pod<double>(os, m(i, j));
}

Eigen::MatrixXd read_matrix(std::istream& is) {
    const auto rows = static_cast<Eigen::Index>(read_pod<std::uint64_t>(is));
    const auto cols = static_cast<Eigen::Index>(read_pod<std::uint64_t>(is));
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = read_pod<double>(is);
    return m;
}

}  // namespace

void save_hmatrix(const HMatrix& h, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_hmatrix: cannot open " + path);
    os.write("PCHM", 4);
    write_pod<std::uint32_t>(os, 1u);  // version
    const IndexBox& domain = h.tree.domain();
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(domain.dim()));
    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(domain.num_points()));
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(h.tree.leaf_cap()));
    for (int i = 0; i < domain.dim(); ++i) {
        write_pod<std::int64_t>(os, domain.lo[i]);
        write_pod<std::int64_t>(os, domain.hi[i]);
    }
    for (std::int64_t p : h.tree.perm()) write_pod<std::int64_t>(os, p);

    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(h.tree.nodes().size()));
    for (const auto& n : h.tree.nodes()) {
        write_pod<std::int64_t>(os, n.begin);
        write_pod<std::int64_t>(os, n.end);
        write_pod<std::int32_t>(os, n.split_axis);
        write_pod<std::int32_t>(os, n.child_lo);
        write_pod<std::int32_t>(os, n.child_hi);
    }

    write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(h.blocks.size()));
    for (const auto& blk : h.blocks) {
        write_pod<std::int32_t>(os, blk.t_node);
        write_pod<std::int32_t>(os, blk.s_node);
        write_pod<std::uint8_t>(os, blk.low_rank ? 0 : 1);  // 0 = low rank, 1 = dense
        if (blk.low_rank) {
            write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(blk.factors.rank()));
            write_matrix(os, blk.factors.B);
            write_matrix(os, blk.factors.C);
        } else {
            write_pod<std::uint32_t>(os, 0u);
            write_matrix(os, blk.dense);
        }
    }
}

HMatrix load_hmatrix(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_hmatrix: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (std::memcmp(magic, "PCHM", 4) != 0) throw std::runtime_error("load_hmatrix: bad magic");
    const auto version = read_pod<std::uint32_t>(is);
    if (version != 1u) throw std::runtime_error("load_hmatrix: unsupported version");
    const auto d = read_pod<std::uint32_t>(is);
    (void)read_pod<std::uint64_t>(is);  // N, implied by the domain
    const auto leaf_cap = read_pod<std::uint32_t>(is);
    Point lo(d), hi(d);
    for (std::uint32_t i = 0; i < d; ++i) {
        lo[i] = read_pod<std::int64_t>(is);
        hi[i] = read_pod<std::int64_t>(is);
    }
    const IndexBox domain(lo, hi);

    HMatrix h;
    std::vector<std::int64_t> perm(static_cast<std::size_t>(domain.num_points()));
    for (auto& p : perm) p = read_pod<std::int64_t>(is);
    const auto n_nodes = read_pod<std::uint64_t>(is);
    std::vector<ClusterNode> nodes(n_nodes);
    for (auto& n : nodes) {
        n.begin = read_pod<std::int64_t>(is);
        n.end = read_pod<std::int64_t>(is);
        n.split_axis = read_pod<std::int32_t>(is);
        n.child_lo = read_pod<std::int32_t>(is);
        n.child_hi = read_pod<std::int32_t>(is);
        n.bbox = points_bbox(domain, perm, n.begin, n.end);
    }
    h.tree.restore(domain, static_cast<int>(leaf_cap), std::move(perm), std::move(nodes));

    const auto n_blocks = read_pod<std::uint64_t>(is);
    for (std::uint64_t b = 0; b < n_blocks; ++b) {
        HBlock blk;
        blk.t_node = read_pod<std::int32_t>(is);
        blk.s_node = read_pod<std::int32_t>(is);
        const auto kind = read_pod<std::uint8_t>(is);
        (void)read_pod<std::uint32_t>(is);  // rank, implied by the factor shapes
        blk.low_rank = kind == 0;
        if (blk.low_rank) {
            blk.factors.B = read_matrix(is);
            blk.factors.C = read_matrix(is);
        } else {
            blk.dense = read_matrix(is);
        }
        h.blocks.push_back(std::move(blk));
    }
    if (!is) throw std::runtime_error("load_hmatrix: truncated file");
    return h;
}

}  // namespace pcop
