#ifndef PCOP_HMATRIX_HPP
#define PCOP_HMATRIX_HPP

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "pcop/pc_operator.hpp"

namespace pcop {

/// Node of the geometric nested-bisection cluster tree; owns a half-open
/// range [begin, end) into the point permutation.
struct ClusterNode {
    std::int64_t begin = 0;
    std::int64_t end = 0;
    int child_lo = -1;
    int child_hi = -1;
    int split_axis = -1;
    IndexBox bbox;

    bool is_leaf() const { return child_lo < 0; }
    std::int64_t size() const { return end - begin; }
};

/// Equal-size coordinate bisection: split by a hyperplane normal to the
/// widest direction of the cluster bounding box; the lower half gets the
/// extra point on odd counts. Leaf when size <= leaf_cap.
class ClusterTree {
  public:
    static ClusterTree build(const IndexBox& domain, int leaf_cap);

    const IndexBox& domain() const { return domain_; }
    int leaf_cap() const { return leaf_cap_; }
    const std::vector<ClusterNode>& nodes() const { return nodes_; }
    const ClusterNode& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    /// Permutation: cluster position -> domain linear index.
    const std::vector<std::int64_t>& perm() const { return perm_; }

    Point point_at(std::int64_t perm_pos) const;

    double diameter(int node_id) const;
    static double distance(const IndexBox& a, const IndexBox& b);

    /// Rebuilds the tree from a stored layout (deserialization path).
    void restore(IndexBox domain, int leaf_cap, std::vector<std::int64_t> perm,
                 std::vector<ClusterNode> nodes);

  private:
    IndexBox domain_;
    int leaf_cap_ = 32;
    std::vector<std::int64_t> perm_;
    std::vector<ClusterNode> nodes_;
};

/// dist(T,S) >= min(diam T, diam S), Euclidean on bounding boxes.
bool admissible(const ClusterTree& tree, int t_node, int s_node);

enum class CompressionMethod { Randomized, Cur };

struct BlockFactors {
    Eigen::MatrixXd B;  // |T| x rank
    Eigen::MatrixXd C;  // rank x |S|
    bool rank_capped = false;

    std::int64_t rank() const { return B.cols(); }
};

/// Low-rank factors of the (T,S) block of the approximation. The randomized
/// route probes apply_block (plus an adjoint pass, oversampling 10); the CUR
/// route runs adaptive cross approximation on entry().
BlockFactors compress_block(const ProductConvolutionOperator& pcop, const ClusterTree& tree,
                            int t_node, int s_node, CompressionMethod method, double tol,
                            int fixed_rank = 0);

struct HBlock {
    int t_node = -1;
    int s_node = -1;
    bool low_rank = false;
    BlockFactors factors;   // low-rank blocks
    Eigen::MatrixXd dense;  // inadmissible leaves
};

struct HMatrix {
    ClusterTree tree;
    double tol = 0.0;
    int fixed_rank = 0;
    CompressionMethod method = CompressionMethod::Randomized;
    std::vector<HBlock> blocks;
    bool any_rank_capped = false;

    Eigen::VectorXd matvec(const Eigen::VectorXd& f) const;
};

HMatrix assemble_hmatrix(const ProductConvolutionOperator& pcop, double tol, int leaf_cap,
                         CompressionMethod method, int fixed_rank = 0);

/// Little-endian "PCHM" container: header, permutation, preorder cluster
/// nodes {idx_lo, idx_hi, split_axis or -1}, then the block records.
void save_hmatrix(const HMatrix& h, const std::string& path);
HMatrix load_hmatrix(const std::string& path);

}  // namespace pcop

#endif
