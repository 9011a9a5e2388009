#pragma once

// Network description parsing, nodal susceptance assembly, and Kron
// reduction to the grounded Laplacian over inverter nodes.

#include <Eigen/Dense>

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace drp {

/// Error raised for invalid network files or matrices that violate the
/// grounded-Laplacian contract.
class NetworkError : public std::runtime_error {
public:
    explicit NetworkError(const std::string& what) : std::runtime_error(what) {}
};

enum class NodeRole { Inverter, Interior, Infinite };

struct BaseValues {
    double u_base_kv = 0.0;
    double s_base_mva = 0.0;
    double f_base_hz = 0.0;
};

struct NetworkNode {
    int id = 0;
    NodeRole role = NodeRole::Interior;
};

struct Branch {
    int from = 0;
    int to = 0;
    double r_pu = 0.0;
    double x_pu = 0.0;
    bool scalable = true;
};

/// Validated network description. Invariants (checked by validate()):
/// exactly one infinite node, at least one inverter node, connected graph,
/// x_pu > 0 on every branch, k > 0, unique node ids, no self-loops.
struct NetworkSpec {
    BaseValues base;
    double k = 1.0;
    std::vector<NetworkNode> nodes;
    std::vector<Branch> branches;
};

/// Susceptance matrix over inverter nodes after grounding the infinite bus
/// and eliminating interior nodes. Symmetric positive-definite M-matrix.
struct GroundedLaplacian {
    Eigen::MatrixXd b;
    std::vector<int> node_order;  // row/col i corresponds to node_order[i]

    Eigen::Index size() const { return b.rows(); }
};

/// Full nodal susceptance matrix over all non-infinite nodes (the infinite
/// bus is grounded during assembly). node_ids[i] gives the node of row i.
struct FullLaplacian {
    Eigen::MatrixXd a;
    std::vector<int> node_ids;
    std::vector<NodeRole> roles;  // role of node_ids[i]
};

/// Throws NetworkError naming the offending field if any invariant fails.
void validate(const NetworkSpec& spec);

NetworkSpec parse_network(const std::string& json_text);
NetworkSpec load_network(const std::filesystem::path& path);

/// Multiplies r_pu and x_pu of every scalable branch by k; the returned
/// spec has k = 1.
NetworkSpec apply_scaling(const NetworkSpec& spec);

/// Nodal susceptance assembly: diagonal entries sum 1/x over incident
/// branches (including branches to the infinite bus), off-diagonals are
/// -1/x. Resistance does not enter. Expects scaling already applied.
FullLaplacian build_full_laplacian(const NetworkSpec& spec);

/// Schur complement eliminating `eliminate` (0-based row indices of
/// `full`): A[keep,keep] - A[keep,elim] A[elim,elim]^{-1} A[elim,keep].
Eigen::MatrixXd kron_reduce(const Eigen::MatrixXd& full,
                            const std::vector<Eigen::Index>& eliminate);

/// Kron-reduces the interior nodes of a full Laplacian and returns the
/// grounded Laplacian over inverter nodes, with invariants checked.
GroundedLaplacian kron_reduce(const FullLaplacian& full);

/// load -> apply_scaling -> build_full_laplacian -> kron_reduce.
GroundedLaplacian grounded_laplacian(const NetworkSpec& spec);

/// Contract check used after construction and in tests: symmetry within
/// 1e-12, positive definiteness, off-diagonal entries <= 1e-12.
void check_grounded_laplacian(const Eigen::MatrixXd& b);

}  // namespace drp
