#pragma once

// Eigen-analysis of grounded Laplacians: extreme eigenvalues, Schur
// complements, the GFM-modified Laplacian, and numerical certification of
// the two Schur-complement eigenvalue inequalities.

#include "drp/netgraph.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace drp {

struct EigenDecomposition {
    Eigen::VectorXd lambdas;  // ascending
    Eigen::MatrixXd w;        // orthogonal, columns are eigenvectors
};

/// GFL/GFM node index sets (0-based positions into a GroundedLaplacian).
struct Partition {
    std::vector<Eigen::Index> gfl_idx;
    std::vector<Eigen::Index> gfm_idx;
};

/// Checks disjointness and coverage of {0..n-1}; throws on violation.
void validate(const Partition& p, Eigen::Index n);

/// Symmetric eigendecomposition with ascending eigenvalues. Throws if the
/// input asymmetry exceeds 1e-10.
EigenDecomposition eig_sym(const Eigen::MatrixXd& b);

/// B[keep,keep] - B[keep,elim] B[elim,elim]^{-1} B[elim,keep].
Eigen::MatrixXd schur_complement(const Eigen::MatrixXd& b,
                                 const std::vector<Eigen::Index>& eliminate);

/// B + diag(0 on GFL nodes, b_eq on GFM nodes). Requires b_eq > 0.
GroundedLaplacian modified_laplacian(const GroundedLaplacian& b, const Partition& p,
                                     double b_eq);

/// Smallest eigenvalue of B (the generalized short-circuit ratio).
double gscr(const GroundedLaplacian& b);

struct LemmaResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;       // lhs - rhs for lemma 1, rhs - lhs for lemma 2
    bool holds = false;        // strict inequality with margin > 1e-10
    bool inconclusive = false; // |margin| <= 1e-10
    bool degenerate = false;   // empty partition side / decoupled block
    double mid = 0.0;          // lemma 1 only: the intermediate lambda_min(B_mod)
};

/// Lemma 1: lambda_min(B_mod / gfm-set) > lambda_min(B). Also reports the
/// chain term lambda_min(B_mod) in `mid`.
LemmaResult lemma1_check(const GroundedLaplacian& b, const Partition& p, double b_eq);

/// Lemma 2: lambda_max(B / gfl-set) < lambda_max(B).
LemmaResult lemma2_check(const GroundedLaplacian& b, const Partition& p);

struct RandomLaplacianOptions {
    int min_nodes = 2;
    int max_nodes = 8;
    double extra_edge_prob = 0.35;
    double x_min = 0.05;
    double x_max = 1.0;
};

/// Random connected grounded Laplacian: spanning tree plus extra edges,
/// branch weights 1/x with x uniform in [x_min, x_max], diagonal grounding
/// on a random nonempty node subset. Deterministic for a given engine state.
GroundedLaplacian random_grounded_laplacian(std::mt19937_64& rng,
                                            const RandomLaplacianOptions& opt = {});

/// Random nonempty-on-both-sides partition of {0..n-1} (n >= 2).
Partition random_partition(std::mt19937_64& rng, Eigen::Index n);

/// Uniform double in [lo, hi) from the top 53 bits of the engine.
double uniform_real(std::mt19937_64& rng, double lo, double hi);

/// Uniform integer in [lo, hi].
std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi);

}  // namespace drp
