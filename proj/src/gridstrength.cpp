#include "drp/gridstrength.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <set>

namespace drp {

namespace {
constexpr double kMarginTol = 1e-10;
}

void validate(const Partition& p, Eigen::Index n) {
    std::set<Eigen::Index> seen;
    for (Eigen::Index i : p.gfl_idx) {
        if (i < 0 || i >= n) throw NetworkError("partition: gfl index out of range");
        if (!seen.insert(i).second) throw NetworkError("partition: duplicate index");
    }
    for (Eigen::Index i : p.gfm_idx) {
        if (i < 0 || i >= n) throw NetworkError("partition: gfm index out of range");
        if (!seen.insert(i).second) throw NetworkError("partition: duplicate index");
    }
    if (static_cast<Eigen::Index>(seen.size()) != n)
        throw NetworkError("partition does not cover all nodes");
}

EigenDecomposition eig_sym(const Eigen::MatrixXd& b) {
    const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
    if ((b - b.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw NetworkError("eig_sym: input is not symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(b);
    if (es.info() != Eigen::Success)
        throw NetworkError("eig_sym: eigensolver failed to converge");
    EigenDecomposition out;
    out.lambdas = es.eigenvalues();  // ascending by contract
    out.w = es.eigenvectors();
    return out;
}

Eigen::MatrixXd schur_complement(const Eigen::MatrixXd& b,
                                 const std::vector<Eigen::Index>& eliminate) {
    return kron_reduce(b, eliminate);
}

GroundedLaplacian modified_laplacian(const GroundedLaplacian& b, const Partition& p,
                                     double b_eq) {
    if (!(b_eq > 0.0))
        throw NetworkError("modified_laplacian: b_eq must be > 0 (got " +
                           std::to_string(b_eq) + "), lemma 1 hypothesis violated");
    validate(p, b.size());
    GroundedLaplacian out = b;
    for (Eigen::Index i : p.gfm_idx) out.b(i, i) += b_eq;
    check_grounded_laplacian(out.b);
    return out;
}

double gscr(const GroundedLaplacian& b) { return eig_sym(b.b).lambdas(0); }

LemmaResult lemma1_check(const GroundedLaplacian& b, const Partition& p, double b_eq) {
    validate(p, b.size());
    LemmaResult r;
    r.rhs = eig_sym(b.b).lambdas(0);
    if (p.gfm_idx.empty()) {
        r.lhs = r.rhs;
        r.mid = r.rhs;
        r.margin = 0.0;
        r.holds = false;
        r.degenerate = true;
        return r;
    }
    const GroundedLaplacian bmod = modified_laplacian(b, p, b_eq);
    r.mid = eig_sym(bmod.b).lambdas(0);
    const Eigen::MatrixXd reduced = schur_complement(bmod.b, p.gfm_idx);
    r.lhs = eig_sym(reduced).lambdas(0);
    r.margin = r.lhs - r.rhs;
    r.inconclusive = std::abs(r.margin) <= kMarginTol;
    r.holds = r.margin > kMarginTol;
    return r;
}

LemmaResult lemma2_check(const GroundedLaplacian& b, const Partition& p) {
    validate(p, b.size());
    if (p.gfl_idx.empty())
        throw NetworkError("lemma2_check requires at least one GFL node");
    LemmaResult r;
    const auto full = eig_sym(b.b);
    r.rhs = full.lambdas(full.lambdas.size() - 1);
    if (p.gfm_idx.empty()) {
        // nothing left after eliminating the GFL set
        r.lhs = r.rhs;
        r.margin = 0.0;
        r.holds = false;
        r.degenerate = true;
        return r;
    }
    // decoupled case: the kept block has no coupling to the eliminated one
    double coupling = 0.0;
    for (Eigen::Index i : p.gfm_idx)
        for (Eigen::Index j : p.gfl_idx) coupling = std::max(coupling, std::abs(b.b(i, j)));
    const Eigen::MatrixXd reduced = schur_complement(b.b, p.gfl_idx);
    const auto red = eig_sym(reduced);
    r.lhs = red.lambdas(red.lambdas.size() - 1);
    r.margin = r.rhs - r.lhs;
    r.degenerate = coupling <= kMarginTol;
    r.inconclusive = std::abs(r.margin) <= kMarginTol;
    r.holds = r.margin > kMarginTol;
    return r;
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
}

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<std::int64_t>(rng() % span);
}

GroundedLaplacian random_grounded_laplacian(std::mt19937_64& rng,
                                            const RandomLaplacianOptions& opt) {
    const auto n = static_cast<Eigen::Index>(
        uniform_int(rng, opt.min_nodes, opt.max_nodes));
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);

    auto add_edge = [&](Eigen::Index i, Eigen::Index j) {
        const double w = 1.0 / uniform_real(rng, opt.x_min, opt.x_max);
        b(i, i) += w;
        b(j, j) += w;
        b(i, j) -= w;
        b(j, i) -= w;
    };

    // random spanning tree: attach each node to a random earlier one
    for (Eigen::Index i = 1; i < n; ++i)
        add_edge(i, static_cast<Eigen::Index>(uniform_int(rng, 0, i - 1)));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (uniform_real(rng, 0.0, 1.0) < opt.extra_edge_prob) add_edge(i, j);

    // grounding on a nonempty random subset
    bool grounded = false;
    while (!grounded) {
        for (Eigen::Index i = 0; i < n; ++i) {
            if (uniform_real(rng, 0.0, 1.0) < 0.5) {
                b(i, i) += 1.0 / uniform_real(rng, opt.x_min, opt.x_max);
                grounded = true;
            }
        }
    }

    GroundedLaplacian out;
    out.b = b;
    for (Eigen::Index i = 0; i < n; ++i) out.node_order.push_back(static_cast<int>(i) + 1);
    check_grounded_laplacian(out.b);
    return out;
}

Partition random_partition(std::mt19937_64& rng, Eigen::Index n) {
    if (n < 2) throw NetworkError("random_partition needs n >= 2");
    Partition p;
    while (p.gfl_idx.empty() || p.gfm_idx.empty()) {
        p.gfl_idx.clear();
        p.gfm_idx.clear();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (uniform_real(rng, 0.0, 1.0) < 0.5)
                p.gfl_idx.push_back(i);
            else
                p.gfm_idx.push_back(i);
        }
    }
    return p;
}

}  // namespace drp
