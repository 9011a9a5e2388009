#include <doctest.h>

#include "drp/gridstrength.hpp"
#include "oracles.hpp"

#include <random>

using namespace drp;

namespace {

std::string fixture(const char* name) {
    return std::string(DRP_FIXTURE_DIR) + "/" + name;
}

GroundedLaplacian classic2() {
    GroundedLaplacian g;
    g.b.resize(2, 2);
    g.b << 2.0, -1.0, -1.0, 2.0;
    g.node_order = {1, 2};
    return g;
}

}  // namespace

TEST_CASE("symmetric eigendecomposition") {
    SUBCASE("classic 2x2") {
        const auto ed = eig_sym(classic2().b);
        CHECK(ed.lambdas(0) == doctest::Approx(1.0));
        CHECK(ed.lambdas(1) == doctest::Approx(3.0));
    }
    SUBCASE("scalar") {
        Eigen::MatrixXd m(1, 1);
        m << 5.0;
        const auto ed = eig_sym(m);
        CHECK(ed.lambdas(0) == doctest::Approx(5.0));
        CHECK(std::abs(ed.w(0, 0)) == doctest::Approx(1.0));
    }
    SUBCASE("contracts: orthogonality and reconstruction") {
        std::mt19937_64 rng(5);
        for (int t = 0; t < 30; ++t) {
            const GroundedLaplacian g = random_grounded_laplacian(rng);
            const auto ed = eig_sym(g.b);
            const Eigen::Index n = g.size();
            const double orth =
                (ed.w.transpose() * ed.w - Eigen::MatrixXd::Identity(n, n))
                    .cwiseAbs()
                    .maxCoeff();
            CHECK(orth < 1e-10);
            const Eigen::MatrixXd rec =
                ed.w * ed.lambdas.asDiagonal() * ed.w.transpose();
            CHECK((rec - g.b).cwiseAbs().maxCoeff() <
                  1e-9 * g.b.cwiseAbs().maxCoeff());
            CHECK(ed.lambdas(0) > 0.0);
            for (Eigen::Index i = 1; i < n; ++i)
                CHECK(ed.lambdas(i) >= ed.lambdas(i - 1));
        }
    }
    SUBCASE("case-study eigenvalues against the closed-form cubic") {
        const GroundedLaplacian b =
            grounded_laplacian(load_network(fixture("three_inverter.json")));
        const auto ed = eig_sym(b.b);
        const auto ref = oracle::eig_closed_form(b.b);
        for (int i = 0; i < 3; ++i)
            CHECK(ed.lambdas(i) ==
                  doctest::Approx(ref[static_cast<size_t>(i)]).epsilon(1e-10));
        CHECK(gscr(b) == doctest::Approx(2.4708326555498).epsilon(1e-10));
        CHECK(ed.lambdas(2) == doctest::Approx(7.2006116471571).epsilon(1e-10));
    }
    SUBCASE("non-symmetric input rejected") {
        Eigen::MatrixXd m(2, 2);
        m << 1.0, 2.0, 0.0, 1.0;
        CHECK_THROWS_AS(eig_sym(m), NetworkError);
    }
}

TEST_CASE("schur complement") {
    SUBCASE("diagonal decouples") {
        Eigen::MatrixXd d(2, 2);
        d << 2.0, 0.0, 0.0, 3.0;
        const Eigen::MatrixXd out = schur_complement(d, {0});
        REQUIRE(out.rows() == 1);
        CHECK(out(0, 0) == doctest::Approx(3.0));
    }
    SUBCASE("2x2 arithmetic") {
        const Eigen::MatrixXd out = schur_complement(classic2().b, {0});
        CHECK(out(0, 0) == doctest::Approx(2.0 - 1.0 / 2.0));
    }
    SUBCASE("empty elimination") {
        const Eigen::MatrixXd out = schur_complement(classic2().b, {});
        CHECK((out - classic2().b).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("equals kron_reduce and the explicit-inverse oracle on random inputs") {
        std::mt19937_64 rng(17);
        for (int t = 0; t < 50; ++t) {
            const GroundedLaplacian g = random_grounded_laplacian(rng);
            if (g.size() < 2) continue;
            const Partition p = random_partition(rng, g.size());
            const Eigen::MatrixXd a = schur_complement(g.b, p.gfm_idx);
            const Eigen::MatrixXd b = kron_reduce(g.b, p.gfm_idx);
            const Eigen::MatrixXd c = oracle::schur_explicit(g.b, p.gfm_idx);
            CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
            CHECK((a - c).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("modified laplacian") {
    const GroundedLaplacian g = classic2();
    SUBCASE("diagonal shift on the gfm set") {
        Partition p;
        p.gfl_idx = {0};
        p.gfm_idx = {1};
        const GroundedLaplacian out = modified_laplacian(g, p, 1.0);
        CHECK(out.b(0, 0) == doctest::Approx(2.0));
        CHECK(out.b(1, 1) == doctest::Approx(3.0));
        CHECK(out.b(0, 1) == doctest::Approx(-1.0));
    }
    SUBCASE("vanishing b_eq approaches the original") {
        Partition p;
        p.gfl_idx = {0};
        p.gfm_idx = {1};
        const GroundedLaplacian out = modified_laplacian(g, p, 1e-12);
        CHECK((out.b - g.b).cwiseAbs().maxCoeff() <= 1e-12);
    }
    SUBCASE("b_eq <= 0 rejected") {
        Partition p;
        p.gfl_idx = {0};
        p.gfm_idx = {1};
        CHECK_THROWS_AS(modified_laplacian(g, p, 0.0), NetworkError);
        CHECK_THROWS_AS(modified_laplacian(g, p, -1.0), NetworkError);
    }
    SUBCASE("eigenvalues never decrease, smallest strictly increases") {
        std::mt19937_64 rng(23);
        for (int t = 0; t < 50; ++t) {
            const GroundedLaplacian g2 = random_grounded_laplacian(rng);
            if (g2.size() < 2) continue;
            const Partition p = random_partition(rng, g2.size());
            const double b_eq = uniform_real(rng, 1e-3, 5.0);
            const GroundedLaplacian mod = modified_laplacian(g2, p, b_eq);
            const auto e0 = eig_sym(g2.b);
            const auto e1 = eig_sym(mod.b);
            for (Eigen::Index i = 0; i < g2.size(); ++i)
                CHECK(e1.lambdas(i) >= e0.lambdas(i) - 1e-12);
            CHECK(e1.lambdas(0) > e0.lambdas(0));
        }
    }
}

TEST_CASE("lemma checks") {
    SUBCASE("hand-checkable 2x2, lemma 1") {
        Partition p;
        p.gfl_idx = {0};
        p.gfm_idx = {1};
        const LemmaResult r = lemma1_check(classic2(), p, 1.0);
        CHECK(r.lhs == doctest::Approx(5.0 / 3.0));
        CHECK(r.rhs == doctest::Approx(1.0));
        CHECK(r.margin == doctest::Approx(2.0 / 3.0));
        CHECK(r.holds);
        // the proof chain reports the middle term too
        CHECK(r.mid > r.rhs);
        CHECK(r.lhs > r.mid);
    }
    SUBCASE("hand-checkable 2x2, lemma 2") {
        Partition p;
        p.gfl_idx = {0};
        p.gfm_idx = {1};
        const LemmaResult r = lemma2_check(classic2(), p);
        CHECK(r.lhs == doctest::Approx(1.5));
        CHECK(r.rhs == doctest::Approx(3.0));
        CHECK(r.margin == doctest::Approx(1.5));
        CHECK(r.holds);
        CHECK_FALSE(r.degenerate);
    }
    SUBCASE("empty gfm set degenerates lemma 1") {
        Partition p;
        p.gfl_idx = {0, 1};
        const LemmaResult r = lemma1_check(classic2(), p, 1.0);
        CHECK(r.degenerate);
        CHECK_FALSE(r.holds);
        CHECK(r.lhs == doctest::Approx(r.rhs));
        CHECK(r.margin == 0.0);
    }
    SUBCASE("decoupled block flagged on lemma 2") {
        GroundedLaplacian d;
        d.b.resize(2, 2);
        d.b << 2.0, 0.0, 0.0, 3.0;
        d.node_order = {1, 2};
        Partition p;
        p.gfl_idx = {0};
        p.gfm_idx = {1};
        const LemmaResult r = lemma2_check(d, p);
        CHECK(r.degenerate);
        CHECK_FALSE(r.holds);
        CHECK(r.margin == doctest::Approx(0.0));
    }
    SUBCASE("randomized harness passes on irreducible trials") {
        std::mt19937_64 rng(7);
        int done = 0;
        while (done < 100) {
            const GroundedLaplacian g = random_grounded_laplacian(rng);
            if (g.size() < 2) continue;
            const Partition p = random_partition(rng, g.size());
            const double b_eq = uniform_real(rng, 1e-3, 5.0);
            const LemmaResult l1 = lemma1_check(g, p, b_eq);
            const LemmaResult l2 = lemma2_check(g, p);
            CHECK(l1.holds);
            CHECK(l2.holds);
            ++done;
        }
    }
    SUBCASE("interlacing of extreme eigenvalues under elimination") {
        std::mt19937_64 rng(31);
        for (int t = 0; t < 50; ++t) {
            const GroundedLaplacian g = random_grounded_laplacian(rng);
            if (g.size() < 2) continue;
            const Partition p = random_partition(rng, g.size());
            const auto full = eig_sym(g.b);
            const auto red = eig_sym(schur_complement(g.b, p.gfl_idx));
            CHECK(red.lambdas(0) >= full.lambdas(0) - 1e-12);
            CHECK(red.lambdas(red.lambdas.size() - 1) <=
                  full.lambdas(full.lambdas.size() - 1) + 1e-12);
        }
    }
}
