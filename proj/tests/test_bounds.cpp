#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <dde/bounds.hpp>

using namespace dde;

namespace {
std::vector<double> random_dist(Rng& rng, int d) {
    std::vector<double> p(d);
    double s = 0.0;
    for (auto& x : p) {
        x = -std::log(rng.uniform() + 1e-300);
        s += x;
    }
    for (auto& x : p) x /= s;
    return p;
}
}  // namespace

TEST_CASE("renyi_entropy") {
    const double inf = std::numeric_limits<double>::infinity();

    SUBCASE("uniform gives ln d for every order") {
        const std::vector<double> u(8, 1.0 / 8.0);
        for (double a : {0.5, 2.0, 3.0, 10.0})
            CHECK(renyi_entropy(u, a) == doctest::Approx(std::log(8.0)).epsilon(1e-12));
        CHECK(renyi_entropy(u, inf) == doctest::Approx(std::log(8.0)).epsilon(1e-12));
    }

    SUBCASE("delta distribution gives 0") {
        const std::vector<double> d{1.0, 0.0, 0.0};
        CHECK(renyi_entropy(d, 2.0) == doctest::Approx(0.0));
        CHECK(renyi_entropy(d, inf) == doctest::Approx(0.0));
    }

    SUBCASE("H2 <= 2 H_inf and monotone non-increasing in a, random distributions") {
        Rng rng(77);
        for (int t = 0; t < 1000; ++t) {
            const auto p = random_dist(rng, 2 + int(rng.uniform_int(10)));
            const double h2 = renyi_entropy(p, 2.0);
            const double hi = renyi_entropy(p, inf);
            CHECK(h2 <= 2.0 * hi + 1e-12);
            double prev = renyi_entropy(p, 0.5);
            for (double a : {1.5, 2.0, 4.0, 16.0}) {
                const double h = renyi_entropy(p, a);
                CHECK(h <= prev + 1e-12);
                prev = h;
            }
            CHECK(hi <= prev + 1e-12);
        }
    }

    CHECK_THROWS_AS(renyi_entropy({0.5, 0.5}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(renyi_entropy({0.5, 0.5}, -1.0), std::invalid_argument);
}

TEST_CASE("spectral_gap") {
    const auto H = build_heisenberg(6, 0.2, 1.0, Boundary::Ring, 13);
    const auto spec = diagonalize(H);
    const int dim = 64;

    SUBCASE("two-state support") {
        Eigen::VectorXcd c = Eigen::VectorXcd::Zero(dim);
        c(5) = std::sqrt(0.7);
        c(20) = std::sqrt(0.3);
        const auto g = spectral_gap(spec, c);
        CHECK(!g.single_eigenstate);
        CHECK(!g.degenerate);
        CHECK(g.delta == doctest::Approx(std::abs(spec.energies(20) - spec.energies(5))));
    }

    SUBCASE("eigenstate input flags single-eigenstate") {
        Eigen::VectorXcd c = Eigen::VectorXcd::Zero(dim);
        c(9) = 1.0;
        CHECK(spectral_gap(spec, c).single_eigenstate);
    }

    SUBCASE("synthetic degeneracy flags and returns 0") {
        SpectralDecomposition s;
        s.energies.resize(4);
        s.energies << 0.0, 1.0, 1.0, 2.0;
        s.eigenvectors = Eigen::MatrixXcd::Identity(4, 4);
        Eigen::VectorXcd c(4);
        c << 0.0, std::sqrt(0.5), std::sqrt(0.5), 0.0;
        const auto g = spectral_gap(s, c);
        CHECK(g.degenerate);
        CHECK(g.delta == 0.0);
    }
}

TEST_CASE("lemma1_bounds") {
    const auto H = build_heisenberg(10, 0.1, 1.0, Boundary::Ring, 17);
    const auto spec = diagonalize(H);
    const int dim = 1 << 10;
    Eigen::VectorXcd c = Eigen::VectorXcd::Zero(dim);
    c(200) = std::sqrt(0.66);
    c(500) = std::sqrt(0.17);
    c(800) = std::sqrt(0.17);

    SUBCASE("eigenstate input gives an identically-zero remainder") {
        Eigen::VectorXcd ce = Eigen::VectorXcd::Zero(dim);
        ce(3) = 1.0;
        const auto rep = lemma1_bounds(ce, spec, 2.0);
        CHECK(rep.hs_actual == 0.0);
        CHECK(rep.trace_actual == 0.0);
        CHECK(rep.hs_bound == 0.0);
        CHECK(rep.single_eigenstate);
    }

    SUBCASE("sigma = 0 bound formula") {
        const auto rep = lemma1_bounds(c, spec, 0.0);
        CHECK(rep.hs_bound ==
              doctest::Approx(std::sqrt(1.0 - std::exp(-rep.h2))).epsilon(1e-12));
        CHECK(rep.hs_actual <= rep.hs_bound + 1e-12);
        CHECK(rep.trace_actual <= rep.trace_bound + 1e-12);
    }

    SUBCASE("actual <= bound across a sigma sweep, both norms non-increasing") {
        double prev_hs = 1e100, prev_tr = 1e100;
        for (int s = 1; s <= 10; ++s) {
            const auto rep = lemma1_bounds(c, spec, double(s));
            CHECK(rep.hs_actual <= rep.hs_bound + 1e-14);
            CHECK(rep.trace_actual <= rep.trace_bound + 1e-14);
            CHECK(rep.hs_actual <= prev_hs);
            CHECK(rep.trace_actual <= prev_tr);
            prev_hs = rep.hs_actual;
            prev_tr = rep.trace_actual;
        }
    }

    SUBCASE("support-block norms match the full-basis computation") {
        const auto Hs = build_heisenberg(4, 0.3, 1.0, Boundary::Ring, 5);
        const auto sp = diagonalize(Hs);
        Eigen::VectorXcd amp = 0.6 * sp.eigenvectors.col(1) + 0.8 * sp.eigenvectors.col(9);
        const Statevector psi{4, amp};
        const double sigma = 1.3;
        const auto rep = lemma1_bounds(sp.eigenvectors.adjoint() * amp, sp, sigma);
        // E in the eigenbasis from the analytic average, diagonal removed
        Eigen::MatrixXcd rho = sp.eigenvectors.adjoint() *
                               build_rho_bar_analytic(psi, sp, sigma) * sp.eigenvectors;
        rho -= rho.diagonal().asDiagonal().toDenseMatrix();
        CHECK(rep.hs_actual == doctest::Approx(rho.norm()).epsilon(1e-10));
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
        CHECK(rep.trace_actual ==
              doctest::Approx(es.eigenvalues().cwiseAbs().sum()).epsilon(1e-10));
    }

    SUBCASE("log hs_actual is affine in sigma^2 with super-exponential slope") {
        const auto rep1 = lemma1_bounds(c, spec, 1.0);
        const auto rep2 = lemma1_bounds(c, spec, 2.0);
        const auto rep3 = lemma1_bounds(c, spec, 3.0);
        const double s21 = (std::log(rep2.hs_actual) - std::log(rep1.hs_actual)) / (4.0 - 1.0);
        const double s32 = (std::log(rep3.hs_actual) - std::log(rep2.hs_actual)) / (9.0 - 4.0);
        const double delta = rep1.delta;
        CHECK(s21 <= -delta * delta / 4.0);
        CHECK(s32 <= -delta * delta / 4.0);
    }
}

TEST_CASE("lemma2_bound") {
    SUBCASE("printed arithmetic anchor") {
        const PopulationVector pop({0.66, 0.17, 0.17}, 0);
        CHECK(lemma2_bound(pop, 1) == doctest::Approx(2.0 * (1.0 / 0.66 - 1.0)).epsilon(1e-12));
        CHECK(lemma2_bound(pop, 1) == doctest::Approx(1.0303).epsilon(1e-4));
    }

    SUBCASE("pure dominant population gives 0") {
        const PopulationVector pop({1.0, 0.0}, 0);
        CHECK(lemma2_bound(pop, 3) == 0.0);
    }

    SUBCASE("dominates the true bias of a diagonal state, n = 1..6") {
        // diag(p) on two qubits with a sub-unit-norm observable
        const std::vector<double> p{0.66, 0.17, 0.12, 0.05};
        const PopulationVector pop(p, 0);
        Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(4, 4);
        for (int k = 0; k < 4; ++k) rho(k, k) = p[k];
        PauliSum O(2);
        O.add(0.5, PauliString::single('Z', 0));
        O.add(0.3, PauliString::single('Z', 1));
        const double truth = O.dense()(0, 0).real();
        for (int n = 1; n <= 6; ++n) {
            const double bias = std::abs(vd_oracle(rho, O, n) - truth);
            CHECK(bias <= lemma2_bound(pop, n));
        }
    }
}

TEST_CASE("theorem1_bound and validity") {
    const PopulationVector pop({0.66, 0.17, 0.17}, 0);

    SUBCASE("reduces to lemma2 as sigma grows") {
        const double b = theorem1_bound(pop, 3, 1.0, 1e6, 2.0, 1.5);
        CHECK(b == doctest::Approx(lemma2_bound(pop, 3)).epsilon(1e-12));
    }

    SUBCASE("second term is linear in n") {
        const double t1 = theorem1_bound(pop, 1, 1.0, 1.0, 2.0, 1.5) - lemma2_bound(pop, 1);
        const double t3 = theorem1_bound(pop, 3, 1.0, 1.0, 2.0, 1.5) - lemma2_bound(pop, 3);
        CHECK(t3 == doctest::Approx(3.0 * t1).epsilon(1e-12));
    }

    SUBCASE("oracle bias respects the bound where the validity condition holds") {
        const auto H = build_heisenberg(10, 0.1, 1.0, Boundary::Ring, 17);
        const auto spec = diagonalize(H);
        const int dim = 1 << 10;
        Eigen::VectorXcd c = Eigen::VectorXcd::Zero(dim);
        c(200) = std::sqrt(0.66);
        c(500) = std::sqrt(0.17);
        c(800) = std::sqrt(0.17);
        const Statevector psi{10, spec.eigenvectors * c};
        PauliSum O(10);
        O.add(0.5, PauliString::single('Z', 0));
        O.add(0.3, PauliString::single('X', 4));
        const double o_norm = operator_norm_inf(O);
        Statevector target{10, spec.eigenvectors.col(200)};
        const double truth = expectation(target, O);
        int checked = 0;
        for (double sigma : {2.0, 4.0, 8.0}) {
            const auto rep = lemma1_bounds(c, spec, sigma);
            const auto rho = build_rho_bar_analytic(psi, spec, sigma);
            for (int n = 1; n <= 4; ++n) {
                if (!theorem1_valid(rep.e_l1, 0.66, n)) continue;
                const double bias = std::abs(vd_oracle(rho, O, n) - truth);
                CHECK(bias <= theorem1_bound(pop, n, rep.delta, sigma, rep.c_l1, o_norm));
                ++checked;
            }
        }
        CHECK(checked >= 8);  // the sweep must actually exercise the bound
    }
}

TEST_CASE("resource_estimate") {
    const PopulationVector pop({0.9, 0.06, 0.04}, 0);
    const double delta = 1.0, c_l1 = 1.2, o_norm = 1.0;

    SUBCASE("logarithmic growth in 1/Q") {
        const int n1 = resource_estimate(0.01, pop, delta, c_l1, o_norm).n;
        const int n2 = resource_estimate(0.005, pop, delta, c_l1, o_norm).n;
        CHECK(n2 >= n1);
        CHECK(n2 - n1 <= 2);
    }

    SUBCASE("plug-back self-consistency") {
        for (double Q : {0.05, 0.01, 0.001}) {
            const auto r = resource_estimate(Q, pop, delta, c_l1, o_norm);
            CHECK(theorem1_bound(pop, r.n, delta, r.sigma, c_l1, o_norm) <= Q);
        }
    }

    SUBCASE("dominant population near 1 needs a single copy") {
        const PopulationVector pure({1.0, 0.0}, 0);
        CHECK(resource_estimate(0.01, pure, delta, c_l1, o_norm).n == 1);
    }

    SUBCASE("p_q <= 1/2 is rejected") {
        const PopulationVector bad({0.4, 0.6}, 0);
        CHECK_THROWS(resource_estimate(0.01, bad, delta, c_l1, o_norm));
    }
}

TEST_CASE("mom_sample_complexity formulas") {
    CHECK(mom_sample_complexity(0.1, std::exp(-1.0), 0.0, 1.0).first == 8);
    CHECK(mom_sample_complexity(0.1, 0.05, 0.0, 1.0).second == 400);
    const auto a = mom_sample_complexity(0.1, 0.05, 1.0, 1.0).second;
    const auto b = mom_sample_complexity(0.05, 0.05, 1.0, 1.0).second;
    CHECK(b == 4 * a);
}

TEST_CASE("shot_complexity") {
    SUBCASE("pure dominant state costs only the shot-noise factor") {
        const PopulationVector pure({1.0, 0.0}, 0);
        CHECK(shot_complexity(pure, 0.01, 0.1) == doctest::Approx(100.0));
    }

    SUBCASE("upper-bounds the trace-power overhead on a dense fixture") {
        const std::vector<double> p{0.8, 0.15, 0.05};
        const PopulationVector pop(p, 0);
        Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(4, 4);
        for (int k = 0; k < 3; ++k) rho(k, k) = p[k];
        const double eps = 0.1, Q = 0.01;
        // recover the internal n from the returned value
        const double val = shot_complexity(pop, Q, eps);
        const int n = static_cast<int>(std::llround(std::log(val * eps * eps) /
                                                    (-2.0 * std::log(0.8))));
        Eigen::MatrixXcd pw = Eigen::MatrixXcd::Identity(4, 4);
        for (int k = 0; k < n; ++k) pw = pw * rho;
        const double tr_overhead = 1.0 / std::norm(pw.trace().real()) / (eps * eps);
        CHECK(val >= tr_overhead);
    }

    SUBCASE("smaller dominant population costs more") {
        const PopulationVector a({0.9, 0.1}, 0), b({0.7, 0.3}, 0);
        CHECK(shot_complexity(b, 0.01, 0.1) >= shot_complexity(a, 0.01, 0.1));
    }
}
