#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <dde/engine.hpp>
#include <dde/mps.hpp>

using namespace dde;

namespace {

PauliSum chain_h(int n, std::uint64_t seed = 42) {
    return build_heisenberg(n, 0.1, 1.0, Boundary::Chain, seed);
}

Eigen::VectorXcd dense_two_bitstrings(int n, std::uint64_t b1, std::uint64_t b2, Complex c1,
                                      Complex c2) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(1LL << n);
    v(b1) += c1;
    v(b2) += c2;
    return v;
}

}  // namespace

TEST_CASE("mps_from_bitstrings and dense reconstruction") {
    const Complex c1 = std::sqrt(0.7), c2 = std::sqrt(0.3);
    for (int n : {2, 5, 12}) {
        const std::uint64_t b1 = 0b10110ULL & ((1ULL << n) - 1);
        const std::uint64_t b2 = b1 ^ (1ULL << (n - 1));
        const auto mps = mps_from_bitstrings(n, b1, b2, c1, c2);
        CHECK(mps.max_bond_dim() <= 2);
        const Eigen::VectorXcd dense = mps_dense(mps);
        CHECK((dense - dense_two_bitstrings(n, b1, b2, c1, c2)).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::abs(mps_overlap(mps, mps) - 1.0) < 1e-12);
    }

    // c2 = 0: product state, all bonds 1
    const auto prod = mps_from_bitstrings(6, 0b101101, 0, 1.0, 0.0);
    CHECK(prod.max_bond_dim() == 1);
    CHECK(std::abs(mps_dense(prod)(0b101101) - 1.0) < 1e-14);

    CHECK_THROWS_AS(mps_from_bitstrings(4, 1, 2, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(mps_from_bitstrings(4, 3, 3, c1, c2), std::invalid_argument);
}

TEST_CASE("canonicalize and overlap") {
    auto mps = mps_from_bitstrings(8, 17, 21, std::sqrt(0.7), std::sqrt(0.3));
    // scramble the norm, then restore it through canonicalization bookkeeping
    for (int s = 0; s < 2; ++s) mps.sites[3][s] *= 2.5;
    const Eigen::VectorXcd before = mps_dense(mps);
    canonicalize(mps);
    CHECK((mps_dense(mps) - before).cwiseAbs().maxCoeff() < 1e-12);
    // contraction of the site tensors alone (without norm_log) is 1
    MpsState bare = mps;
    bare.norm_log = 0.0;
    CHECK(std::abs(mps_overlap(bare, bare) - 1.0) < 1e-8);
}

TEST_CASE("tebd_evolve matches exact dense evolution") {
    const int n = 8;
    const auto H = chain_h(n);
    const auto hspec = diagonalize(H);
    const auto [b1, b2] = choose_bitstrings(H);
    const auto mps0 = mps_from_bitstrings(n, b1, b2, std::sqrt(0.7), std::sqrt(0.3));
    const Statevector psi0{n, mps_dense(mps0)};

    const TebdConfig cfg(0.5, 4096, 0.0);
    const auto evolved = tebd_evolve(mps0, H, 10.0, cfg);
    const Statevector exact = evolve_exact(psi0, hspec, 10.0);
    const Eigen::VectorXcd vd = mps_dense(evolved);
    CHECK(std::abs(vd.norm() - 1.0) < 1e-8);
    const double fid = std::norm(Complex(exact.amp.adjoint() * vd));
    CHECK(fid >= 1.0 - 1e-3);

    // second-order step: fidelity deficit at fixed horizon scales as dt^4,
    // and the 1e-6 target is reached by dt = 0.1
    const auto fine = tebd_evolve(mps0, H, 10.0, TebdConfig(0.1, 4096, 0.0));
    const double fid_fine = std::norm(Complex(exact.amp.adjoint() * mps_dense(fine)));
    CHECK(fid_fine >= 1.0 - 1e-6);
    CHECK((1.0 - fid) / std::max(1e-300, 1.0 - fid_fine) > 100.0);  // ~256 for exact dt^4

    // backward evolution undoes forward evolution
    const auto back = tebd_evolve(evolved, H, -10.0, cfg);
    CHECK(std::norm(Complex(psi0.amp.adjoint() * mps_dense(back))) > 1.0 - 1e-6);

    // t = 0 is the identity
    const auto same = tebd_evolve(mps0, H, 0.0, cfg);
    CHECK((mps_dense(same) - psi0.amp).cwiseAbs().maxCoeff() < 1e-14);

    CHECK_THROWS_AS(tebd_evolve(mps0, H, 0.3, cfg), std::invalid_argument);

    // hard truncation keeps bond dims capped and records the loss
    const TebdConfig tight(0.5, 2, 0.0);
    const auto trunc = tebd_evolve(mps0, H, 10.0, tight);
    CHECK(trunc.max_bond_dim() <= 2);
    CHECK(trunc.truncations > 0);
    CHECK(trunc.discarded_weight > 0.0);
}

TEST_CASE("mps_expectation matches dense expectation") {
    const int n = 8;
    const auto H = chain_h(n);
    const auto mps0 = mps_from_bitstrings(n, 0b10110101, 0b10110100, std::sqrt(0.7), std::sqrt(0.3));
    const TebdConfig cfg(0.5, 4096, 0.0);
    const auto a = tebd_evolve(mps0, H, 3.0, cfg);
    const auto b = tebd_evolve(mps0, H, 5.0, cfg);
    const Statevector da{n, mps_dense(a)}, db{n, mps_dense(b)};

    // <a|H|b> cross matrix element and <a|H|a> expectation vs dense oracle
    const Eigen::MatrixXcd Hd = H.dense();
    const Complex cross = mps_expectation(a, H, b);
    const Complex cross_dense = da.amp.adjoint() * Hd * db.amp;
    CHECK(std::abs(cross - cross_dense) < 1e-8);
    CHECK(std::abs(mps_expectation(a, H, a).real() - expectation(da, H)) < 1e-8);
    CHECK(std::abs(mps_expectation(a, H, a).imag()) < 1e-10);
    CHECK(std::abs(mps_overlap(a, b) - Complex(da.amp.adjoint() * db.amp)) < 1e-8);

    // constant terms ride along
    PauliSum Hc = H;
    Hc.add_constant(2.5);
    CHECK(std::abs(mps_expectation(a, Hc, b) - (cross_dense + 2.5 * Complex(da.amp.adjoint() * db.amp))) <
          1e-8);

    // single-site observable via the MPO path
    PauliSum Z3(n);
    Z3.add(1.0, PauliString::single('Z', 3));
    CHECK(std::abs(mps_expectation(a, Z3, a).real() - expectation(da, Z3)) < 1e-8);
}

TEST_CASE("choose_bitstrings") {
    // decoupled sites: each bit set against its field sign
    {
        PauliSum H(5);
        const double hs[5] = {0.4, -0.2, 1.1, -0.7, 0.3};
        for (int i = 0; i < 5; ++i) H.add(hs[i], PauliString::single('Z', i));
        const auto [b1, b2] = choose_bitstrings(H);
        for (int i = 0; i < 5; ++i) CHECK(static_cast<int>((b1 >> i) & 1) == (hs[i] > 0 ? 1 : 0));
        CHECK(std::popcount(b1 ^ b2) == 1);
        // the flipped bit is the one with the smallest |h|
        CHECK((b1 ^ b2) == (1ULL << 1));
    }

    // DP equals brute force on random chains
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL, 4ULL}) {
        const int n = 10;
        const auto H = build_heisenberg(n, 0.3, 1.0, Boundary::Chain, seed);
        std::vector<double> h(n, 0.0), K(n - 1, 0.0);
        for (const auto& t : H.terms()) {
            if (t.string.weight() == 1 && t.string.letter(t.string.first_site()) == 'Z')
                h[t.string.first_site()] += t.coeff;
            if (t.string.weight() == 2 && t.string.letter(t.string.first_site()) == 'Z' &&
                t.string.letter(t.string.last_site()) == 'Z')
                K[t.string.first_site()] += t.coeff;
        }
        auto diag_energy = [&](std::uint64_t b) {
            auto s = [&](int i) { return ((b >> i) & 1) ? -1.0 : 1.0; };
            double e = 0.0;
            for (int i = 0; i < n; ++i) e += h[i] * s(i);
            for (int i = 0; i + 1 < n; ++i) e += K[i] * s(i) * s(i + 1);
            return e;
        };
        std::uint64_t best = 0;
        for (std::uint64_t b = 1; b < (1ULL << n); ++b)
            if (diag_energy(b) < diag_energy(best)) best = b;
        const auto [b1, b2] = choose_bitstrings(H);
        CHECK(b1 == best);
        CHECK(std::popcount(b1 ^ b2) == 1);
        // b2 is the cheapest single-bit excitation
        double d2 = diag_energy(b2);
        for (int k = 0; k < n; ++k) CHECK(d2 <= diag_energy(b1 ^ (1ULL << k)) + 1e-12);
    }

    PauliSum ring = build_heisenberg(6, 0.1, 1.0, Boundary::Ring, 1);
    CHECK_THROWS_AS(choose_bitstrings(ring), std::invalid_argument);
}

TEST_CASE("spectroscopy") {
    const double T = 40.0, dt = 0.25;
    const int n = static_cast<int>(T / dt) + 1;
    std::vector<double> times(n);
    for (int i = 0; i < n; ++i) times[i] = i * dt;

    // single mode at +2.5
    std::vector<Complex> s1(n);
    for (int i = 0; i < n; ++i) s1[i] = std::polar(1.0, -2.5 * times[i]);
    const auto p1 = spectroscopy(times, s1);
    REQUIRE(!p1.empty());
    CHECK(std::abs(p1[0].frequency - 2.5) < M_PI / T);
    CHECK(p1[0].weight == doctest::Approx(1.0).epsilon(0.05));

    // two modes with 7:3 weights (negative energy included)
    std::vector<Complex> s2(n);
    for (int i = 0; i < n; ++i)
        s2[i] = 0.7 * std::polar(1.0, -1.0 * times[i]) + 0.3 * std::polar(1.0, 3.0 * times[i]);
    const auto p2 = spectroscopy(times, s2);
    REQUIRE(p2.size() >= 2);
    CHECK(std::abs(p2[0].frequency - 1.0) < M_PI / T);
    CHECK(std::abs(p2[1].frequency + 3.0) < M_PI / T);
    CHECK(p2[0].weight / p2[1].weight == doctest::Approx(7.0 / 3.0).epsilon(0.1));

    // non-uniform grid rejected
    std::vector<double> bad = times;
    bad[5] += 0.01;
    CHECK_THROWS_AS(spectroscopy(bad, s1), std::invalid_argument);

    // 12-qubit chain: dominant peak at the exact dominant eigenenergy
    const int N = 12;
    const auto H = chain_h(N);
    const auto hspec = diagonalize(H);
    const auto [b1, b2] = choose_bitstrings(H);
    const auto mps0 = mps_from_bitstrings(N, b1, b2, std::sqrt(0.7), std::sqrt(0.3));
    const TebdConfig cfg(0.25, 128, 1e-10);
    const double Ts = 60.0;
    const int ns = static_cast<int>(Ts / 0.25) + 1;
    std::vector<double> ts(ns);
    std::vector<Complex> overlaps(ns);
    MpsState phi = mps0;
    for (int i = 0; i < ns; ++i) {
        ts[i] = i * 0.25;
        overlaps[i] = mps_overlap(mps0, phi);
        if (i + 1 < ns) phi = tebd_evolve(phi, H, 0.25, cfg);
    }
    const auto peaks = spectroscopy(ts, overlaps);
    REQUIRE(!peaks.empty());
    const Eigen::VectorXcd c = hspec.eigenvectors.adjoint() * mps_dense(mps0);
    int kmax = 0;
    for (int k = 1; k < c.size(); ++k)
        if (std::norm(c(k)) > std::norm(c(kmax))) kmax = k;
    CHECK(std::abs(peaks[0].frequency - hspec.energies(kmax)) < M_PI / Ts);
}

TEST_CASE("correlators_from_mps matches the dense grid") {
    const int n = 12;
    const auto H = chain_h(n);
    const auto hspec = diagonalize(H);
    const auto [b1, b2] = choose_bitstrings(H);
    const auto mps0 = mps_from_bitstrings(n, b1, b2, std::sqrt(0.7), std::sqrt(0.3));
    const Statevector psi0{n, mps_dense(mps0)};
    const TimeGrid grid(5.0, 0.5);

    // entrywise 1e-3 against the dense grid needs a fine Trotter step: the A
    // deviation is roughly ||H|| times the dt^2 state error
    const auto dense_grid = compute_grid_exact(psi0, hspec, H, grid, true, nullptr, true);
    const TebdConfig cfg(0.025, 4096, 0.0);
    const auto mps_grid = correlators_from_mps(mps0, H, H, grid, cfg, true, true);

    CHECK(mps_grid.provenance.backend == "mps(4096)");
    CHECK((mps_grid.A - dense_grid.A).cwiseAbs().maxCoeff() <= 1e-3);
    CHECK((mps_grid.B - dense_grid.B).cwiseAbs().maxCoeff() <= 1e-3);
    for (int i = 0; i < grid.N_T; ++i) CHECK(std::abs(mps_grid.B(i, i) - 1.0) < 1e-8);

    // slashing chi cannot improve agreement with the dense grid
    const auto coarse = correlators_from_mps(mps0, H, H, grid, TebdConfig(0.025, 8, 0.0), true, true);
    CHECK((coarse.A - dense_grid.A).cwiseAbs().maxCoeff() >=
          (mps_grid.A - dense_grid.A).cwiseAbs().maxCoeff() - 1e-12);

    // non-dedup path (snapshot caching) agrees with the streaming dedup path;
    // A differs by the O(dt^2) commutator of O with the Trotterized step, B by
    // nothing (both paths contract powers of the same unitary circuit)
    const TimeGrid small(3.0, 0.5);
    const TebdConfig cfg2(0.25, 4096, 0.0);
    const auto g1 = correlators_from_mps(mps0, H, H, small, cfg2, true, true);
    const auto g2 = correlators_from_mps(mps0, H, H, small, cfg2, false);
    CHECK((g1.A - g2.A).cwiseAbs().maxCoeff() < 2e-3);
    CHECK((g1.B - g2.B).cwiseAbs().maxCoeff() < 1e-10);

    CHECK_THROWS_AS(correlators_from_mps(mps0, H, H, TimeGrid(10.0, 0.2), cfg2, true, true),
                    std::invalid_argument);
}

TEST_CASE("full dde pipeline through the mps backend") {
    const int n = 12;
    const auto H = chain_h(n);
    const auto hspec = diagonalize(H);
    const auto [b1, b2] = choose_bitstrings(H);
    const auto mps0 = mps_from_bitstrings(n, b1, b2, std::sqrt(0.7), std::sqrt(0.3));
    const Statevector psi0{n, mps_dense(mps0)};
    const TimeGrid grid(10.0, 0.5);

    const auto dense_grid = compute_grid_exact(psi0, hspec, H, grid, true, nullptr, true);
    const auto mps_grid =
        correlators_from_mps(mps0, H, H, grid, TebdConfig(0.25, 4096, 0.0), true, true);

    DdeConfig cfg;
    cfg.n_copies = 3;
    cfg.sigma = 2.0;
    cfg.n_mc = 20000;
    cfg.seed = 7;
    const auto e_dense = dde_estimate(dense_grid, cfg);
    const auto e_mps = dde_estimate(mps_grid, cfg);
    CHECK(std::abs(e_dense.value - e_mps.value) <= 1e-3);
}
