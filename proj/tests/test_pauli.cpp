#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <dde/dense.hpp>
#include <dde/pauli.hpp>

using namespace dde;

TEST_CASE("pauli string basics") {
    const auto p = PauliString::from_string("XYZI");
    CHECK(p.to_string(4) == "XYZI");
    CHECK(p.weight() == 3);
    CHECK(p.first_site() == 0);
    CHECK(p.last_site() == 2);
    CHECK(PauliString{}.is_identity());

    // commutation: X vs Z on the same site anticommute, on distinct sites commute
    CHECK(!PauliString::single('X', 0).commutes_with(PauliString::single('Z', 0)));
    CHECK(PauliString::single('X', 0).commutes_with(PauliString::single('Z', 1)));
    CHECK(PauliString::from_string("XX").commutes_with(PauliString::from_string("YY")));
}

TEST_CASE("heisenberg builder") {
    const auto H = build_heisenberg(4, 0.1, 1.0, Boundary::Ring, 7);
    CHECK(H.n_terms() == 16);  // 3N coupling + N field

    const auto H2 = build_heisenberg(4, 0.1, 1.0, Boundary::Ring, 7);
    REQUIRE(H2.n_terms() == H.n_terms());
    for (std::size_t i = 0; i < H.n_terms(); ++i) {
        CHECK(H.terms()[i].coeff == H2.terms()[i].coeff);
        CHECK(H.terms()[i].string == H2.terms()[i].string);
    }

    const auto Hz = build_heisenberg(4, 0.1, 0.0, Boundary::Ring, 99);
    for (int j = 0; j < 4; ++j)
        CHECK(Hz.coefficient(PauliString::single('Z', j)) == 0.0);

    const auto Hc = build_heisenberg(4, 0.1, 1.0, Boundary::Chain, 7);
    CHECK(Hc.n_terms() == 13);  // 3(N-1) + N

    CHECK_THROWS_AS(build_heisenberg(1, 1, 1, Boundary::Ring, 0), std::invalid_argument);
}

TEST_CASE("schwinger builder") {
    // N=2: H_ZZ outer sum is empty
    const auto H2 = build_schwinger(2, 1.0, 0.1, 0.5, 0.1);
    CHECK(H2.coefficient(PauliString::two('Z', 0, 'Z', 1)) == 0.0);

    // parameter zeroing: m=0, theta=0, w=0 kills the XX/YY sector
    const auto H0 = build_schwinger(4, 1.0, 0.0, 0.0, 0.0);
    for (int n = 0; n < 3; ++n) {
        CHECK(H0.coefficient(PauliString::two('X', n, 'X', n + 1)) == 0.0);
        CHECK(H0.coefficient(PauliString::two('Y', n, 'Y', n + 1)) == 0.0);
    }
    // H_Z staircase: -(J/2) [ sum over n=1 (Z_1) + n=3 (Z_1+Z_2+Z_3) ]
    CHECK(H0.coefficient(PauliString::single('Z', 0)) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(H0.coefficient(PauliString::single('Z', 1)) == doctest::Approx(-0.5).epsilon(1e-14));

    // 6-qubit instance against an independent by-hand expansion of the sums
    const int N = 6;
    const double J = 1.0, m = 0.1, theta = 0.5, w = 0.1;
    const auto H = build_schwinger(N, J, m, theta, w);
    // ZZ coefficient of Z_k Z_l equals (J/2) * #{n : max(k,l) <= n <= N-1} (1-based)
    for (int k = 1; k <= N; ++k) {
        for (int l = k + 1; l <= N; ++l) {
            const int count = std::max(0, (N - 1) - l + 1);
            CHECK(H.coefficient(PauliString::two('Z', k - 1, 'Z', l - 1)) ==
                  doctest::Approx(0.5 * J * count).epsilon(1e-14));
        }
    }
    for (int n = 1; n <= N - 1; ++n) {
        const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
        const double expect = 0.5 * J * (w - sgn * 0.5 * m * std::sin(theta));
        CHECK(H.coefficient(PauliString::two('X', n - 1, 'X', n)) ==
              doctest::Approx(expect).epsilon(1e-14));
        CHECK(H.coefficient(PauliString::two('Y', n - 1, 'Y', n)) ==
              doctest::Approx(expect).epsilon(1e-14));
    }
    for (int n = 1; n <= N; ++n) {
        const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
        double z = 0.5 * m * std::cos(theta) * sgn;
        for (int stair = 1; stair <= N - 1; ++stair)
            if (stair % 2 == 1 && n <= stair) z -= 0.5 * J;
        CHECK(H.coefficient(PauliString::single('Z', n - 1)) ==
              doctest::Approx(z).epsilon(1e-14));
    }
}

TEST_CASE("fermi-hubbard transcription") {
    const auto H = build_fermi_hubbard_2x2();
    CHECK(H.constant() == 12.0);
    CHECK(H.n_terms() == 28);
    CHECK(H.coefficient(PauliString::two('Z', 0, 'Z', 4)) == 3.0);
    CHECK(H.coefficient(PauliString::from_string("XZZX")) == -0.5);
}

TEST_CASE("hermiticity of dense matrices") {
    const auto H = build_heisenberg(5, 0.7, 1.3, Boundary::Ring, 21);
    const auto m = H.dense();
    CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);

    const auto S = build_schwinger(4, 1.0, 0.1, 0.5, 0.1);
    const auto ms = S.dense();
    CHECK((ms - ms.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("canonicalization: self-addition doubles coefficients") {
    auto H = build_heisenberg(4, 0.3, 0.9, Boundary::Ring, 3);
    const auto orig = H;
    H.add(orig);
    CHECK(H.n_terms() == orig.n_terms());
    for (std::size_t i = 0; i < H.n_terms(); ++i)
        CHECK(H.terms()[i].coeff == doctest::Approx(2.0 * orig.terms()[i].coeff));
    CHECK(H.constant() == doctest::Approx(2.0 * orig.constant()));
}

TEST_CASE("split_observable") {
    const auto H = build_fermi_hubbard_2x2();

    SUBCASE("O = H: commuting part commutes densely") {
        // String-level commutation is stricter than operator-level: some of
        // H's own terms land in perp (XX vs field Z), but the par part must
        // commute with H exactly.
        const auto [par, perp] = split_observable(H, H);
        const auto A = par.dense(), B = H.dense();
        CHECK((A * B - B * A).cwiseAbs().maxCoeff() <= 1e-10);
    }

    SUBCASE("O = H with an all-Z Hamiltonian is fully parallel") {
        PauliSum Hz(3);
        Hz.add(0.5, PauliString::single('Z', 0));
        Hz.add(-1.5, PauliString::two('Z', 1, 'Z', 2));
        const auto [par, perp] = split_observable(Hz, Hz);
        CHECK(perp.n_terms() == 0);
        CHECK(par.n_terms() == 2);
    }

    SUBCASE("Z against ZZ") {
        PauliSum O(2), Hz(2);
        O.add(1.0, PauliString::single('Z', 0));
        Hz.add(1.0, PauliString::two('Z', 0, 'Z', 1));
        const auto [par, perp] = split_observable(O, Hz);
        CHECK(par.n_terms() == 1);
        CHECK(perp.n_terms() == 0);
    }

    SUBCASE("X against Z") {
        PauliSum O(1), Hz(1);
        O.add(1.0, PauliString::single('X', 0));
        Hz.add(1.0, PauliString::single('Z', 0));
        const auto [par, perp] = split_observable(O, Hz);
        CHECK(par.n_terms() == 0);
        CHECK(perp.n_terms() == 1);
        CHECK(perp.coefficient(PauliString::single('X', 0)) == 1.0);
    }

    SUBCASE("commuting part commutes densely for a generic pair") {
        PauliSum O(8);
        O.add(0.8, PauliString::single('Z', 0));
        O.add(-0.3, PauliString::single('X', 2));
        O.add(0.5, PauliString::two('Z', 1, 'Z', 5));
        const auto [par, perp] = split_observable(O, H);
        const auto A = par.dense(), B = H.dense();
        CHECK((A * B - B * A).cwiseAbs().maxCoeff() <= 1e-10);
    }

    PauliSum bad(4);
    CHECK_THROWS_AS(split_observable(bad, H), std::invalid_argument);
}

TEST_CASE("basis_index maps qubit-0-first bitstrings") {
    CHECK(basis_index("1000") == 1);
    CHECK(basis_index("0001") == 8);
    CHECK(basis_index("10100101") == 165);
}
