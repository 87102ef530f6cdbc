#pragma once

#include <bit>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "dde/rng.hpp"

namespace dde {

using Complex = std::complex<double>;

// Pauli string on up to 64 qubits, stored as symplectic bit pairs:
// X sites set x-bit, Z sites set z-bit, Y sites set both. Qubit j is bit j.
struct PauliString {
    std::uint64_t x = 0;
    std::uint64_t z = 0;

    bool operator==(const PauliString&) const = default;

    bool is_identity() const { return x == 0 && z == 0; }

    int weight() const { return std::popcount(x | z); }

    std::uint64_t support() const { return x | z; }

    // First and last non-identity site; valid only for non-identity strings.
    int first_site() const { return std::countr_zero(support()); }
    int last_site() const { return 63 - std::countl_zero(support()); }

    // Two strings commute iff the symplectic product is even.
    bool commutes_with(const PauliString& o) const {
        return ((std::popcount(x & o.z) + std::popcount(z & o.x)) & 1) == 0;
    }

    char letter(int q) const {
        const bool bx = (x >> q) & 1, bz = (z >> q) & 1;
        return bx ? (bz ? 'Y' : 'X') : (bz ? 'Z' : 'I');
    }

    std::string to_string(int n_qubits) const {
        std::string s(n_qubits, 'I');
        for (int q = 0; q < n_qubits; ++q) s[q] = letter(q);
        return s;
    }

    static PauliString from_string(const std::string& s) {
        if (s.size() > 64) throw std::invalid_argument("PauliString: more than 64 qubits");
        PauliString p;
        for (std::size_t q = 0; q < s.size(); ++q) {
            switch (s[q]) {
                case 'I': break;
                case 'X': p.x |= 1ULL << q; break;
                case 'Y': p.x |= 1ULL << q; p.z |= 1ULL << q; break;
                case 'Z': p.z |= 1ULL << q; break;
                default: throw std::invalid_argument("PauliString: bad letter");
            }
        }
        return p;
    }

    static PauliString single(char letter, int q) {
        PauliString p;
        switch (letter) {
            case 'X': p.x = 1ULL << q; break;
            case 'Y': p.x = 1ULL << q; p.z = 1ULL << q; break;
            case 'Z': p.z = 1ULL << q; break;
            default: throw std::invalid_argument("PauliString::single: bad letter");
        }
        return p;
    }

    static PauliString two(char l1, int q1, char l2, int q2) {
        PauliString p = single(l1, q1);
        const PauliString o = single(l2, q2);
        p.x |= o.x;
        p.z |= o.z;
        return p;
    }
};

struct PauliStringHash {
    std::size_t operator()(const PauliString& p) const {
        std::uint64_t h = p.x * 0x9e3779b97f4a7c15ULL;
        h ^= p.z + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

// Phase of P|b> = phase * |b ^ x>: i^{#Y} * (-1)^{popcount(b & z)}.
inline Complex pauli_phase(const PauliString& p, std::uint64_t basis) {
    static constexpr Complex kPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    const int ny = std::popcount(p.x & p.z);
    Complex ph = kPow[ny & 3];
    if (std::popcount(basis & p.z) & 1) ph = -ph;
    return ph;
}

// Hermitian operator as a real-weighted sum of Pauli strings. The identity
// coefficient is kept in `constant` and never appears in `terms`. Term order
// is builder insertion order and is frozen: first-order Trotterization
// iterates terms in exactly this order. Duplicate strings merge into the
// first occurrence by coefficient addition.
class PauliSum {
public:
    struct Term {
        double coeff;
        PauliString string;
    };

    explicit PauliSum(int n_qubits) : n_qubits_(n_qubits) {
        if (n_qubits < 1 || n_qubits > 64)
            throw std::invalid_argument("PauliSum: qubit count out of range");
    }

    int n_qubits() const { return n_qubits_; }
    double constant() const { return constant_; }
    const std::vector<Term>& terms() const { return terms_; }
    std::size_t n_terms() const { return terms_.size(); }

    void add(double coeff, const PauliString& s) {
        if (s.is_identity()) {
            constant_ += coeff;
            return;
        }
        if (s.support() >> n_qubits_)
            throw std::invalid_argument("PauliSum::add: string exceeds qubit count");
        auto it = index_.find(s);
        if (it == index_.end()) {
            index_.emplace(s, terms_.size());
            terms_.push_back({coeff, s});
        } else {
            terms_[it->second].coeff += coeff;
        }
    }

    void add_constant(double c) { constant_ += c; }

    void add(const PauliSum& other) {
        if (other.n_qubits_ != n_qubits_)
            throw std::invalid_argument("PauliSum::add: qubit count mismatch");
        constant_ += other.constant_;
        for (const auto& t : other.terms_) add(t.coeff, t.string);
    }

    double coefficient(const PauliString& s) const {
        auto it = index_.find(s);
        return it == index_.end() ? 0.0 : terms_[it->second].coeff;
    }

    // l1 norm of the non-identity coefficient vector.
    double coeff_l1() const {
        double s = 0.0;
        for (const auto& t : terms_) s += std::abs(t.coeff);
        return s;
    }

    // Dense matrix; one non-zero per column per term.
    Eigen::MatrixXcd dense() const {
        if (n_qubits_ > 14) throw std::invalid_argument("PauliSum::dense: > 14 qubits");
        const std::uint64_t dim = 1ULL << n_qubits_;
        Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
        for (std::uint64_t b = 0; b < dim; ++b) m(b, b) += constant_;
        for (const auto& t : terms_) {
            for (std::uint64_t b = 0; b < dim; ++b) {
                m(b ^ t.string.x, b) += t.coeff * pauli_phase(t.string, b);
            }
        }
        return m;
    }

    std::string to_text() const {
        std::string out;
        out += "n_qubits " + std::to_string(n_qubits_) + "\n";
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", constant_);
        out += std::string("constant ") + buf + "\n";
        for (const auto& t : terms_) {
            std::snprintf(buf, sizeof(buf), "%.17g", t.coeff);
            out += std::string(buf) + " " + t.string.to_string(n_qubits_) + "\n";
        }
        return out;
    }

private:
    int n_qubits_;
    double constant_ = 0.0;
    std::vector<Term> terms_;
    std::unordered_map<PauliString, std::size_t, PauliStringHash> index_;
};

enum class Boundary { Ring, Chain };

// Heisenberg chain/ring with uniform coupling J and random fields h_j drawn
// i.i.d. uniform on [-h, h] from the seeded generator. Pauli letters are bare
// Paulis (no spin-1/2 factors). Field terms are kept even when their
// coefficient is zero so the term count is input-independent.
inline PauliSum build_heisenberg(int n_qubits, double J, double h, Boundary boundary,
                                 std::uint64_t seed) {
    if (n_qubits < 2) throw std::invalid_argument("build_heisenberg: n_qubits < 2");
    if (h < 0) throw std::invalid_argument("build_heisenberg: h < 0");
    PauliSum H(n_qubits);
    const int n_bonds = boundary == Boundary::Ring ? n_qubits : n_qubits - 1;
    for (int j = 0; j < n_bonds; ++j) {
        const int k = (j + 1) % n_qubits;
        H.add(J, PauliString::two('X', j, 'X', k));
        H.add(J, PauliString::two('Y', j, 'Y', k));
        H.add(J, PauliString::two('Z', j, 'Z', k));
    }
    Rng rng(seed);
    for (int j = 0; j < n_qubits; ++j) {
        const double hj = h == 0.0 ? 0.0 : rng.uniform(-h, h);
        H.add(hj, PauliString::single('Z', j));
    }
    return H;
}

// Lattice Schwinger model in its spin formulation,
// H = H_ZZ + H_pm + H_Z with the standard three sums. Site indices below are
// 1-based inside the loops to keep the (-1)^n and (n mod 2) factors literal.
inline PauliSum build_schwinger(int n_qubits, double J, double m, double theta, double w) {
    if (n_qubits < 2) throw std::invalid_argument("build_schwinger: n_qubits < 2");
    const int N = n_qubits;
    PauliSum H(N);
    // H_ZZ = J/2 sum_{n=2}^{N-1} sum_{1<=k<l<=n} Z_k Z_l
    for (int n = 2; n <= N - 1; ++n)
        for (int k = 1; k < n; ++k)
            for (int l = k + 1; l <= n; ++l)
                H.add(0.5 * J, PauliString::two('Z', k - 1, 'Z', l - 1));
    // H_pm = J/2 sum_{n=1}^{N-1} (w - (-1)^n (m/2) sin(theta)) [XX + YY]
    for (int n = 1; n <= N - 1; ++n) {
        const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
        const double c = 0.5 * J * (w - sgn * 0.5 * m * std::sin(theta));
        H.add(c, PauliString::two('X', n - 1, 'X', n));
        H.add(c, PauliString::two('Y', n - 1, 'Y', n));
    }
    // H_Z = (m cos(theta)/2) sum_n (-1)^n Z_n - J/2 sum_{n=1}^{N-1} (n mod 2) sum_{l<=n} Z_l
    for (int n = 1; n <= N; ++n) {
        const double sgn = (n % 2 == 0) ? 1.0 : -1.0;
        H.add(0.5 * m * std::cos(theta) * sgn, PauliString::single('Z', n - 1));
    }
    for (int n = 1; n <= N - 1; ++n) {
        if (n % 2 == 0) continue;
        for (int l = 1; l <= n; ++l) H.add(-0.5 * J, PauliString::single('Z', l - 1));
    }
    return H;
}

// Jordan-Wigner transformed 2x2 periodic Fermi-Hubbard model (t = 1, U = 12)
// on 8 qubits, transcribed term by term. Qubit 1 in the displayed operator is
// qubit 0 here.
inline PauliSum build_fermi_hubbard_2x2() {
    PauliSum H(8);
    H.add_constant(12.0);
    auto XX = [&](int a, int b) { H.add(-0.5, PauliString::two('X', a - 1, 'X', b - 1)); };
    auto YY = [&](int a, int b) { H.add(-0.5, PauliString::two('Y', a - 1, 'Y', b - 1)); };
    XX(1, 2); XX(2, 3); XX(3, 4); XX(5, 6); XX(6, 7); XX(7, 8);
    YY(1, 2); YY(2, 3); YY(3, 4); YY(5, 6); YY(6, 7); YY(7, 8);
    H.add(-3.0, PauliString::single('Z', 0));
    H.add(-3.0, PauliString::single('Z', 1));
    H.add(-3.0, PauliString::single('Z', 2));
    H.add(-0.5, PauliString::from_string("XZZX"));
    H.add(-0.5, PauliString::from_string("YZZY"));
    H.add(-3.0, PauliString::single('Z', 3));
    H.add(-3.0, PauliString::single('Z', 4));
    H.add(3.0, PauliString::two('Z', 0, 'Z', 4));
    H.add(-3.0, PauliString::single('Z', 5));
    H.add(3.0, PauliString::two('Z', 1, 'Z', 5));
    H.add(-3.0, PauliString::single('Z', 6));
    H.add(3.0, PauliString::two('Z', 2, 'Z', 6));
    H.add(-0.5, PauliString::from_string("IIIIXZZX"));
    H.add(-0.5, PauliString::from_string("IIIIYZZY"));
    H.add(-3.0, PauliString::single('Z', 7));
    H.add(3.0, PauliString::two('Z', 3, 'Z', 7));
    return H;
}

// Splits O into the part whose strings commute with every term string of H
// (string-level commutation) and the remainder. O = O_par + O_perp term by
// term; the identity constant goes to O_par.
inline std::pair<PauliSum, PauliSum> split_observable(const PauliSum& O, const PauliSum& H) {
    if (O.n_qubits() != H.n_qubits())
        throw std::invalid_argument("split_observable: qubit count mismatch");
    PauliSum par(O.n_qubits()), perp(O.n_qubits());
    par.add_constant(O.constant());
    for (const auto& t : O.terms()) {
        bool commutes = true;
        for (const auto& ht : H.terms()) {
            if (!t.string.commutes_with(ht.string)) {
                commutes = false;
                break;
            }
        }
        (commutes ? par : perp).add(t.coeff, t.string);
    }
    return {par, perp};
}

// Basis index for a bitstring written qubit-0-first ("10100101" sets qubit 0).
inline std::uint64_t basis_index(const std::string& bits) {
    std::uint64_t idx = 0;
    for (std::size_t q = 0; q < bits.size(); ++q) {
        if (bits[q] == '1') idx |= 1ULL << q;
        else if (bits[q] != '0') throw std::invalid_argument("basis_index: bad bitstring");
    }
    return idx;
}

}  // namespace dde
