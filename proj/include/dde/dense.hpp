#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "dde/pauli.hpp"
#include "dde/rng.hpp"

#include <lapacke.h>

namespace dde {

constexpr int kDenseQubitCap = 14;

struct Statevector {
    int n_qubits = 0;
    Eigen::VectorXcd amp;

    Statevector() = default;
    Statevector(int n, Eigen::VectorXcd a) : n_qubits(n), amp(std::move(a)) {
        if (amp.size() != (1LL << n)) throw std::invalid_argument("Statevector: bad dimension");
    }

    static Statevector basis(int n_qubits, std::uint64_t index) {
        Eigen::VectorXcd a = Eigen::VectorXcd::Zero(1LL << n_qubits);
        a(index) = 1.0;
        return {n_qubits, std::move(a)};
    }

    double norm() const { return amp.norm(); }

    void normalize() { amp /= amp.norm(); }
};

inline Complex inner_product(const Statevector& a, const Statevector& b) {
    if (a.n_qubits != b.n_qubits) throw std::invalid_argument("inner_product: dimension mismatch");
    return a.amp.dot(b.amp);  // Eigen dot conjugates the left argument
}

// out += coeff * P |in>
inline void accumulate_pauli(const PauliString& p, Complex coeff, const Eigen::VectorXcd& in,
                             Eigen::VectorXcd& out) {
    const std::uint64_t dim = in.size();
    for (std::uint64_t b = 0; b < dim; ++b) {
        out(b ^ p.x) += coeff * pauli_phase(p, b) * in(b);
    }
}

inline Eigen::VectorXcd apply_pauli_sum(const PauliSum& O, const Eigen::VectorXcd& in) {
    Eigen::VectorXcd out = O.constant() * in;
    for (const auto& t : O.terms()) accumulate_pauli(t.string, t.coeff, in, out);
    return out;
}

inline double expectation(const Statevector& state, const PauliSum& O) {
    if (O.n_qubits() != state.n_qubits)
        throw std::invalid_argument("expectation: dimension mismatch");
    Complex acc = O.constant() * state.amp.squaredNorm();
    for (const auto& t : O.terms()) {
        Complex term = 0.0;
        const std::uint64_t dim = state.amp.size();
        for (std::uint64_t b = 0; b < dim; ++b) {
            term += std::conj(state.amp(b ^ t.string.x)) * pauli_phase(t.string, b) * state.amp(b);
        }
        acc += t.coeff * term;
    }
    if (std::abs(acc.imag()) > 1e-10)
        throw std::runtime_error("expectation: imaginary residual above 1e-10");
    return acc.real();
}

// In-place exp(-i angle P) |psi> = cos(angle) psi - i sin(angle) P psi,
// restricted to basis states whose bits match `mask_value` under `mask`
// (mask = 0 applies everywhere; used for ancilla-controlled rotations).
inline void apply_pauli_rotation(Eigen::Ref<Eigen::VectorXcd> amp, const PauliString& p,
                                 double angle, std::uint64_t mask = 0,
                                 std::uint64_t mask_value = 0) {
    const double c = std::cos(angle), s = std::sin(angle);
    const Complex mis(0.0, -s);
    const std::uint64_t dim = amp.size();
    if (p.x == 0) {
        // Diagonal string: amp(b) *= c - i s * (+-1)
        for (std::uint64_t b = 0; b < dim; ++b) {
            if ((b & mask) != mask_value) continue;
            const double sign = (std::popcount(b & p.z) & 1) ? -1.0 : 1.0;
            amp(b) *= Complex(c, -s * sign);
        }
        return;
    }
    for (std::uint64_t b = 0; b < dim; ++b) {
        if (b > (b ^ p.x)) continue;  // visit each flip pair once
        if ((b & mask) != mask_value) continue;
        const std::uint64_t b2 = b ^ p.x;
        const Complex ph = pauli_phase(p, b);    // P|b>  = ph  |b2>
        const Complex ph2 = pauli_phase(p, b2);  // P|b2> = ph2 |b>
        const Complex a1 = amp(b), a2 = amp(b2);
        amp(b) = c * a1 + mis * ph2 * a2;
        amp(b2) = c * a2 + mis * ph * a1;
    }
}

inline void apply_single_qubit_pauli(Eigen::Ref<Eigen::VectorXcd> amp, char letter, int q) {
    const PauliString p = PauliString::single(letter, q);
    const std::uint64_t dim = amp.size();
    if (p.x == 0) {
        for (std::uint64_t b = 0; b < dim; ++b)
            if ((b >> q) & 1) amp(b) = -amp(b);
        return;
    }
    for (std::uint64_t b = 0; b < dim; ++b) {
        const std::uint64_t b2 = b ^ p.x;
        if (b > b2) continue;
        const Complex a1 = amp(b), a2 = amp(b2);
        amp(b) = pauli_phase(p, b2) * a2;
        amp(b2) = pauli_phase(p, b) * a1;
    }
}

struct SpectralDecomposition {
    Eigen::VectorXd energies;     // ascending, includes the constant shift
    Eigen::MatrixXcd eigenvectors;  // column k pairs with energies(k)

    int n_qubits() const {
        int n = 0;
        while ((1LL << n) < energies.size()) ++n;
        return n;
    }
};

// Full dense Hermitian eigensolve through LAPACK. Real-symmetric operators
// (no net imaginary matrix elements) take the faster dsyevd path.
inline SpectralDecomposition diagonalize(const PauliSum& H) {
    if (H.n_qubits() > kDenseQubitCap)
        throw std::runtime_error("diagonalize: dense cap of 14 qubits exceeded");
    Eigen::MatrixXcd m = H.dense();
    const lapack_int dim = static_cast<lapack_int>(m.rows());
    SpectralDecomposition out;
    out.energies.resize(dim);

    bool real_symmetric = true;
    for (const auto& t : H.terms()) {
        if (std::popcount(t.string.x & t.string.z) & 1) {  // odd Y count
            real_symmetric = false;
            break;
        }
    }
    if (real_symmetric) {
        Eigen::MatrixXd a = m.real();
        const lapack_int info = LAPACKE_dsyev(LAPACK_COL_MAJOR, 'V', 'L', dim, a.data(), dim,
                                              out.energies.data());
        if (info != 0) throw std::runtime_error("diagonalize: dsyev failed");
        out.eigenvectors = a.cast<Complex>();
    } else {
        const lapack_int info = LAPACKE_zheev(LAPACK_COL_MAJOR, 'V', 'L', dim,
                                              reinterpret_cast<lapack_complex_double*>(m.data()),
                                              dim, out.energies.data());
        if (info != 0) throw std::runtime_error("diagonalize: zheev failed");
        out.eigenvectors = std::move(m);
    }
    return out;
}

inline Statevector evolve_exact(const Statevector& state, const SpectralDecomposition& spec,
                                double t) {
    if (state.amp.size() != spec.energies.size())
        throw std::invalid_argument("evolve_exact: dimension mismatch");
    Eigen::VectorXcd c = spec.eigenvectors.adjoint() * state.amp;
    for (Eigen::Index k = 0; k < c.size(); ++k)
        c(k) *= std::polar(1.0, -t * spec.energies(k));
    return {state.n_qubits, spec.eigenvectors * c};
}

// Per-rotation depolarizing model: after each Pauli-string rotation, the
// first and last sites of the string's support each independently receive a
// uniformly random Pauli from {X, Y, Z} with probability gamma (a single site
// for weight-1 strings). In controlled evolutions the ancilla receives an
// independent event with the same probability when applies_to_ancilla is set.
struct NoiseModel {
    double gamma = 0.0;
    bool applies_to_ancilla = true;

    NoiseModel() = default;
    NoiseModel(double g, bool anc = true) : gamma(g), applies_to_ancilla(anc) {
        if (g < 0.0 || g > 1.0) throw std::invalid_argument("NoiseModel: gamma outside [0,1]");
    }
};

struct EvolveStats {
    std::int64_t rotations = 0;      // rotation gates executed
    std::int64_t noise_sites = 0;    // endpoint/ancilla opportunities sampled
    std::int64_t noise_events = 0;   // Pauli insertions actually applied
};

namespace detail {
inline void maybe_depolarize(Eigen::VectorXcd& amp, int q, double gamma, Rng& rng,
                             EvolveStats* stats) {
    if (stats) ++stats->noise_sites;
    if (gamma <= 0.0 || !rng.bernoulli(gamma)) return;
    static constexpr char kPaulis[3] = {'X', 'Y', 'Z'};
    apply_single_qubit_pauli(amp, kPaulis[rng.uniform_int(3)], q);
    if (stats) ++stats->noise_events;
}

// One rotation gate exp(-i coeff * tau * P), plus sampled noise events.
inline void noisy_rotation(Eigen::VectorXcd& amp, const PauliString& p, double angle,
                           const NoiseModel* noise, Rng* rng, EvolveStats* stats,
                           std::uint64_t ctrl_mask = 0, std::uint64_t ctrl_value = 0,
                           int ancilla = -1) {
    apply_pauli_rotation(amp, p, angle, ctrl_mask, ctrl_value);
    if (stats) ++stats->rotations;
    if (!noise || noise->gamma <= 0.0 || !rng) return;
    const int i = p.first_site();
    const int j = p.last_site();
    maybe_depolarize(amp, i, noise->gamma, *rng, stats);
    if (j != i) maybe_depolarize(amp, j, noise->gamma, *rng, stats);
    if (ancilla >= 0 && noise->applies_to_ancilla)
        maybe_depolarize(amp, ancilla, noise->gamma, *rng, stats);
}
}  // namespace detail

// First-order Trotter evolution: ( prod_j exp(-i nu_j P_j t / M) )^M in the
// PauliSum's frozen term order. The identity constant contributes only a
// global phase and is skipped.
inline Statevector evolve_trotter1(const Statevector& state, const PauliSum& H, double t, int M,
                                   const NoiseModel* noise = nullptr, Rng* rng = nullptr,
                                   EvolveStats* stats = nullptr) {
    if (M < 1) throw std::invalid_argument("evolve_trotter1: M < 1");
    if (H.n_qubits() != state.n_qubits)
        throw std::invalid_argument("evolve_trotter1: dimension mismatch");
    Statevector out = state;
    const double tau = t / M;
    const bool noisy = noise && noise->gamma > 0.0;
    for (int step = 0; step < M; ++step) {
        for (const auto& term : H.terms()) {
            detail::noisy_rotation(out.amp, term.string, term.coeff * tau,
                                   noisy ? noise : nullptr, rng, stats);
        }
    }
    return out;
}

enum class MeasurementBasis { X, Y };

namespace detail {
// Controlled Trotter evolution of duration t (a multiple of dt), conditioned
// on the ancilla bit. Negative durations apply the exact adjoint of the
// forward circuit (reversed term order), so equal forward/backward segments
// cancel identically.
inline void controlled_trotter(Eigen::VectorXcd& amp, const PauliSum& H, double t, double dt,
                               int M, int ancilla, const NoiseModel* noise, Rng* rng,
                               EvolveStats* stats) {
    const double steps_real = std::abs(t) / dt;
    const int n_steps = static_cast<int>(std::llround(steps_real));
    if (std::abs(steps_real - n_steps) > 1e-9)
        throw std::invalid_argument("controlled_trotter: t not on the dt grid");
    const std::uint64_t mask = 1ULL << ancilla;
    const double tau = dt / M;
    const auto& terms = H.terms();
    for (int step = 0; step < n_steps * M; ++step) {
        if (t >= 0) {
            for (std::size_t j = 0; j < terms.size(); ++j)
                noisy_rotation(amp, terms[j].string, terms[j].coeff * tau, noise, rng, stats,
                               mask, mask, ancilla);
        } else {
            for (std::size_t j = terms.size(); j-- > 0;)
                noisy_rotation(amp, terms[j].string, -terms[j].coeff * tau, noise, rng, stats,
                               mask, mask, ancilla);
        }
    }
}
}  // namespace detail

// One shot of the ancilla-controlled Hadamard-test circuit on N+1 dense
// qubits. The sample's expectation is Re (X basis) or Im (Y basis) of
// <psi(t)| P |psi(t')> for the observable string P (B-type entry when absent).
// Any observable coefficient is the caller's to apply to the returned sample.
inline int hadamard_test_trajectory(const Statevector& initial, const PauliSum& H,
                                    const std::optional<PauliString>& obs, double t,
                                    double t_prime, double dt, int M, const NoiseModel& noise,
                                    MeasurementBasis basis, Rng& rng,
                                    EvolveStats* stats = nullptr) {
    if (M < 1) throw std::invalid_argument("hadamard_test_trajectory: M < 1");
    const int n = initial.n_qubits;
    if (n + 1 > kDenseQubitCap + 1)
        throw std::runtime_error("hadamard_test_trajectory: dense cap exceeded");
    const int anc = n;
    const std::uint64_t dim = 1ULL << (n + 1);
    const std::uint64_t mask = 1ULL << anc;

    // (|0> + |1>)/sqrt(2) ancilla, system in the initial state.
    Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(dim);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (std::uint64_t b = 0; b < (1ULL << n); ++b) {
        amp(b) = inv_sqrt2 * initial.amp(b);
        amp(b | mask) = inv_sqrt2 * initial.amp(b);
    }

    const NoiseModel* nm = noise.gamma > 0.0 ? &noise : nullptr;
    detail::controlled_trotter(amp, H, t_prime, dt, M, anc, nm, &rng, stats);
    if (obs) {
        for (std::uint64_t b = 0; b < dim; ++b) {
            if (!(b & mask)) continue;
            // controlled P on the ancilla=1 branch, pairwise to stay in place
            const std::uint64_t b2 = b ^ obs->x;
            if (obs->x != 0 && b > b2) continue;
            if (obs->x == 0) {
                amp(b) *= pauli_phase(*obs, b);
            } else {
                const Complex a1 = amp(b), a2 = amp(b2);
                amp(b) = pauli_phase(*obs, b2) * a2;
                amp(b2) = pauli_phase(*obs, b) * a1;
            }
        }
    }
    detail::controlled_trotter(amp, H, -t, dt, M, anc, nm, &rng, stats);

    if (basis == MeasurementBasis::Y) {
        for (std::uint64_t b = 0; b < dim; ++b)
            if (b & mask) amp(b) *= Complex(0.0, -1.0);  // S^dagger on the ancilla
    }
    // Hadamard on the ancilla, then measure it.
    double p_plus = 0.0;
    for (std::uint64_t b = 0; b < dim; ++b) {
        if (b & mask) continue;
        const Complex lo = amp(b), hi = amp(b | mask);
        p_plus += 0.5 * std::norm(lo + hi);
    }
    return rng.uniform() < p_plus ? +1 : -1;
}

}  // namespace dde
