#pragma once

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dde/dense.hpp"

namespace dde {

// Uniform symmetric grid t_i = -T + i dt, i = 0 .. N_T - 1, with N_T odd so
// t = 0 is always a grid point.
struct TimeGrid {
    double T = 0.0;
    double dt = 0.0;
    int N_T = 0;
    std::vector<double> times;

    TimeGrid() = default;
    TimeGrid(double T_, double dt_) : T(T_), dt(dt_) {
        if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("TimeGrid: T, dt must be > 0");
        const double ratio = T / dt;
        const long long r = std::llround(ratio);
        if (std::abs(ratio - r) > 1e-9)
            throw std::invalid_argument("TimeGrid: T/dt not an integer (N_T must be odd)");
        N_T = static_cast<int>(2 * r) + 1;
        times.resize(N_T);
        for (int i = 0; i < N_T; ++i) times[i] = -T + i * dt;
        times[(N_T - 1) / 2] = 0.0;  // exact zero at the midpoint
    }

    int mid() const { return (N_T - 1) / 2; }
};

struct GridProvenance {
    std::string backend = "exact";  // exact | trotter(M) | noisy(gamma,Ns) | mps(chi)
    std::uint64_t seed = 0;
    std::string hamiltonian;
    std::string observable;
};

struct CorrelatorSet {
    TimeGrid grid;
    Eigen::MatrixXcd A;
    Eigen::MatrixXcd B;
    GridProvenance provenance;
};

namespace detail {
inline void hermitian_fill(Eigen::MatrixXcd& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        m(i, i) = Complex(m(i, i).real(), 0.0);
        for (Eigen::Index j = i + 1; j < m.cols(); ++j) m(j, i) = std::conj(m(i, j));
    }
}

// All grid states in one pass through the eigenbasis: columns are
// e^{-i H t_i} |psi> for each grid time.
inline Eigen::MatrixXcd grid_states(const Statevector& initial, const SpectralDecomposition& spec,
                                    const TimeGrid& grid) {
    const Eigen::VectorXcd c = spec.eigenvectors.adjoint() * initial.amp;
    Eigen::MatrixXcd phased(c.size(), grid.N_T);
    for (int i = 0; i < grid.N_T; ++i) {
        for (Eigen::Index k = 0; k < c.size(); ++k)
            phased(k, i) = c(k) * std::polar(1.0, -grid.times[i] * spec.energies(k));
    }
    return spec.eigenvectors * phased;
}
}  // namespace detail

// Advisory only: the grid resolves the spectrum when dt <= pi / (E_max - E_min).
inline bool nyquist_ok(const SpectralDecomposition& spec, double dt) {
    const double spread = spec.energies(spec.energies.size() - 1) - spec.energies(0);
    return spread <= 0.0 || dt <= M_PI / spread;
}

// A[i][j] = <psi(t_i)|O|psi(t_j)>, B[i][j] = <psi(t_i)|psi(t_j)> by exact
// evolution. With dedup, B (and A when the observable commutes with the
// evolution) is computed once per time difference and broadcast along
// diagonals; the non-commuting remainder of A stays entry-wise. Pass H to let
// the splitter decide, or set assume_commuting for observables known to
// commute at the operator level (e.g. O = H).
inline CorrelatorSet compute_grid_exact(const Statevector& initial,
                                        const SpectralDecomposition& spec, const PauliSum& O,
                                        const TimeGrid& grid, bool dedup,
                                        const PauliSum* H = nullptr,
                                        bool assume_commuting = false) {
    if (initial.amp.size() != spec.energies.size() || O.n_qubits() != initial.n_qubits)
        throw std::invalid_argument("compute_grid_exact: dimension mismatch");
    if (!nyquist_ok(spec, grid.dt))
        std::fprintf(stderr, "warning: dt=%g exceeds pi/spectral-spread; grid undersamples\n",
                     grid.dt);

    const int n = grid.N_T;
    CorrelatorSet out;
    out.grid = grid;
    out.A.setZero(n, n);
    out.B.setZero(n, n);
    out.provenance.backend = "exact";
    out.provenance.observable = "custom";

    const Eigen::MatrixXcd S = detail::grid_states(initial, spec, grid);

    PauliSum O_broadcast(O.n_qubits()), O_entrywise(O.n_qubits());
    if (assume_commuting) {
        O_broadcast = O;
    } else if (H) {
        auto [par, perp] = split_observable(O, *H);
        O_broadcast = std::move(par);
        O_entrywise = std::move(perp);
    } else {
        O_entrywise = O;
    }

    if (dedup) {
        // Unique time differences from the representative pair (0, d).
        for (int d = 0; d < n; ++d) {
            const Complex b = S.col(0).dot(S.col(d));
            const Eigen::VectorXcd op = apply_pauli_sum(O_broadcast, S.col(d));
            const Complex a = S.col(0).dot(op) + O.constant() * b - O_broadcast.constant() * b;
            for (int i = 0; i + d < n; ++i) {
                out.B(i, i + d) = b;
                out.A(i, i + d) = a;
            }
        }
        if (O_entrywise.n_terms() > 0) {
            PauliSum perp_only = O_entrywise;  // constant handled in the broadcast pass
            for (int j = 0; j < n; ++j) {
                Eigen::VectorXcd op = Eigen::VectorXcd::Zero(S.rows());
                for (const auto& t : perp_only.terms())
                    accumulate_pauli(t.string, t.coeff, S.col(j), op);
                for (int i = 0; i <= j; ++i) out.A(i, j) += S.col(i).dot(op);
            }
        }
        // Diagonal of A by direct expectation (no two-state overlap).
        for (int i = 0; i < n; ++i)
            out.A(i, i) = expectation(Statevector{initial.n_qubits, S.col(i)}, O);
    } else {
        for (int j = 0; j < n; ++j) {
            const Eigen::VectorXcd op = apply_pauli_sum(O, S.col(j));
            for (int i = 0; i <= j; ++i) {
                out.A(i, j) = S.col(i).dot(op);
                out.B(i, j) = S.col(i).dot(S.col(j));
            }
        }
    }
    for (int i = 0; i < n; ++i) out.B(i, i) = 1.0;  // exact by normalization
    detail::hermitian_fill(out.A);
    detail::hermitian_fill(out.B);
    return out;
}

namespace detail {
// One grid step of first-order Trotter evolution; the backward direction is
// the exact adjoint of the forward circuit (reversed term order), so
// forward/backward segments cancel identically.
inline void trotter_grid_step(Eigen::VectorXcd& amp, const PauliSum& H, double dt, int M,
                              bool forward, const NoiseModel* noise, Rng* rng,
                              EvolveStats* stats) {
    const double tau = dt / M;
    const auto& terms = H.terms();
    for (int sub = 0; sub < M; ++sub) {
        if (forward) {
            for (std::size_t j = 0; j < terms.size(); ++j)
                noisy_rotation(amp, terms[j].string, terms[j].coeff * tau, noise, rng, stats);
        } else {
            for (std::size_t j = terms.size(); j-- > 0;)
                noisy_rotation(amp, terms[j].string, -terms[j].coeff * tau, noise, rng, stats);
        }
    }
}

// States at every grid time from a single (possibly noisy) Trotter
// trajectory anchored at t = 0.
inline Eigen::MatrixXcd trotter_grid_states(const Statevector& initial, const PauliSum& H,
                                            const TimeGrid& grid, int M, const NoiseModel* noise,
                                            Rng* rng, EvolveStats* stats) {
    Eigen::MatrixXcd S(initial.amp.size(), grid.N_T);
    const int mid = grid.mid();
    S.col(mid) = initial.amp;
    Eigen::VectorXcd cur = initial.amp;
    for (int i = mid + 1; i < grid.N_T; ++i) {
        trotter_grid_step(cur, H, grid.dt, M, true, noise, rng, stats);
        S.col(i) = cur;
    }
    cur = initial.amp;
    for (int i = mid - 1; i >= 0; --i) {
        trotter_grid_step(cur, H, grid.dt, M, false, noise, rng, stats);
        S.col(i) = cur;
    }
    return S;
}

inline Complex sampled_entry(const Statevector& initial, const PauliSum& H,
                             const std::optional<PauliString>& obs, double t, double t_prime,
                             double dt, int M, const NoiseModel& nm, int shots, Rng& rng,
                             EvolveStats* stats) {
    long sx = 0, sy = 0;
    for (int s = 0; s < shots; ++s)
        sx += hadamard_test_trajectory(initial, H, obs, t, t_prime, dt, M, nm,
                                       MeasurementBasis::X, rng, stats);
    for (int s = 0; s < shots; ++s)
        sy += hadamard_test_trajectory(initial, H, obs, t, t_prime, dt, M, nm,
                                       MeasurementBasis::Y, rng, stats);
    return Complex(double(sx) / shots, double(sy) / shots);
}

// Full A-entry estimate: constant * B-sample + sum of coefficient-weighted
// per-string samples.
inline std::pair<Complex, Complex> sampled_entry_pair(const Statevector& initial,
                                                      const PauliSum& H, const PauliSum& O,
                                                      double t, double t_prime, double dt, int M,
                                                      const NoiseModel& nm, int shots, Rng& rng,
                                                      EvolveStats* stats) {
    const Complex b = sampled_entry(initial, H, std::nullopt, t, t_prime, dt, M, nm, shots, rng,
                                    stats);
    Complex a = O.constant() * b;
    for (const auto& term : O.terms())
        a += term.coeff *
             sampled_entry(initial, H, term.string, t, t_prime, dt, M, nm, shots, rng, stats);
    return {a, b};
}
}  // namespace detail

// Trotterized correlator grid. Modes:
//  - no noise, no shots: deterministic grid from one cached state trajectory;
//  - noise, no shots:    one noisy trajectory, exact inner products;
//  - shots = N_s:        every unique entry's real/imag part is the sample
//                        mean of N_s Hadamard-test trajectories.
// Dedup broadcasts unique time differences (B always; A when the observable
// commutes string-wise with every Hamiltonian term, or assume_commuting).
inline CorrelatorSet compute_grid_trotter(const Statevector& initial, const PauliSum& H,
                                          const PauliSum& O, const TimeGrid& grid, int M,
                                          const NoiseModel* noise, std::optional<int> shots,
                                          Rng& rng, bool dedup = true,
                                          bool assume_commuting = false,
                                          EvolveStats* stats = nullptr) {
    if (M < 1) throw std::invalid_argument("compute_grid_trotter: M < 1");
    if (H.n_qubits() != initial.n_qubits || O.n_qubits() != initial.n_qubits)
        throw std::invalid_argument("compute_grid_trotter: dimension mismatch");
    if (shots && *shots < 1) throw std::invalid_argument("compute_grid_trotter: shots < 1");

    const int n = grid.N_T;
    CorrelatorSet out;
    out.grid = grid;
    out.A.setZero(n, n);
    out.B.setZero(n, n);
    {
        char buf[96];
        if (noise || shots)
            std::snprintf(buf, sizeof buf, "noisy(%.17g,%d)", noise ? noise->gamma : 0.0,
                          shots ? *shots : 0);
        else
            std::snprintf(buf, sizeof buf, "trotter(%d)", M);
        out.provenance.backend = buf;
    }

    PauliSum O_broadcast(O.n_qubits()), O_entrywise(O.n_qubits());
    if (assume_commuting) {
        O_broadcast = O;
    } else {
        auto [par, perp] = split_observable(O, H);
        O_broadcast = std::move(par);
        O_entrywise = std::move(perp);
    }
    const bool a_dedup = dedup && O_entrywise.n_terms() == 0;

    if (!shots) {
        const NoiseModel* nm = (noise && noise->gamma > 0.0) ? noise : nullptr;
        const Eigen::MatrixXcd S =
            detail::trotter_grid_states(initial, H, grid, M, nm, nm ? &rng : nullptr, stats);
        if (dedup) {
            for (int d = 0; d < n; ++d) {
                const Complex b = S.col(0).dot(S.col(d));
                Complex a;
                if (a_dedup) {
                    a = S.col(0).dot(apply_pauli_sum(O, S.col(d)));
                }
                for (int i = 0; i + d < n; ++i) {
                    out.B(i, i + d) = b;
                    if (a_dedup) out.A(i, i + d) = a;
                }
            }
            if (!a_dedup) {
                for (int j = 0; j < n; ++j) {
                    const Eigen::VectorXcd op = apply_pauli_sum(O, S.col(j));
                    for (int i = 0; i <= j; ++i) out.A(i, j) = S.col(i).dot(op);
                }
            }
            for (int i = 0; i < n; ++i)
                out.A(i, i) = expectation(Statevector{initial.n_qubits, S.col(i)}, O);
        } else {
            for (int j = 0; j < n; ++j) {
                const Eigen::VectorXcd op = apply_pauli_sum(O, S.col(j));
                for (int i = 0; i <= j; ++i) {
                    out.A(i, j) = S.col(i).dot(op);
                    out.B(i, j) = S.col(i).dot(S.col(j));
                }
            }
        }
        for (int i = 0; i < n; ++i) out.B(i, i) = 1.0;
    } else {
        const NoiseModel nm = noise ? *noise : NoiseModel(0.0);
        const int N_s = *shots;
        if (dedup) {
            for (int d = 0; d < n; ++d) {
                Complex a, b;
                if (a_dedup) {
                    auto [ae, be] = detail::sampled_entry_pair(initial, H, O, 0.0, d * grid.dt,
                                                               grid.dt, M, nm, N_s, rng, stats);
                    a = ae;
                    b = (d == 0) ? Complex(1.0) : be;
                } else if (d > 0) {
                    b = detail::sampled_entry(initial, H, std::nullopt, 0.0, d * grid.dt,
                                              grid.dt, M, nm, N_s, rng, stats);
                } else {
                    b = 1.0;
                }
                for (int i = 0; i + d < n; ++i) {
                    out.B(i, i + d) = b;
                    if (a_dedup) out.A(i, i + d) = a;
                }
            }
            if (!a_dedup) {
                for (int j = 0; j < n; ++j)
                    for (int i = 0; i <= j; ++i)
                        out.A(i, j) = detail::sampled_entry_pair(initial, H, O, grid.times[i],
                                                                 grid.times[j], grid.dt, M, nm,
                                                                 N_s, rng, stats)
                                          .first;
            }
        } else {
            for (int j = 0; j < n; ++j) {
                for (int i = 0; i <= j; ++i) {
                    auto [a, b] = detail::sampled_entry_pair(initial, H, O, grid.times[i],
                                                             grid.times[j], grid.dt, M, nm, N_s,
                                                             rng, stats);
                    out.A(i, j) = a;
                    out.B(i, j) = (i == j) ? Complex(1.0) : b;
                }
            }
        }
    }
    detail::hermitian_fill(out.A);
    detail::hermitian_fill(out.B);
    return out;
}

// Adds iid Gaussian measurement noise of sd 1/sqrt(N_s) to the real and
// imaginary part of every unique stored entry, then restores Hermitian
// symmetry. B's diagonal stays exact (it is 1 without any measurement); A's
// diagonal keeps a real perturbation only.
inline CorrelatorSet inject_shot_noise(const CorrelatorSet& corr, long long N_s,
                                       std::uint64_t seed) {
    if (N_s < 1) throw std::invalid_argument("inject_shot_noise: N_s < 1");
    CorrelatorSet out = corr;
    Rng rng(seed);
    const double sd = 1.0 / std::sqrt(static_cast<double>(N_s));
    const int n = corr.grid.N_T;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            const double are = sd * rng.normal();
            const double aim = (i == j) ? 0.0 : sd * rng.normal();
            out.A(i, j) += Complex(are, aim);
            if (i != j) out.B(i, j) += Complex(sd * rng.normal(), sd * rng.normal());
        }
    }
    detail::hermitian_fill(out.A);
    detail::hermitian_fill(out.B);
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "noisy(0,%lld)", N_s);
        out.provenance.backend = buf;
        out.provenance.seed = seed;
    }
    return out;
}

// Per-entry, per-component least squares of f(x) = a x^3 + b x^2 + c over
// x = 1/M; the extrapolated entry is c (the x -> 0 limit). The model has no
// linear term.
inline CorrelatorSet extrapolate_trotter(const std::vector<std::pair<int, CorrelatorSet>>& grids) {
    std::vector<int> ms;
    for (const auto& [m, g] : grids)
        if (std::find(ms.begin(), ms.end(), m) == ms.end()) ms.push_back(m);
    if (ms.size() < 3)
        throw std::invalid_argument("extrapolate_trotter: need >= 3 distinct M values");
    const int k = static_cast<int>(grids.size());
    const int n = grids[0].second.grid.N_T;
    for (const auto& [m, g] : grids)
        if (g.grid.N_T != n) throw std::invalid_argument("extrapolate_trotter: grid mismatch");

    Eigen::MatrixXd X(k, 3);
    for (int l = 0; l < k; ++l) {
        const double x = 1.0 / grids[l].first;
        X(l, 0) = x * x * x;
        X(l, 1) = x * x;
        X(l, 2) = 1.0;
    }
    // weight vector picking out the constant coefficient of the LSQ fit
    const Eigen::MatrixXd pinv =
        (X.transpose() * X).ldlt().solve(X.transpose() * Eigen::MatrixXd::Identity(k, k));
    const Eigen::VectorXd w = pinv.row(2);

    CorrelatorSet out = grids.back().second;
    out.A.setZero();
    out.B.setZero();
    for (int l = 0; l < k; ++l) {
        out.A += w(l) * grids[l].second.A;
        out.B += w(l) * grids[l].second.B;
    }
    out.provenance.backend = "trotter(extrapolated)";
    return out;
}

struct GridParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct GridVersionError : GridParseError {
    using GridParseError::GridParseError;
};

inline void save_grid(const CorrelatorSet& corr, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw std::runtime_error("save_grid: cannot open " + path);
    std::fprintf(f, "# format=dde-grid v1\n");
    std::fprintf(f, "# T=%.17g\n", corr.grid.T);
    std::fprintf(f, "# dt=%.17g\n", corr.grid.dt);
    std::fprintf(f, "# backend=%s\n", corr.provenance.backend.c_str());
    std::fprintf(f, "# seed=%llu\n", static_cast<unsigned long long>(corr.provenance.seed));
    if (!corr.provenance.hamiltonian.empty())
        std::fprintf(f, "# hamiltonian=%s\n", corr.provenance.hamiltonian.c_str());
    if (!corr.provenance.observable.empty())
        std::fprintf(f, "# observable=%s\n", corr.provenance.observable.c_str());
    const int n = corr.grid.N_T;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            std::fprintf(f, "%d %d %.17g %.17g %.17g %.17g\n", i, j, corr.A(i, j).real(),
                         corr.A(i, j).imag(), corr.B(i, j).real(), corr.B(i, j).imag());
    std::fclose(f);
}

inline CorrelatorSet load_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GridParseError("load_grid: cannot open " + path);
    std::string line;
    int lineno = 0;

    auto fail = [&](const std::string& what) -> GridParseError {
        return GridParseError("load_grid: " + path + ": line " + std::to_string(lineno) + ": " +
                              what);
    };

    if (!std::getline(in, line)) {
        ++lineno;
        throw fail("empty file");
    }
    ++lineno;
    if (line != "# format=dde-grid v1") {
        if (line.rfind("# format=", 0) == 0)
            throw GridVersionError("load_grid: " + path + ": unsupported version: " + line);
        throw fail("missing '# format=dde-grid v1' header");
    }

    double T = 0, dt = 0;
    bool have_T = false, have_dt = false;
    GridProvenance prov;
    prov.backend.clear();
    while (in.peek() == '#') {
        if (!std::getline(in, line)) break;
        ++lineno;
        const auto eq = line.find('=');
        if (line.rfind("# ", 0) != 0 || eq == std::string::npos) throw fail("malformed header");
        const std::string key = line.substr(2, eq - 2);
        const std::string val = line.substr(eq + 1);
        try {
            if (key == "T") {
                T = std::stod(val);
                have_T = true;
            } else if (key == "dt") {
                dt = std::stod(val);
                have_dt = true;
            } else if (key == "backend") {
                prov.backend = val;
            } else if (key == "seed") {
                prov.seed = std::stoull(val);
            } else if (key == "hamiltonian") {
                prov.hamiltonian = val;
            } else if (key == "observable") {
                prov.observable = val;
            } else {
                throw fail("unknown header key '" + key + "'");
            }
        } catch (const std::invalid_argument&) {
            throw fail("bad numeric value for '" + key + "'");
        }
    }
    if (!have_T || !have_dt) {
        ++lineno;
        throw fail("missing T/dt headers");
    }

    CorrelatorSet out;
    try {
        out.grid = TimeGrid(T, dt);
    } catch (const std::invalid_argument& e) {
        throw fail(e.what());
    }
    const int n = out.grid.N_T;
    out.A.setZero(n, n);
    out.B.setZero(n, n);
    out.provenance = prov;

    long long rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        int i, j;
        double ar, ai, br, bi;
        if (std::sscanf(line.c_str(), "%d %d %lf %lf %lf %lf", &i, &j, &ar, &ai, &br, &bi) != 6)
            throw fail("expected 'i j ReA ImA ReB ImB'");
        if (i < 0 || j < 0 || i >= n || j >= n) throw fail("index out of range");
        out.A(i, j) = Complex(ar, ai);
        out.B(i, j) = Complex(br, bi);
        ++rows;
    }
    if (rows != static_cast<long long>(n) * n) {
        ++lineno;
        throw fail("expected " + std::to_string(static_cast<long long>(n) * n) + " rows, got " +
                   std::to_string(rows));
    }
    return out;
}

}  // namespace dde
