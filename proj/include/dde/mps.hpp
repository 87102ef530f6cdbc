#pragma once

#include <array>

#include "dde/grid.hpp"

namespace dde {

// Open-boundary MPS; sites[i][s] is the (left bond x right bond) matrix for
// physical value s of qubit i (qubit 0 = least significant bit, as in the
// dense backend). Amplitudes carry an overall factor e^{norm_log}.
struct MpsState {
    std::vector<std::array<Eigen::MatrixXcd, 2>> sites;
    int chi_max = 64;
    double svd_cutoff = 1e-12;
    double norm_log = 0.0;
    double discarded_weight = 0.0;  // accumulated relative truncation loss
    long long truncations = 0;      // SVDs that actually dropped weight

    int n_sites() const { return static_cast<int>(sites.size()); }
    int bond_dim(int i) const { return static_cast<int>(sites[i][0].cols()); }
    int max_bond_dim() const {
        int m = 1;
        for (int i = 0; i + 1 < n_sites(); ++i) m = std::max(m, bond_dim(i));
        return m;
    }
};

struct TebdConfig {
    double dt = 0.5;
    int chi_max = 64;
    double svd_cutoff = 1e-12;

    TebdConfig() = default;
    TebdConfig(double dt_, int chi, double cutoff) : dt(dt_), chi_max(chi), svd_cutoff(cutoff) {
        if (!(dt > 0.0) || chi < 1) throw std::invalid_argument("TebdConfig: bad parameters");
    }
};

inline MpsState mps_from_bitstrings(int n_sites, std::uint64_t b1, std::uint64_t b2, Complex c1,
                                    Complex c2, int chi_max = 64, double svd_cutoff = 1e-12) {
    if (n_sites < 1) throw std::invalid_argument("mps_from_bitstrings: n_sites < 1");
    if (std::abs(std::norm(c1) + std::norm(c2) - 1.0) > 1e-10)
        throw std::invalid_argument("mps_from_bitstrings: |c1|^2 + |c2|^2 != 1");
    MpsState mps;
    mps.chi_max = chi_max;
    mps.svd_cutoff = svd_cutoff;
    mps.sites.resize(n_sites);
    auto bit = [](std::uint64_t b, int q) { return static_cast<int>((b >> q) & 1); };
    if (c2 == Complex(0.0)) {
        for (int i = 0; i < n_sites; ++i)
            for (int s = 0; s < 2; ++s)
                mps.sites[i][s] = (s == bit(b1, i) ? (i == 0 ? c1 : Complex(1.0)) : Complex(0.0)) *
                                  Eigen::MatrixXcd::Ones(1, 1);
        return mps;
    }
    if (b1 == b2)
        throw std::invalid_argument("mps_from_bitstrings: b1 = b2 with two nonzero amplitudes");
    for (int i = 0; i < n_sites; ++i) {
        const int rows = (i == 0) ? 1 : 2;
        const int cols = (i == n_sites - 1) ? 1 : 2;
        for (int s = 0; s < 2; ++s) {
            Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(rows, cols);
            const Complex w1 = (i == 0) ? c1 : Complex(1.0);
            const Complex w2 = (i == 0) ? c2 : Complex(1.0);
            if (s == bit(b1, i)) m(0, 0) = w1;
            if (s == bit(b2, i)) m(rows - 1, cols - 1) += w2;
            mps.sites[i][s] = m;
        }
    }
    return mps;
}

// Dense reconstruction (testing / small N); amplitude(b) includes e^{norm_log}.
inline Eigen::VectorXcd mps_dense(const MpsState& mps) {
    const int N = mps.n_sites();
    if (N > 20) throw std::invalid_argument("mps_dense: too many sites");
    Eigen::MatrixXcd V = Eigen::MatrixXcd::Ones(1, 1);
    for (int i = 0; i < N; ++i) {
        Eigen::MatrixXcd next(V.rows() * 2, mps.sites[i][0].cols());
        for (int s = 0; s < 2; ++s)
            for (Eigen::Index b = 0; b < V.rows(); ++b)
                next.row(b + (static_cast<Eigen::Index>(s) << i)) = V.row(b) * mps.sites[i][s];
        V = std::move(next);
    }
    return std::exp(mps.norm_log) * V.col(0);
}

inline Complex mps_overlap(const MpsState& a, const MpsState& b) {
    if (a.n_sites() != b.n_sites()) throw std::invalid_argument("mps_overlap: length mismatch");
    Eigen::MatrixXcd L = Eigen::MatrixXcd::Ones(1, 1);
    for (int i = 0; i < a.n_sites(); ++i) {
        Eigen::MatrixXcd next =
            Eigen::MatrixXcd::Zero(a.sites[i][0].cols(), b.sites[i][0].cols());
        for (int s = 0; s < 2; ++s) next += a.sites[i][s].adjoint() * L * b.sites[i][s];
        L = std::move(next);
    }
    return std::exp(a.norm_log + b.norm_log) * L(0, 0);
}

// Left-to-right QR sweep followed by normalization of the last site; the
// stripped norm accumulates in norm_log.
inline void canonicalize(MpsState& mps) {
    const int N = mps.n_sites();
    for (int i = 0; i + 1 < N; ++i) {
        const Eigen::Index cl = mps.sites[i][0].rows(), cr = mps.sites[i][0].cols();
        Eigen::MatrixXcd M(2 * cl, cr);
        M << mps.sites[i][0], mps.sites[i][1];
        const Eigen::HouseholderQR<Eigen::MatrixXcd> qr(M);
        const Eigen::Index r = std::min<Eigen::Index>(2 * cl, cr);
        const Eigen::MatrixXcd Q =
            qr.householderQ() * Eigen::MatrixXcd::Identity(2 * cl, r);
        const Eigen::MatrixXcd R =
            qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
        mps.sites[i][0] = Q.topRows(cl);
        mps.sites[i][1] = Q.bottomRows(cl);
        for (int s = 0; s < 2; ++s) mps.sites[i + 1][s] = R * mps.sites[i + 1][s];
    }
    double nrm2 = 0.0;
    for (int s = 0; s < 2; ++s) nrm2 += mps.sites[N - 1][s].squaredNorm();
    const double nrm = std::sqrt(nrm2);
    if (nrm <= 0.0) throw std::runtime_error("canonicalize: zero-norm state");
    for (int s = 0; s < 2; ++s) mps.sites[N - 1][s] /= nrm;
    mps.norm_log += std::log(nrm);
}

namespace detail {

inline Eigen::Matrix2cd pauli_matrix(char letter) {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    switch (letter) {
        case 'I': m(0, 0) = 1.0; m(1, 1) = 1.0; break;
        case 'X': m(0, 1) = 1.0; m(1, 0) = 1.0; break;
        case 'Y': m(0, 1) = Complex(0.0, -1.0); m(1, 0) = Complex(0.0, 1.0); break;
        case 'Z': m(0, 0) = 1.0; m(1, 1) = -1.0; break;
        default: throw std::invalid_argument("pauli_matrix: bad letter");
    }
    return m;
}

struct ChainTerms {
    std::vector<Eigen::Matrix2cd> field;                  // per site, coefficient included
    std::vector<std::vector<std::pair<Eigen::Matrix2cd, Eigen::Matrix2cd>>> bond;  // per bond
};

// Decompose a nearest-neighbor chain Hamiltonian into per-site fields and
// per-bond (left op, right op) channels; anything longer-ranged is rejected.
inline ChainTerms chain_terms(const PauliSum& H) {
    const int N = H.n_qubits();
    ChainTerms out;
    out.field.assign(N, Eigen::Matrix2cd::Zero());
    out.bond.resize(std::max(0, N - 1));
    for (const auto& t : H.terms()) {
        const int w = t.string.weight();
        const int a = t.string.first_site(), b = t.string.last_site();
        if (w == 1) {
            out.field[a] += t.coeff * pauli_matrix(t.string.letter(a));
        } else if (w == 2 && b == a + 1) {
            out.bond[a].push_back({t.coeff * pauli_matrix(t.string.letter(a)),
                                   pauli_matrix(t.string.letter(b))});
        } else {
            throw std::invalid_argument("chain_terms: not a nearest-neighbor open chain");
        }
    }
    return out;
}

// 4x4 bond Hamiltonian on (i, i+1), combined index s1*2 + s2; interior sites
// contribute half their field to each adjacent bond, boundary sites all of it.
inline Eigen::Matrix4cd bond_hamiltonian(const ChainTerms& ct, int i, int N) {
    Eigen::Matrix4cd h = Eigen::Matrix4cd::Zero();
    auto kron2 = [](const Eigen::Matrix2cd& P, const Eigen::Matrix2cd& Q) {
        Eigen::Matrix4cd k;
        for (int s1 = 0; s1 < 2; ++s1)
            for (int s2 = 0; s2 < 2; ++s2)
                for (int r1 = 0; r1 < 2; ++r1)
                    for (int r2 = 0; r2 < 2; ++r2) k(s1 * 2 + s2, r1 * 2 + r2) = P(s1, r1) * Q(s2, r2);
        return k;
    };
    for (const auto& [P, Q] : ct.bond[i]) h += kron2(P, Q);
    const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
    const double wl = (i == 0) ? 1.0 : 0.5;
    const double wr = (i == N - 2) ? 1.0 : 0.5;
    h += wl * kron2(ct.field[i], id) + wr * kron2(id, ct.field[i + 1]);
    return h;
}

inline Eigen::Matrix4cd bond_gate(const Eigen::Matrix4cd& h, double dt) {
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(h);
    Eigen::Vector4cd ph;
    for (int k = 0; k < 4; ++k) ph(k) = std::polar(1.0, -dt * es.eigenvalues()(k));
    return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

// Apply a two-site gate at bond (i, i+1) and re-split by truncated SVD; kept
// singular values are rescaled so the state norm is preserved.
inline void apply_bond_gate(MpsState& mps, int i, const Eigen::Matrix4cd& G) {
    const Eigen::Index cl = mps.sites[i][0].rows();
    const Eigen::Index cr = mps.sites[i + 1][0].cols();
    std::array<std::array<Eigen::MatrixXcd, 2>, 2> theta;
    for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2) theta[s1][s2] = mps.sites[i][s1] * mps.sites[i + 1][s2];
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(2 * cl, 2 * cr);
    for (int s1 = 0; s1 < 2; ++s1)
        for (int s2 = 0; s2 < 2; ++s2) {
            Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(cl, cr);
            for (int r1 = 0; r1 < 2; ++r1)
                for (int r2 = 0; r2 < 2; ++r2) blk += G(s1 * 2 + s2, r1 * 2 + r2) * theta[r1][r2];
            M.block(s1 * cl, s2 * cr, cl, cr) = blk;
        }
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double total = sv.squaredNorm();
    Eigen::Index keep = std::min<Eigen::Index>(sv.size(), mps.chi_max);
    while (keep > 1 && sv(keep - 1) < mps.svd_cutoff * sv(0)) --keep;
    double kept = 0.0;
    for (Eigen::Index k = 0; k < keep; ++k) kept += sv(k) * sv(k);
    if (kept < total * (1.0 - 1e-15)) {
        mps.truncations++;
        mps.discarded_weight += 1.0 - kept / total;
    }
    const double scale = std::sqrt(total / kept);
    const Eigen::MatrixXcd U = svd.matrixU().leftCols(keep);
    const Eigen::MatrixXcd SV =
        (scale * sv.head(keep)).asDiagonal() * svd.matrixV().leftCols(keep).adjoint();
    for (int s = 0; s < 2; ++s) {
        mps.sites[i][s] = U.middleRows(s * cl, cl);
        mps.sites[i + 1][s] = SV.middleCols(s * cr, cr);
    }
}

}  // namespace detail

// Second-order TEBD: even-bond half step, odd-bond full step, even-bond half
// step per timestep; negative t runs the exact inverse gates.
inline MpsState tebd_evolve(const MpsState& initial, const PauliSum& H, double t,
                            const TebdConfig& config) {
    if (H.n_qubits() != initial.n_sites())
        throw std::invalid_argument("tebd_evolve: dimension mismatch");
    MpsState mps = initial;
    mps.chi_max = config.chi_max;
    mps.svd_cutoff = config.svd_cutoff;
    if (t == 0.0) return mps;
    const double ratio = std::abs(t) / config.dt;
    const long long steps = std::llround(ratio);
    if (steps < 1 || std::abs(ratio - steps) > 1e-9)
        throw std::invalid_argument("tebd_evolve: t not a multiple of config.dt");
    const double dt = (t > 0 ? config.dt : -config.dt);

    const auto ct = detail::chain_terms(H);
    const int N = mps.n_sites();
    std::vector<Eigen::Matrix4cd> half(std::max(0, N - 1)), full(std::max(0, N - 1));
    for (int i = 0; i + 1 < N; ++i) {
        const Eigen::Matrix4cd h = detail::bond_hamiltonian(ct, i, N);
        half[i] = detail::bond_gate(h, 0.5 * dt);
        full[i] = detail::bond_gate(h, dt);
    }
    for (long long s = 0; s < steps; ++s) {
        for (int i = 0; i + 1 < N; i += 2) detail::apply_bond_gate(mps, i, half[i]);
        for (int i = 1; i + 1 < N; i += 2) detail::apply_bond_gate(mps, i, full[i]);
        for (int i = 0; i + 1 < N; i += 2) detail::apply_bond_gate(mps, i, half[i]);
    }
    return mps;
}

// <a| O |b> via a first-order MPO automaton (bond dimension 2 + channels per
// bond; 5 for the Heisenberg chain with fields).
inline Complex mps_expectation(const MpsState& a, const PauliSum& O, const MpsState& b) {
    if (a.n_sites() != b.n_sites() || O.n_qubits() != a.n_sites())
        throw std::invalid_argument("mps_expectation: length mismatch");
    const auto ct = detail::chain_terms(O);
    const int N = a.n_sites();
    if (N == 1) {
        Complex acc = 0.0;
        for (int s1 = 0; s1 < 2; ++s1)
            for (int s2 = 0; s2 < 2; ++s2)
                acc += (a.sites[0][s1].adjoint() * b.sites[0][s2])(0, 0) * ct.field[0](s1, s2);
        return std::exp(a.norm_log + b.norm_log) * acc + O.constant() * mps_overlap(a, b);
    }

    // MPO states per bond: 0 = nothing placed, 1..m = open channel, last = done
    std::vector<Eigen::MatrixXcd> L(1, Eigen::MatrixXcd::Ones(1, 1));  // state 0 only
    for (int i = 0; i < N; ++i) {
        const int m_out = (i < N - 1) ? static_cast<int>(ct.bond[i].size()) : 0;
        const int d_out = (i < N - 1) ? m_out + 2 : 1;  // last site collapses to "done"
        std::vector<Eigen::MatrixXcd> next(
            d_out, Eigen::MatrixXcd::Zero(a.sites[i][0].cols(), b.sites[i][0].cols()));
        auto add = [&](int l_in, int r_out_done_aware, const Eigen::Matrix2cd& op) {
            if (static_cast<std::size_t>(l_in) >= L.size()) return;
            for (int s1 = 0; s1 < 2; ++s1)
                for (int s2 = 0; s2 < 2; ++s2) {
                    if (op(s1, s2) == Complex(0.0)) continue;
                    next[r_out_done_aware] +=
                        op(s1, s2) * (a.sites[i][s1].adjoint() * L[l_in] * b.sites[i][s2]);
                }
        };
        const int done_out = d_out - 1;
        const Eigen::Matrix2cd id = Eigen::Matrix2cd::Identity();
        if (i < N - 1) add(0, 0, id);                       // still nothing placed
        add(0, done_out, ct.field[i]);                      // place the site term
        if (i < N - 1)
            for (int k = 0; k < m_out; ++k) add(0, k + 1, ct.bond[i][k].first);
        if (i > 0) {
            const int m_in = static_cast<int>(ct.bond[i - 1].size());
            for (int k = 0; k < m_in; ++k) add(k + 1, done_out, ct.bond[i - 1][k].second);
            add(m_in + 1, done_out, id);  // already done, carry through
        }
        L = std::move(next);
    }
    return std::exp(a.norm_log + b.norm_log) * L.back()(0, 0) + O.constant() * mps_overlap(a, b);
}

// Exact minimizer of the diagonal (Z and ZZ) part of a chain Hamiltonian by
// forward dynamic programming, plus the cheapest single-bit excitation.
inline std::pair<std::uint64_t, std::uint64_t> choose_bitstrings(const PauliSum& H) {
    const int N = H.n_qubits();
    if (N < 2 || N > 63) throw std::invalid_argument("choose_bitstrings: bad size");
    std::vector<double> h(N, 0.0), K(N - 1, 0.0);
    for (const auto& t : H.terms()) {
        const int w = t.string.weight();
        const int a = t.string.first_site(), b = t.string.last_site();
        if (w == 2 && b != a + 1)
            throw std::invalid_argument("choose_bitstrings: not a nearest-neighbor chain");
        if (w > 2) throw std::invalid_argument("choose_bitstrings: not a nearest-neighbor chain");
        if (w == 1 && t.string.letter(a) == 'Z') h[a] += t.coeff;
        if (w == 2 && t.string.letter(a) == 'Z' && t.string.letter(b) == 'Z') K[a] += t.coeff;
    }
    auto sgn = [](int bit) { return bit ? -1.0 : 1.0; };
    // best[s] = minimal energy of sites 0..i with site i in state s
    std::array<double, 2> best = {h[0] * sgn(0), h[0] * sgn(1)};
    std::vector<std::array<int, 2>> parent(N);
    for (int i = 1; i < N; ++i) {
        std::array<double, 2> nb;
        for (int s = 0; s < 2; ++s) {
            const double e0 = best[0] + K[i - 1] * sgn(0) * sgn(s);
            const double e1 = best[1] + K[i - 1] * sgn(1) * sgn(s);
            parent[i][s] = (e1 < e0) ? 1 : 0;
            nb[s] = std::min(e0, e1) + h[i] * sgn(s);
        }
        best = nb;
    }
    std::uint64_t b1 = 0;
    int s = (best[1] < best[0]) ? 1 : 0;
    for (int i = N - 1; i >= 0; --i) {
        if (s) b1 |= (1ULL << i);
        if (i > 0) s = parent[i][s];
    }
    // cheapest single-bit flip: delta E = -2 sigma_k (h_k + couplings)
    double best_delta = std::numeric_limits<double>::infinity();
    int flip = 0;
    for (int k = 0; k < N; ++k) {
        const double sk = sgn((b1 >> k) & 1);
        double local = h[k];
        if (k > 0) local += K[k - 1] * sgn((b1 >> (k - 1)) & 1);
        if (k < N - 1) local += K[k] * sgn((b1 >> (k + 1)) & 1);
        const double delta = -2.0 * sk * local;
        if (delta < best_delta) {
            best_delta = delta;
            flip = k;
        }
    }
    return {b1, b1 ^ (1ULL << flip)};
}

struct SpectralPeak {
    double frequency = 0.0;
    double weight = 0.0;
};

// Local density of states from Loschmidt overlaps S(t) = <psi(0)|psi(t)>:
// direct DFT S_hat(w) = sum_i S(t_i) e^{+i w t_i} dt with rectangular window
// and zero padding, |S_hat| maxima refined by quadratic interpolation. With
// S(t) = sum_k p_k e^{-i E_k t}, peaks sit at w = +E_k with weight ~ p_k.
inline std::vector<SpectralPeak> spectroscopy(const std::vector<double>& times,
                                              const std::vector<Complex>& S, int pad_factor = 8) {
    const int n = static_cast<int>(times.size());
    if (n < 2 || S.size() != times.size())
        throw std::invalid_argument("spectroscopy: need matching times/values, n >= 2");
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw std::invalid_argument("spectroscopy: non-uniform grid");
    for (int i = 0; i < n; ++i)
        if (std::abs(times[i] - times[0] - i * dt) > 1e-9 * std::max(1.0, std::abs(times[i])))
            throw std::invalid_argument("spectroscopy: non-uniform grid");
    if (pad_factor < 1) throw std::invalid_argument("spectroscopy: pad_factor < 1");

    const int np = n * pad_factor;
    const double dw = 2.0 * M_PI / (np * dt);
    const double span = times[n - 1] - times[0] + dt;
    std::vector<double> mag(np);
    std::vector<double> omega(np);
    for (int k = 0; k < np; ++k) {
        const int ks = k - np / 2;  // symmetric range: negative energies too
        const double w = ks * dw;
        Complex acc = 0.0;
        for (int i = 0; i < n; ++i) acc += S[i] * std::polar(1.0, w * times[i]);
        mag[k] = std::abs(acc) * dt;
        omega[k] = w;
    }
    std::vector<SpectralPeak> peaks;
    for (int k = 1; k + 1 < np; ++k) {
        if (!(mag[k] > mag[k - 1] && mag[k] >= mag[k + 1])) continue;
        const double denom = mag[k - 1] - 2.0 * mag[k] + mag[k + 1];
        double d = 0.0;
        if (std::abs(denom) > 1e-300) d = 0.5 * (mag[k - 1] - mag[k + 1]) / denom;
        d = std::clamp(d, -0.5, 0.5);
        const double peak_mag = mag[k] - 0.25 * (mag[k - 1] - mag[k + 1]) * d;
        peaks.push_back({omega[k] + d * dw, peak_mag / span});
    }
    std::sort(peaks.begin(), peaks.end(),
              [](const SpectralPeak& a, const SpectralPeak& b) { return a.weight > b.weight; });
    return peaks;
}

// Correlator grid from TEBD evolution. With dedup (valid when O commutes with
// the evolution, e.g. O = H) both matrices depend on t' - t only: psi(0) is
// cached and a single trajectory streams to +2T. Otherwise every grid
// snapshot is cached and all pairs are contracted.
inline CorrelatorSet correlators_from_mps(const MpsState& initial, const PauliSum& H,
                                          const PauliSum& O, const TimeGrid& grid,
                                          const TebdConfig& config, bool dedup = true,
                                          bool assume_commuting = false) {
    if (initial.n_sites() != H.n_qubits() || O.n_qubits() != H.n_qubits())
        throw std::invalid_argument("correlators_from_mps: dimension mismatch");
    const double ratio = grid.dt / config.dt;
    if (std::abs(ratio - std::llround(ratio)) > 1e-9 || std::llround(ratio) < 1)
        throw std::invalid_argument("correlators_from_mps: grid.dt not a multiple of tebd dt");
    if (dedup && !assume_commuting) {
        const auto split = split_observable(O, H);
        if (split.second.n_terms() > 0) dedup = false;
    }

    const int n = grid.N_T;
    CorrelatorSet out;
    out.grid = grid;
    out.A.setZero(n, n);
    out.B.setZero(n, n);
    out.provenance.backend = "mps(" + std::to_string(config.chi_max) + ")";
    out.provenance.observable = "custom";

    if (dedup) {
        std::vector<Complex> a(n), b(n);
        MpsState phi = initial;
        phi.chi_max = config.chi_max;
        phi.svd_cutoff = config.svd_cutoff;
        for (int d = 0; d < n; ++d) {
            b[d] = mps_overlap(initial, phi);
            a[d] = mps_expectation(initial, O, phi);
            if (d + 1 < n) phi = tebd_evolve(phi, H, grid.dt, config);
        }
        for (int i = 0; i < n; ++i) {
            out.A(i, i) = Complex(a[0].real(), 0.0);
            out.B(i, i) = 1.0;
            for (int j = i + 1; j < n; ++j) {
                out.A(i, j) = a[j - i];
                out.B(i, j) = b[j - i];
            }
        }
        detail::hermitian_fill(out.A);
        detail::hermitian_fill(out.B);
        return out;
    }

    std::vector<MpsState> snap(n);
    snap[grid.mid()] = initial;
    snap[grid.mid()].chi_max = config.chi_max;
    snap[grid.mid()].svd_cutoff = config.svd_cutoff;
    for (int i = grid.mid() + 1; i < n; ++i) snap[i] = tebd_evolve(snap[i - 1], H, grid.dt, config);
    for (int i = grid.mid() - 1; i >= 0; --i) snap[i] = tebd_evolve(snap[i + 1], H, -grid.dt, config);
    for (int i = 0; i < n; ++i) {
        out.B(i, i) = 1.0;
        out.A(i, i) = Complex(mps_expectation(snap[i], O, snap[i]).real(), 0.0);
        for (int j = i + 1; j < n; ++j) {
            out.B(i, j) = mps_overlap(snap[i], snap[j]);
            out.A(i, j) = mps_expectation(snap[i], O, snap[j]);
        }
    }
    detail::hermitian_fill(out.A);
    detail::hermitian_fill(out.B);
    return out;
}

}  // namespace dde
