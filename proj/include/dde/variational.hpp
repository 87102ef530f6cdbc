#pragma once

#include "dde/dense.hpp"

namespace dde {

// Hardware-efficient ring ansatz: each layer applies Ry then Rz on every
// qubit followed by a ring of CZ entanglers; parameter count 2 N L.
struct AnsatzSpec {
    int n_qubits = 1;
    int layers = 1;

    AnsatzSpec() = default;
    AnsatzSpec(int n, int L) : n_qubits(n), layers(L) {
        if (n < 1 || L < 1) throw std::invalid_argument("AnsatzSpec: bad shape");
    }

    int n_params() const { return 2 * n_qubits * layers; }
};

struct VariationalState {
    AnsatzSpec spec;
    Eigen::VectorXd params;

    VariationalState() = default;
    VariationalState(AnsatzSpec s, Eigen::VectorXd th) : spec(s), params(std::move(th)) {
        if (params.size() != spec.n_params())
            throw std::invalid_argument("VariationalState: parameter count mismatch");
    }
};

namespace detail {
struct AnsatzOp {
    char kind;           // 'Y', 'Z' rotation or 'C' entangler
    int q1 = 0, q2 = 0;  // q2 used by CZ
    int param = -1;      // rotation parameter index
};

inline std::vector<AnsatzOp> ansatz_ops(const AnsatzSpec& spec) {
    std::vector<AnsatzOp> ops;
    const int N = spec.n_qubits;
    for (int l = 0; l < spec.layers; ++l) {
        for (int q = 0; q < N; ++q) ops.push_back({'Y', q, 0, l * 2 * N + q});
        for (int q = 0; q < N; ++q) ops.push_back({'Z', q, 0, l * 2 * N + N + q});
        if (N == 2) {
            ops.push_back({'C', 0, 1, -1});
        } else if (N > 2) {
            for (int q = 0; q < N; ++q) ops.push_back({'C', q, (q + 1) % N, -1});
        }
    }
    return ops;
}

inline void apply_cz(Eigen::Ref<Eigen::VectorXcd> amp, int q1, int q2) {
    const std::uint64_t m = (1ULL << q1) | (1ULL << q2);
    for (Eigen::Index b = 0; b < amp.size(); ++b)
        if ((static_cast<std::uint64_t>(b) & m) == m) amp(b) = -amp(b);
}

inline void apply_op(Eigen::Ref<Eigen::VectorXcd> amp, const AnsatzOp& op,
                     const Eigen::VectorXd& params) {
    if (op.kind == 'C')
        apply_cz(amp, op.q1, op.q2);
    else
        apply_pauli_rotation(amp, PauliString::single(op.kind, op.q1), 0.5 * params(op.param));
}
}  // namespace detail

inline Statevector apply_ansatz(const VariationalState& vs) {
    Eigen::VectorXcd amp = Statevector::basis(vs.spec.n_qubits, 0).amp;
    for (const auto& op : detail::ansatz_ops(vs.spec)) detail::apply_op(amp, op, vs.params);
    return {vs.spec.n_qubits, std::move(amp)};
}

// All exact derivative statevectors |d psi / d theta_i> as matrix columns.
// Each rotation exp(-i theta P / 2) contributes a -i P / 2 insertion; the
// derivative columns are propagated through the remaining gates alongside the
// state itself.
inline Eigen::MatrixXcd derivative_states(const VariationalState& vs) {
    const int P = vs.spec.n_params();
    const Eigen::Index dim = 1LL << vs.spec.n_qubits;
    Eigen::MatrixXcd D(dim, P);
    Eigen::VectorXcd cur = Statevector::basis(vs.spec.n_qubits, 0).amp;
    std::vector<int> live;  // derivative columns already seeded
    for (const auto& op : detail::ansatz_ops(vs.spec)) {
        detail::apply_op(cur, op, vs.params);
        for (int i : live) detail::apply_op(D.col(i), op, vs.params);
        if (op.param >= 0) {
            Eigen::VectorXcd d = cur;
            apply_single_qubit_pauli(d, op.kind, op.q1);
            D.col(op.param) = Complex(0.0, -0.5) * d;
            live.push_back(op.param);
        }
    }
    return D;
}

// McLachlan ingredients: A = Re <d_i psi | d_j psi>, C = Im <d_i psi|H|psi>.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> metric_and_gradient(const VariationalState& vs,
                                                                       const PauliSum& H) {
    if (H.n_qubits() != vs.spec.n_qubits)
        throw std::invalid_argument("metric_and_gradient: dimension mismatch");
    const Eigen::MatrixXcd D = derivative_states(vs);
    const Eigen::VectorXcd psi = apply_ansatz(vs).amp;
    const Eigen::MatrixXd A = (D.adjoint() * D).real();
    const Eigen::VectorXd C = (D.adjoint() * apply_pauli_sum(H, psi)).imag();
    return {A, C};
}

// Exact energy gradient d<H>/d theta_i = 2 Re <d_i psi|H|psi>.
inline Eigen::VectorXd energy_gradient(const VariationalState& vs, const PauliSum& H) {
    const Eigen::MatrixXcd D = derivative_states(vs);
    const Eigen::VectorXcd psi = apply_ansatz(vs).amp;
    return 2.0 * (D.adjoint() * apply_pauli_sum(H, psi)).real();
}

struct VqeResult {
    VariationalState state;
    std::vector<double> trace;  // energy after each update, trace[0] = initial
};

// Plain gradient descent from seeded random parameters; deliberately runs for
// exactly `steps` updates (no convergence test).
inline VqeResult vqe_train(const PauliSum& H, const AnsatzSpec& spec, int steps = 50,
                           double learning_rate = 0.05, std::uint64_t seed = 0) {
    if (steps < 1) throw std::invalid_argument("vqe_train: steps < 1");
    Rng rng(seed);
    Eigen::VectorXd theta(spec.n_params());
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = rng.uniform(-M_PI, M_PI);
    VqeResult out{VariationalState(spec, theta), {}};
    out.trace.push_back(expectation(apply_ansatz(out.state), H));
    for (int s = 0; s < steps; ++s) {
        out.state.params -= learning_rate * energy_gradient(out.state, H);
        out.trace.push_back(expectation(apply_ansatz(out.state), H));
    }
    return out;
}

// Euler integration of the Tikhonov-regularized McLachlan system
// (A + lambda I) theta_dot = C with step total_outer_dt / substeps; returns
// snapshots at the outer grid times 0, dt, 2 dt, ..., total_t.
inline std::vector<VariationalState> var_evolve(const VariationalState& start, const PauliSum& H,
                                                double total_t, double dt_outer,
                                                int substeps = 1000, double lambda = 1e-4) {
    if (!(dt_outer > 0.0) || substeps < 1)
        throw std::invalid_argument("var_evolve: bad integrator step");
    const double ratio = total_t / dt_outer;
    const long long n_outer = std::llround(ratio);
    if (std::abs(ratio - n_outer) > 1e-9)
        throw std::invalid_argument("var_evolve: total_t not a multiple of dt_outer");
    const double dt = dt_outer / substeps;

    std::vector<VariationalState> snaps;
    snaps.reserve(n_outer + 1);
    VariationalState cur = start;
    snaps.push_back(cur);
    const int P = cur.spec.n_params();
    for (long long step = 0; step < n_outer; ++step) {
        for (int sub = 0; sub < substeps; ++sub) {
            auto [A, C] = metric_and_gradient(cur, H);
            A.diagonal().array() += lambda;
            const Eigen::LDLT<Eigen::MatrixXd> solver(A);
            if (solver.info() != Eigen::Success)
                throw std::runtime_error("var_evolve: regularized metric solve failed");
            const Eigen::VectorXd theta_dot = solver.solve(C);
            if (!theta_dot.allFinite())
                throw std::runtime_error("var_evolve: non-finite update (ill-conditioned metric)");
            cur.params += dt * theta_dot;
            (void)P;
        }
        snaps.push_back(cur);
    }
    return snaps;
}

}  // namespace dde
