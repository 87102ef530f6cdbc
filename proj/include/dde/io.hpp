#pragma once

#include <filesystem>
#include <optional>

#include <json.hpp>

#include "dde/bounds.hpp"
#include "dde/mps.hpp"
#include "dde/variational.hpp"

namespace dde {

using Json = nlohmann::json;

// Configuration problems exit the CLI with code 2, numerical failures with 3;
// both carry a machine-readable category.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace detail {
inline void reject_unknown_keys(const Json& j, const std::vector<std::string>& allowed,
                                const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T require(const Json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

template <typename T>
T get_or(const Json& j, const std::string& key, T fallback, const std::string& where) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const Json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}
}  // namespace detail

struct HamiltonianConfig {
    std::string family;  // heisenberg | schwinger | fermi-hubbard
    int n_qubits = 0;
    Json params;
    std::uint64_t seed = 0;
};

struct InitialStateConfig {
    std::string kind;  // bitstring-superposition | vqe | eigen-mixture
    Json params;
};

struct BackendConfig {
    std::string kind = "exact";  // exact | trotter | mps
    int M = 1;                   // trotter substeps per dt
    double gamma = 0.0;
    std::optional<int> shots;
    int chi_max = 64;
    double cutoff = 1e-12;
    double tebd_dt = 0.0;  // 0: use grid dt
};

struct RunConfig {
    HamiltonianConfig hamiltonian;
    InitialStateConfig initial_state;
    double T = 0.0, dt = 0.0;
    BackendConfig backend;
    DdeConfig dde;
    std::string output_directory = ".";
    std::uint64_t root_seed = 0;
    Json raw;  // resolved document, re-emitted next to outputs
};

inline RunConfig parse_run_config(const Json& j) {
    detail::reject_unknown_keys(
        j, {"hamiltonian", "initial_state", "grid", "backend", "dde", "output"}, "config");
    RunConfig cfg;

    if (j.contains("hamiltonian")) {
        const Json& h = j.at("hamiltonian");
        detail::reject_unknown_keys(h, {"family", "n_qubits", "params", "seed"}, "hamiltonian");
        cfg.hamiltonian.family = detail::require<std::string>(h, "family", "hamiltonian");
        cfg.hamiltonian.n_qubits = detail::get_or(h, "n_qubits", 0, "hamiltonian");
        cfg.hamiltonian.params = h.contains("params") ? h.at("params") : Json::object();
        cfg.hamiltonian.seed = detail::get_or<std::uint64_t>(h, "seed", 0, "hamiltonian");
    }
    if (j.contains("initial_state")) {
        const Json& s = j.at("initial_state");
        detail::reject_unknown_keys(s, {"kind", "params"}, "initial_state");
        cfg.initial_state.kind = detail::require<std::string>(s, "kind", "initial_state");
        cfg.initial_state.params = s.contains("params") ? s.at("params") : Json::object();
    }
    if (j.contains("grid")) {
        const Json& g = j.at("grid");
        detail::reject_unknown_keys(g, {"T", "dt"}, "grid");
        cfg.T = detail::require<double>(g, "T", "grid");
        cfg.dt = detail::require<double>(g, "dt", "grid");
    }
    if (j.contains("backend")) {
        const Json& b = j.at("backend");
        detail::reject_unknown_keys(b, {"kind", "M", "gamma", "shots", "chi_max", "cutoff",
                                        "tebd_dt"},
                                    "backend");
        cfg.backend.kind = detail::get_or<std::string>(b, "kind", "exact", "backend");
        cfg.backend.M = detail::get_or(b, "M", 1, "backend");
        cfg.backend.gamma = detail::get_or(b, "gamma", 0.0, "backend");
        if (b.contains("shots")) cfg.backend.shots = detail::require<int>(b, "shots", "backend");
        cfg.backend.chi_max = detail::get_or(b, "chi_max", 64, "backend");
        cfg.backend.cutoff = detail::get_or(b, "cutoff", 1e-12, "backend");
        cfg.backend.tebd_dt = detail::get_or(b, "tebd_dt", 0.0, "backend");
        if (cfg.backend.kind != "exact" && cfg.backend.kind != "trotter" &&
            cfg.backend.kind != "mps")
            throw ConfigError("backend.kind: expected exact | trotter | mps");
    }
    if (j.contains("dde")) {
        const Json& d = j.at("dde");
        detail::reject_unknown_keys(d, {"n_copies", "sigma", "n_mc", "estimator", "K", "N_batch",
                                        "shift_mode", "shift_c", "seed"},
                                    "dde");
        cfg.dde.n_copies = detail::get_or(d, "n_copies", 2, "dde");
        cfg.dde.sigma = detail::get_or(d, "sigma", 0.0, "dde");
        cfg.dde.n_mc = detail::get_or<long long>(d, "n_mc", 100000, "dde");
        const std::string est = detail::get_or<std::string>(d, "estimator", "mean", "dde");
        if (est == "mean")
            cfg.dde.estimator = EstimatorKind::Mean;
        else if (est == "median-of-means")
            cfg.dde.estimator = EstimatorKind::MedianOfMeans;
        else
            throw ConfigError("dde.estimator: expected mean | median-of-means");
        cfg.dde.K = detail::get_or(d, "K", cfg.dde.K, "dde");
        cfg.dde.N_batch = detail::get_or<long long>(d, "N_batch", cfg.dde.N_batch, "dde");
        const std::string sm = detail::get_or<std::string>(d, "shift_mode", "none", "dde");
        if (sm == "none")
            cfg.dde.shift_mode = ShiftMode::None;
        else if (sm == "diagonal-zero")
            cfg.dde.shift_mode = ShiftMode::DiagonalZero;
        else if (sm == "lsq")
            cfg.dde.shift_mode = ShiftMode::Lsq;
        else if (sm == "fixed")
            cfg.dde.shift_mode = ShiftMode::Fixed;
        else
            throw ConfigError("dde.shift_mode: expected none | diagonal-zero | lsq | fixed");
        cfg.dde.shift_c = detail::get_or(d, "shift_c", 0.0, "dde");
        cfg.dde.seed = detail::get_or<std::uint64_t>(d, "seed", 0, "dde");
        cfg.root_seed = cfg.dde.seed;
    }
    if (j.contains("output")) {
        const Json& o = j.at("output");
        detail::reject_unknown_keys(o, {"directory"}, "output");
        cfg.output_directory = detail::get_or<std::string>(o, "directory", ".", "output");
    }
    cfg.raw = j;
    return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    return parse_run_config(j);
}

inline PauliSum build_hamiltonian(const HamiltonianConfig& h) {
    const Json& p = h.params;
    if (h.family == "heisenberg") {
        detail::reject_unknown_keys(p, {"J", "h", "boundary"}, "hamiltonian.params");
        const double J = detail::get_or(p, "J", 0.1, "hamiltonian.params");
        const double hh = detail::get_or(p, "h", 1.0, "hamiltonian.params");
        const std::string b = detail::get_or<std::string>(p, "boundary", "ring",
                                                          "hamiltonian.params");
        if (b != "ring" && b != "chain")
            throw ConfigError("hamiltonian.params.boundary: expected ring | chain");
        return build_heisenberg(h.n_qubits, J, hh, b == "ring" ? Boundary::Ring : Boundary::Chain,
                                h.seed);
    }
    if (h.family == "schwinger") {
        detail::reject_unknown_keys(p, {"J", "m", "theta", "w"}, "hamiltonian.params");
        return build_schwinger(h.n_qubits, detail::get_or(p, "J", 1.0, "hamiltonian.params"),
                               detail::get_or(p, "m", 0.1, "hamiltonian.params"),
                               detail::get_or(p, "theta", 0.5, "hamiltonian.params"),
                               detail::get_or(p, "w", 0.1, "hamiltonian.params"));
    }
    if (h.family == "fermi-hubbard") {
        detail::reject_unknown_keys(p, {}, "hamiltonian.params");
        return build_fermi_hubbard_2x2();
    }
    throw ConfigError("hamiltonian.family: expected heisenberg | schwinger | fermi-hubbard");
}

// Dense initial state for the exact/trotter backends; eigen-mixture uses the
// eigenvector columns of the supplied decomposition.
inline Statevector build_initial_state(const InitialStateConfig& s, const PauliSum& H,
                                       const SpectralDecomposition& spec) {
    const int n = H.n_qubits();
    const Json& p = s.params;
    if (s.kind == "bitstring-superposition") {
        detail::reject_unknown_keys(p, {"bitstrings", "amplitudes"}, "initial_state.params");
        const auto bits = detail::require<std::vector<std::string>>(p, "bitstrings",
                                                                    "initial_state.params");
        const auto amps = detail::require<std::vector<double>>(p, "amplitudes",
                                                               "initial_state.params");
        if (bits.size() != amps.size() || bits.empty())
            throw ConfigError("initial_state: bitstrings/amplitudes size mismatch");
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(1LL << n);
        for (std::size_t k = 0; k < bits.size(); ++k) v(basis_index(bits[k])) += amps[k];
        const double nrm = v.norm();
        if (nrm <= 0.0) throw ConfigError("initial_state: zero norm");
        return {n, v / nrm};
    }
    if (s.kind == "eigen-mixture") {
        detail::reject_unknown_keys(p, {"indices", "weights"}, "initial_state.params");
        const auto idx = detail::require<std::vector<int>>(p, "indices", "initial_state.params");
        const auto w = detail::require<std::vector<double>>(p, "weights", "initial_state.params");
        if (idx.size() != w.size() || idx.empty())
            throw ConfigError("initial_state: indices/weights size mismatch");
        Eigen::VectorXcd v = Eigen::VectorXcd::Zero(1LL << n);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (idx[k] < 0 || idx[k] >= spec.energies.size())
                throw ConfigError("initial_state: eigenstate index out of range");
            if (w[k] < 0.0) throw ConfigError("initial_state: negative weight");
            v += std::sqrt(w[k]) * spec.eigenvectors.col(idx[k]);
        }
        const double nrm = v.norm();
        if (nrm <= 0.0) throw ConfigError("initial_state: zero norm");
        return {n, v / nrm};
    }
    if (s.kind == "vqe") {
        detail::reject_unknown_keys(p, {"layers", "steps", "learning_rate", "seed"},
                                    "initial_state.params");
        const int L = detail::get_or(p, "layers", 12, "initial_state.params");
        const int steps = detail::get_or(p, "steps", 50, "initial_state.params");
        const double lr = detail::get_or(p, "learning_rate", 0.05, "initial_state.params");
        const std::uint64_t seed = detail::get_or<std::uint64_t>(p, "seed", 0,
                                                                 "initial_state.params");
        return apply_ansatz(vqe_train(H, AnsatzSpec(n, L), steps, lr, seed).state);
    }
    throw ConfigError("initial_state.kind: expected bitstring-superposition | vqe | eigen-mixture");
}

// Resolved configuration written next to the outputs before any computation.
inline void write_resolved_config(const RunConfig& cfg, const std::string& run_id) {
    std::filesystem::create_directories(cfg.output_directory);
    const std::string path = cfg.output_directory + "/" + run_id + ".resolved.json";
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write resolved config: " + path);
    out << cfg.raw.dump(2) << "\n";
}

struct EstimateRecord {
    std::string run_id;
    int n_copies = 0;
    long long n_mc = 0;
    double value = 0.0;
    double std_error = 0.0;
    double imag_residual = 0.0;
    double shift_c = 0.0;
    std::uint64_t seed = 0;
    double wall_time_s = 0.0;
};

inline void write_estimate_csv(const std::string& path,
                               const std::vector<EstimateRecord>& records) {
    const bool fresh = !std::filesystem::exists(path);
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot write estimates: " + path);
    if (fresh)
        out << "run_id,n_copies,n_mc,value,std_error,imag_residual,shift_c,seed,wall_time_s\n";
    char buf[512];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%lld,%.17g,%.17g,%.17g,%.17g,%llu,%.6g\n",
                      r.run_id.c_str(), r.n_copies, r.n_mc, r.value, r.std_error, r.imag_residual,
                      r.shift_c, static_cast<unsigned long long>(r.seed), r.wall_time_s);
        out << buf;
    }
}

struct SweepRow {
    int n_copies = 0;
    long long n_mc = 0;
    double sigma = 0.0;
    double mean_value = 0.0;
    double mean_abs_error = 0.0;  // (1/K) sum |value_i - reference|
    double reference = 0.0;
    int reps = 0;
};

inline void emit_sweep_csv(const std::string& path, const std::vector<SweepRow>& rows) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write sweep: " + path);
    out << "n_copies,n_mc,sigma,mean_value,mean_abs_error,reference,reps\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%lld,%.17g,%.17g,%.17g,%.17g,%d\n", r.n_copies, r.n_mc,
                      r.sigma, r.mean_value, r.mean_abs_error, r.reference, r.reps);
        out << buf;
    }
}

// One grid per the configured backend. Dense backends also hand back the
// spectral decomposition so callers can derive references.
inline CorrelatorSet compute_configured_grid(const RunConfig& cfg, const PauliSum& H,
                                             const PauliSum& O,
                                             SpectralDecomposition* spec_out = nullptr) {
    const TimeGrid grid(cfg.T, cfg.dt);
    if (cfg.backend.kind == "mps") {
        if (cfg.initial_state.kind != "bitstring-superposition")
            throw ConfigError("mps backend requires a bitstring-superposition initial state");
        const Json& p = cfg.initial_state.params;
        const auto bits = detail::require<std::vector<std::string>>(p, "bitstrings",
                                                                    "initial_state.params");
        const auto amps = detail::require<std::vector<double>>(p, "amplitudes",
                                                               "initial_state.params");
        if (bits.size() > 2 || bits.empty())
            throw ConfigError("mps backend supports one or two bitstrings");
        const std::uint64_t b1 = basis_index(bits[0]);
        const std::uint64_t b2 = bits.size() == 2 ? basis_index(bits[1]) : 0;
        const Complex c1 = amps[0], c2 = bits.size() == 2 ? Complex(amps[1]) : Complex(0.0);
        const auto mps0 = mps_from_bitstrings(H.n_qubits(), b1, b2, c1, c2, cfg.backend.chi_max,
                                              cfg.backend.cutoff);
        const double tdt = cfg.backend.tebd_dt > 0.0 ? cfg.backend.tebd_dt : cfg.dt;
        return correlators_from_mps(mps0, H, O, grid,
                                    TebdConfig(tdt, cfg.backend.chi_max, cfg.backend.cutoff),
                                    true, false);
    }
    const auto spec = diagonalize(H);
    const Statevector psi0 = build_initial_state(cfg.initial_state, H, spec);
    if (spec_out) *spec_out = spec;
    if (cfg.backend.kind == "exact") return compute_grid_exact(psi0, spec, O, grid, true, &H);
    // trotter
    Rng rng(cfg.root_seed);
    NoiseModel noise{cfg.backend.gamma, true};
    return compute_grid_trotter(psi0, H, O, grid, cfg.backend.M,
                                cfg.backend.gamma > 0.0 ? &noise : nullptr, cfg.backend.shots,
                                rng);
}

}  // namespace dde
