#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include <dde/io.hpp>

using namespace dde;

namespace {

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out;
};

void add_common(CLI::App* sub, CommonOpts& c, bool config_required = true) {
    auto* opt = sub->add_option("--config", c.config_path, "run configuration (json)");
    if (config_required) opt->required();
    sub->add_option("--seed", c.seed, "override the root seed");
    sub->add_option("--out", c.out, "override the output path");
}

RunConfig load_config(const CommonOpts& c) {
    RunConfig cfg = load_run_config(c.config_path);
    if (c.seed) {
        cfg.root_seed = *c.seed;
        cfg.dde.seed = *c.seed;
        cfg.raw["dde"]["seed"] = *c.seed;
    }
    return cfg;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    if (out.empty()) throw ConfigError("empty list: '" + s + "'");
    return out;
}

double wall_seconds(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int cmd_hamiltonian(const CommonOpts& c) {
    const RunConfig cfg = load_config(c);
    const PauliSum H = build_hamiltonian(cfg.hamiltonian);
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!c.out.empty()) {
        file.open(c.out);
        if (!file) throw std::runtime_error("cannot open " + c.out);
        os = &file;
    }
    char buf[128];
    std::snprintf(buf, sizeof(buf), "# n_qubits=%d n_terms=%zu constant=%.17g\n", H.n_qubits(),
                  H.n_terms(), H.constant());
    *os << buf;
    for (const auto& t : H.terms()) {
        std::snprintf(buf, sizeof(buf), "%.17g %s\n", t.coeff,
                      t.string.to_string(H.n_qubits()).c_str());
        *os << buf;
    }
    return 0;
}

int cmd_grid(const CommonOpts& c, int inject_shots, const std::vector<std::string>& extra_inputs,
             const std::string& ms_list) {
    if (!extra_inputs.empty()) {
        // pure grid-file extrapolation; no config needed
        if (ms_list.empty()) throw ConfigError("grid --extrapolate requires --Ms");
        const auto Ms = parse_list(ms_list);
        if (Ms.size() != extra_inputs.size())
            throw ConfigError("grid: --Ms length must match the input grid count");
        std::vector<std::pair<int, CorrelatorSet>> grids;
        for (std::size_t i = 0; i < extra_inputs.size(); ++i)
            grids.push_back({static_cast<int>(Ms[i]), load_grid(extra_inputs[i])});
        const CorrelatorSet ex = extrapolate_trotter(grids);
        const std::string out = c.out.empty() ? "extrapolated.grid" : c.out;
        save_grid(ex, out);
        std::cout << "wrote " << out << "\n";
        return 0;
    }
    const RunConfig cfg = load_config(c);
    const PauliSum H = build_hamiltonian(cfg.hamiltonian);
    CorrelatorSet grid = compute_configured_grid(cfg, H, H);
    if (inject_shots > 0) grid = inject_shot_noise(grid, inject_shots, cfg.root_seed);
    std::filesystem::create_directories(cfg.output_directory);
    const std::string out = !c.out.empty() && c.out.find('/') == std::string::npos
                                ? cfg.output_directory + "/" + c.out
                                : (c.out.empty() ? cfg.output_directory + "/run.grid" : c.out);
    save_grid(grid, out);
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_dde(const CommonOpts& c, const std::string& grid_file, const std::string& sweep_n,
            const std::string& sweep_nmc, int reps, std::optional<double> reference) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunConfig cfg = load_config(c);
    const std::string run_id = "dde-seed" + std::to_string(cfg.root_seed);
    write_resolved_config(cfg, run_id);

    const PauliSum H = build_hamiltonian(cfg.hamiltonian);
    CorrelatorSet grid;
    SpectralDecomposition spec;
    bool have_spec = false;
    if (!grid_file.empty()) {
        grid = load_grid(grid_file);
    } else {
        grid = compute_configured_grid(cfg, H, H, &spec);
        have_spec = spec.energies.size() > 0;
    }

    if (sweep_n.empty() && sweep_nmc.empty()) {
        const Estimate est = dde_estimate(grid, cfg.dde);
        std::vector<EstimateRecord> rec(1);
        rec[0] = {run_id,       cfg.dde.n_copies, cfg.dde.n_mc,    est.value,
                  est.std_error, est.imag_residual, est.shift_applied, cfg.dde.seed,
                  wall_seconds(t0)};
        write_estimate_csv(cfg.output_directory + "/estimates.csv", rec);
        char buf[128];
        std::snprintf(buf, sizeof(buf), "value=%.12g std_error=%.3g\n", est.value, est.std_error);
        std::cout << buf;
        return 0;
    }

    // sweep mode: mean absolute error against a reference over seeded reps
    double ref = 0.0;
    if (reference) {
        ref = *reference;
    } else if (have_spec) {
        const Statevector psi0 = build_initial_state(cfg.initial_state, H, spec);
        const Eigen::VectorXcd cc = spec.eigenvectors.adjoint() * psi0.amp;
        int q = 0;
        for (int k = 1; k < cc.size(); ++k)
            if (std::norm(cc(k)) > std::norm(cc(q))) q = k;
        ref = spec.energies(q);
    } else {
        throw ConfigError("dde sweep: --reference required with a persisted or mps grid");
    }
    const auto ns = sweep_n.empty() ? std::vector<double>{double(cfg.dde.n_copies)}
                                    : parse_list(sweep_n);
    const auto nmcs = sweep_nmc.empty() ? std::vector<double>{double(cfg.dde.n_mc)}
                                        : parse_list(sweep_nmc);
    std::vector<SweepRow> rows;
    Rng root(cfg.root_seed);
    for (double nn : ns) {
        for (double mm : nmcs) {
            DdeConfig dc = cfg.dde;
            dc.n_copies = static_cast<int>(nn);
            dc.n_mc = static_cast<long long>(mm);
            SweepRow row;
            row.n_copies = dc.n_copies;
            row.n_mc = dc.n_mc;
            row.sigma = dc.sigma;
            row.reference = ref;
            row.reps = reps;
            for (int r = 0; r < reps; ++r) {
                dc.seed = root.child(r + 1000 * (rows.size() + 1)).uniform_int(1ULL << 62);
                const Estimate est = dde_estimate(grid, dc);
                row.mean_value += est.value / reps;
                row.mean_abs_error += std::abs(est.value - ref) / reps;
            }
            rows.push_back(row);
        }
    }
    const std::string out = c.out.empty() ? cfg.output_directory + "/sweep.csv" : c.out;
    emit_sweep_csv(out, rows);
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_bounds(const CommonOpts& c, const std::string& sigmas) {
    const RunConfig cfg = load_config(c);
    const PauliSum H = build_hamiltonian(cfg.hamiltonian);
    const auto spec = diagonalize(H);
    const Statevector psi0 = build_initial_state(cfg.initial_state, H, spec);
    const Eigen::VectorXcd cc = spec.eigenvectors.adjoint() * psi0.amp;
    std::filesystem::create_directories(cfg.output_directory);
    const std::string out = c.out.empty() ? cfg.output_directory + "/bounds.csv" : c.out;
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << "sigma,hs_bound,hs_actual,trace_bound,trace_actual,delta,h2,c_l1,e_l1\n";
    char buf[512];
    for (double s : parse_list(sigmas.empty() ? "1,2,3,4,5" : sigmas)) {
        const BoundReport rep = lemma1_bounds(cc, spec, s);
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      s, rep.hs_bound, rep.hs_actual, rep.trace_bound, rep.trace_actual, rep.delta,
                      rep.h2, rep.c_l1, rep.e_l1);
        f << buf;
    }
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_vqe(const CommonOpts& c) {
    const RunConfig cfg = load_config(c);
    const PauliSum H = build_hamiltonian(cfg.hamiltonian);
    const Json& p = cfg.initial_state.params;
    const int L = detail::get_or(p, "layers", 12, "initial_state.params");
    const int steps = detail::get_or(p, "steps", 50, "initial_state.params");
    const double lr = detail::get_or(p, "learning_rate", 0.05, "initial_state.params");
    const std::uint64_t seed =
        c.seed ? *c.seed : detail::get_or<std::uint64_t>(p, "seed", 0, "initial_state.params");
    const VqeResult res = vqe_train(H, AnsatzSpec(H.n_qubits(), L), steps, lr, seed);
    std::filesystem::create_directories(cfg.output_directory);
    const std::string out = c.out.empty() ? cfg.output_directory + "/vqe.csv" : c.out;
    std::ofstream f(out);
    f << "step,energy\n";
    for (std::size_t i = 0; i < res.trace.size(); ++i) f << i << "," << res.trace[i] << "\n";
    std::ofstream pf(cfg.output_directory + "/vqe_params.csv");
    pf << "index,theta\n";
    for (Eigen::Index i = 0; i < res.state.params.size(); ++i)
        pf << i << "," << std::setprecision(17) << res.state.params(i) << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "final_energy=%.12g\n", res.trace.back());
    std::cout << buf;
    return 0;
}

int cmd_varsim(const CommonOpts& c, int substeps, double lambda) {
    const RunConfig cfg = load_config(c);
    const PauliSum H = build_hamiltonian(cfg.hamiltonian);
    const Json& p = cfg.initial_state.params;
    const int L = detail::get_or(p, "layers", 12, "initial_state.params");
    const int steps = detail::get_or(p, "steps", 50, "initial_state.params");
    const double lr = detail::get_or(p, "learning_rate", 0.05, "initial_state.params");
    const std::uint64_t seed =
        c.seed ? *c.seed : detail::get_or<std::uint64_t>(p, "seed", 0, "initial_state.params");
    const VqeResult trained = vqe_train(H, AnsatzSpec(H.n_qubits(), L), steps, lr, seed);
    const auto traj = var_evolve(trained.state, H, cfg.T, cfg.dt, substeps, lambda);

    const auto spec = diagonalize(H);
    const Statevector psi0 = apply_ansatz(trained.state);
    std::filesystem::create_directories(cfg.output_directory);
    const std::string out = c.out.empty() ? cfg.output_directory + "/varsim.csv" : c.out;
    std::ofstream f(out);
    f << "t,fidelity,energy\n";
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Statevector vs = apply_ansatz(traj[k]);
        const Statevector ex = evolve_exact(psi0, spec, k * cfg.dt);
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g\n", k * cfg.dt,
                      std::norm(inner_product(vs, ex)), expectation(vs, H));
        f << buf;
    }
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_spectroscopy(const CommonOpts& c) {
    const RunConfig cfg = load_config(c);
    const PauliSum H = build_hamiltonian(cfg.hamiltonian);
    if (cfg.backend.kind != "mps")
        throw ConfigError("spectroscopy: backend.kind must be mps");
    const Json& p = cfg.initial_state.params;
    const auto bits = detail::require<std::vector<std::string>>(p, "bitstrings",
                                                                "initial_state.params");
    const auto amps = detail::require<std::vector<double>>(p, "amplitudes",
                                                           "initial_state.params");
    const std::uint64_t b1 = basis_index(bits.at(0));
    const std::uint64_t b2 = bits.size() > 1 ? basis_index(bits.at(1)) : 0;
    const auto mps0 = mps_from_bitstrings(H.n_qubits(), b1, b2, amps.at(0),
                                          bits.size() > 1 ? amps.at(1) : 0.0,
                                          cfg.backend.chi_max, cfg.backend.cutoff);
    const double tdt = cfg.backend.tebd_dt > 0.0 ? cfg.backend.tebd_dt : cfg.dt;
    const TebdConfig tc(tdt, cfg.backend.chi_max, cfg.backend.cutoff);
    const int n = static_cast<int>(std::llround(cfg.T / cfg.dt)) + 1;
    std::vector<double> ts(n);
    std::vector<Complex> S(n);
    MpsState phi = mps0;
    for (int i = 0; i < n; ++i) {
        ts[i] = i * cfg.dt;
        S[i] = mps_overlap(mps0, phi);
        if (i + 1 < n) phi = tebd_evolve(phi, H, cfg.dt, tc);
    }
    const auto peaks = spectroscopy(ts, S);
    std::filesystem::create_directories(cfg.output_directory);
    const std::string out = c.out.empty() ? cfg.output_directory + "/peaks.csv" : c.out;
    std::ofstream f(out);
    f << "frequency,weight\n";
    for (const auto& pk : peaks) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g\n", pk.frequency, pk.weight);
        f << buf;
    }
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_extrapolate_copies(const std::string& input, const std::string& out_path) {
    std::ifstream f(input);
    if (!f) throw ConfigError("cannot open " + input);
    std::string line;
    std::vector<int> ns;
    std::vector<double> vals;
    while (std::getline(f, line)) {
        if (line.empty() || !std::isdigit(static_cast<unsigned char>(line[0]))) continue;
        std::stringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',')) continue;
        ns.push_back(std::stoi(a));
        vals.push_back(std::stod(b));
    }
    std::vector<std::pair<int, double>> pts;
    for (std::size_t i = 0; i < ns.size(); ++i) pts.push_back({ns[i], vals[i]});
    const CopyExtrapolation ex = extrapolate_copies(pts);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "extrapolated=%.12g degenerate=%d b=%.6g\n", ex.value,
                  ex.degenerate ? 1 : 0, ex.b);
    std::cout << buf;
    if (!out_path.empty()) {
        std::ofstream o(out_path);
        o << "extrapolated,degenerate,b,c\n";
        std::snprintf(buf, sizeof(buf), "%.17g,%d,%.17g,%.17g\n", ex.value, ex.degenerate ? 1 : 0,
                      ex.b, ex.c);
        o << buf;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dominant-eigenstate distillation toolkit"};
    app.require_subcommand(1);

    CommonOpts c_ham, c_grid, c_dde, c_bounds, c_vqe, c_varsim, c_mps, c_spec;
    int inject_shots = 0;
    std::vector<std::string> extrapolate_inputs;
    std::string ms_list;
    std::string grid_file, sweep_n, sweep_nmc;
    int reps = 1, substeps = 1000;
    double lambda = 1e-4;
    std::optional<double> reference;
    std::string ec_input, ec_out;

    auto* s_ham = app.add_subcommand("hamiltonian", "build and dump a Hamiltonian");
    add_common(s_ham, c_ham);

    auto* s_grid = app.add_subcommand("grid", "compute, perturb, or extrapolate correlator grids");
    add_common(s_grid, c_grid, false);
    s_grid->add_option("--inject-shots", inject_shots, "perturb with finite-shot noise");
    s_grid->add_option("--extrapolate", extrapolate_inputs, "input grid files to extrapolate");
    s_grid->add_option("--Ms", ms_list, "comma-separated Trotter counts for --extrapolate");

    auto* s_dde = app.add_subcommand("dde", "sample correlators and estimate");
    add_common(s_dde, c_dde);
    s_dde->add_option("--grid-file", grid_file, "use a persisted grid");
    s_dde->add_option("--sweep-n", sweep_n, "comma-separated copy counts");
    s_dde->add_option("--sweep-nmc", sweep_nmc, "comma-separated sample counts");
    s_dde->add_option("--reps", reps, "repetitions per sweep cell");
    s_dde->add_option("--reference", reference, "reference value for sweep errors");

    auto* s_bounds = app.add_subcommand("bounds", "Gaussian-average bound report");
    add_common(s_bounds, c_bounds);
    std::string sigmas;
    s_bounds->add_option("--sigmas", sigmas, "comma-separated window widths");

    auto* s_vqe = app.add_subcommand("vqe", "train the variational initial state");
    add_common(s_vqe, c_vqe);

    auto* s_varsim = app.add_subcommand("varsim", "variational time evolution");
    add_common(s_varsim, c_varsim);
    s_varsim->add_option("--substeps", substeps, "integrator substeps per grid step");
    s_varsim->add_option("--lambda", lambda, "Tikhonov regularization");

    auto* s_mps = app.add_subcommand("mps", "correlator grid through the MPS backend");
    add_common(s_mps, c_mps);

    auto* s_spec = app.add_subcommand("spectroscopy", "Loschmidt spectral peaks");
    add_common(s_spec, c_spec);

    auto* s_ec = app.add_subcommand("extrapolate-copies", "fit and extrapolate estimates in n");
    s_ec->add_option("--input", ec_input, "CSV with n,value rows")->required();
    s_ec->add_option("--out", ec_out, "output CSV");

    CLI11_PARSE(app, argc, argv);

    try {
        if (s_ham->parsed()) return cmd_hamiltonian(c_ham);
        if (s_grid->parsed()) return cmd_grid(c_grid, inject_shots, extrapolate_inputs, ms_list);
        if (s_dde->parsed()) return cmd_dde(c_dde, grid_file, sweep_n, sweep_nmc, reps, reference);
        if (s_bounds->parsed()) return cmd_bounds(c_bounds, sigmas);
        if (s_vqe->parsed()) return cmd_vqe(c_vqe);
        if (s_varsim->parsed()) return cmd_varsim(c_varsim, substeps, lambda);
        if (s_mps->parsed()) return cmd_grid(c_mps, 0, {}, "");
        if (s_spec->parsed()) return cmd_spectroscopy(c_spec);
        if (s_ec->parsed()) return cmd_extrapolate_copies(ec_input, ec_out);
    } catch (const ConfigError& e) {
        std::cerr << "error: category=config message=" << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: category=config message=" << e.what() << "\n";
        return 2;
    } catch (const GridParseError& e) {
        std::cerr << "error: category=config message=" << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: category=numerical message=" << e.what() << "\n";
        return 3;
    }
    return 0;
}
