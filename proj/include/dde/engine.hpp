#pragma once

#include <algorithm>
#include <limits>
#include <utility>
#include <vector>

#include "dde/grid.hpp"

namespace dde {

enum class EstimatorKind { Mean, MedianOfMeans };
enum class ShiftMode { None, DiagonalZero, Lsq, Fixed };

struct DdeConfig {
    int n_copies = 1;
    double sigma = 0.0;  // <= 0 means the T/4 default
    long long n_mc = 0;  // samples per functional (mean estimator)
    EstimatorKind estimator = EstimatorKind::Mean;
    int K = 1;                  // median-of-means batches per functional
    long long N_batch = 0;      // samples per batch
    ShiftMode shift_mode = ShiftMode::DiagonalZero;
    double shift_c = 0.0;  // used when shift_mode == Fixed
    std::uint64_t seed = 0;
};

struct Estimate {
    double value = 0.0;
    double imag_residual = 0.0;
    double std_error = 0.0;
    Complex mean_F = 0.0;
    Complex mean_J = 0.0;
    double var_F = 0.0;  // total complex sample variance E|F - mean|^2
    double var_J = 0.0;
    long long n_used = 0;  // per functional
    double shift_applied = 0.0;
};

inline std::vector<double> discrete_gaussian_weights(const TimeGrid& grid, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("discrete_gaussian_weights: sigma <= 0");
    std::vector<double> w(grid.N_T);
    double sum = 0.0;
    for (int i = 0; i < grid.N_T; ++i) {
        const double t = grid.times[i];
        w[i] = std::exp(-t * t / (2.0 * sigma * sigma));
        sum += w[i];
    }
    for (auto& x : w) x /= sum;
    return w;
}

enum class SampleKind { F, J };

// Each sample draws (i_1 .. i_n) iid from `weights` and returns
//   F = A[i_n][i_1] * prod_{k<n} B[i_k][i_{k+1}]   (J uses B throughout).
// n = 1 collapses to A[i][i] resp. B[i][i] = 1.
inline std::vector<Complex> mc_samples(const CorrelatorSet& corr,
                                       const std::vector<double>& weights, int n, long long count,
                                       SampleKind kind, Rng& rng) {
    if (n < 1) throw std::invalid_argument("mc_samples: n < 1");
    if (weights.size() != static_cast<std::size_t>(corr.grid.N_T))
        throw std::invalid_argument("mc_samples: weight length mismatch");
    DiscreteSampler sampler(weights);
    const Eigen::MatrixXcd& head = (kind == SampleKind::F) ? corr.A : corr.B;
    std::vector<Complex> out(count);
    std::vector<int> idx(n);
    for (long long s = 0; s < count; ++s) {
        for (int k = 0; k < n; ++k) idx[k] = sampler(rng);
        Complex v = head(idx[n - 1], idx[0]);
        for (int k = 0; k + 1 < n; ++k) v *= corr.B(idx[k], idx[k + 1]);
        out[s] = v;
    }
    return out;
}

namespace detail {
struct ComponentStats {
    Complex mean;
    double v_rr = 0.0, v_ii = 0.0, v_ri = 0.0;  // sample covariances of (re, im)
};

inline ComponentStats component_stats(const std::vector<Complex>& xs) {
    ComponentStats st;
    const double n = static_cast<double>(xs.size());
    Complex m = 0.0;
    for (const auto& x : xs) m += x;
    m /= n;
    st.mean = m;
    if (xs.size() < 2) return st;
    for (const auto& x : xs) {
        const double dr = x.real() - m.real(), di = x.imag() - m.imag();
        st.v_rr += dr * dr;
        st.v_ii += di * di;
        st.v_ri += dr * di;
    }
    const double denom = n - 1.0;
    st.v_rr /= denom;
    st.v_ii /= denom;
    st.v_ri /= denom;
    return st;
}

// Var[Re(c * delta)] for a complex coefficient c and zero-mean perturbation
// delta with the given component covariances.
inline double real_quadform(Complex c, const ComponentStats& st) {
    const double cr = c.real(), ci = c.imag();
    return cr * cr * st.v_rr + ci * ci * st.v_ii - 2.0 * cr * ci * st.v_ri;
}
}  // namespace detail

// Ratio-of-means estimate with first-order error propagation. F and J samples
// are drawn independently, so their covariance is zero.
inline Estimate estimate_mean(const std::vector<Complex>& F, const std::vector<Complex>& J,
                              double shift_c) {
    if (F.empty() || J.empty()) throw std::invalid_argument("estimate_mean: empty samples");
    const auto sf = detail::component_stats(F);
    const auto sj = detail::component_stats(J);
    if (std::abs(sj.mean) < 1e-12) throw std::runtime_error("estimate_mean: degenerate denominator");
    const Complex r = sf.mean / sj.mean;

    Estimate e;
    e.mean_F = sf.mean;
    e.mean_J = sj.mean;
    e.var_F = sf.v_rr + sf.v_ii;
    e.var_J = sj.v_rr + sj.v_ii;
    e.n_used = static_cast<long long>(F.size());
    e.shift_applied = shift_c;
    e.value = r.real() + shift_c;
    e.imag_residual = std::abs(r.imag());
    // d(F/J) = dF/J - (F/J^2) dJ
    const double var = detail::real_quadform(1.0 / sj.mean, sf) / double(F.size()) +
                       detail::real_quadform(sf.mean / (sj.mean * sj.mean), sj) / double(J.size());
    e.std_error = std::sqrt(std::max(0.0, var));
    return e;
}

// Theorem-2 style sample sizing: K batches with N_batch samples each per
// functional guarantee |estimate - truth| <= eps with probability 1 - delta.
inline std::pair<int, long long> mom_sample_complexity(double eps, double delta, double f_abs,
                                                       double j_abs) {
    if (!(eps > 0.0) || !(delta > 0.0 && delta < 1.0) || !(j_abs > 0.0))
        throw std::invalid_argument("mom_sample_complexity: bad arguments");
    const int K = static_cast<int>(std::ceil(-8.0 * std::log(delta)));
    const double xi = eps * j_abs * j_abs / (f_abs + j_abs);
    const long long N_batch = static_cast<long long>(std::ceil(4.0 / (xi * xi)));
    return {std::max(1, K), std::max(1LL, N_batch)};
}

inline Estimate estimate_median_of_means(const std::vector<Complex>& F,
                                         const std::vector<Complex>& J, int K, double shift_c) {
    if (K <= 0) throw std::invalid_argument("estimate_median_of_means: K <= 0");
    if (K == 1) return estimate_mean(F, J, shift_c);
    if (F.size() % K != 0 || J.size() % K != 0)
        throw std::invalid_argument("estimate_median_of_means: counts not divisible by K");

    auto batch_means = [K](const std::vector<Complex>& xs) {
        const std::size_t b = xs.size() / K;
        std::vector<Complex> means(K, 0.0);
        for (int k = 0; k < K; ++k) {
            for (std::size_t i = 0; i < b; ++i) means[k] += xs[k * b + i];
            means[k] /= double(b);
        }
        return means;
    };
    auto component_median = [](std::vector<Complex> ms) {
        auto med = [&](auto get) {
            std::vector<double> v(ms.size());
            for (std::size_t i = 0; i < ms.size(); ++i) v[i] = get(ms[i]);
            std::sort(v.begin(), v.end());
            const std::size_t n = v.size();
            return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        };
        return Complex(med([](Complex c) { return c.real(); }),
                       med([](Complex c) { return c.imag(); }));
    };

    const auto mf = batch_means(F);
    const auto mj = batch_means(J);
    const Complex medF = component_median(mf);
    const Complex medJ = component_median(mj);
    if (std::abs(medJ) < 1e-12)
        throw std::runtime_error("estimate_median_of_means: degenerate denominator");
    const Complex r = medF / medJ;

    Estimate e;
    e.mean_F = medF;
    e.mean_J = medJ;
    e.n_used = static_cast<long long>(F.size());
    e.shift_applied = shift_c;
    e.value = r.real() + shift_c;
    e.imag_residual = std::abs(r.imag());
    // per-batch spread diagnostics
    const auto sf = detail::component_stats(mf);
    const auto sj = detail::component_stats(mj);
    e.var_F = sf.v_rr + sf.v_ii;
    e.var_J = sj.v_rr + sj.v_ii;
    std::vector<double> ratios(K);
    for (int k = 0; k < K; ++k)
        ratios[k] = std::abs(mj[k]) > 1e-12 ? (mf[k] / mj[k]).real() : r.real();
    double mean_r = 0.0, var_r = 0.0;
    for (double x : ratios) mean_r += x;
    mean_r /= K;
    for (double x : ratios) var_r += (x - mean_r) * (x - mean_r);
    var_r /= std::max(1, K - 1);
    e.std_error = std::sqrt(var_r / K);
    return e;
}

// A <- A - c B. The default picks c = Re A(0,0) (the t=0 expectation of the
// observable); Lsq minimizes sum |A - cB|^2 over real c. The subtracted c is
// re-added by the estimators through shift_applied.
inline std::pair<CorrelatorSet, double> variance_shift(const CorrelatorSet& corr,
                                                       std::optional<double> c,
                                                       ShiftMode mode = ShiftMode::DiagonalZero) {
    double c_used = 0.0;
    if (c) {
        c_used = *c;
    } else if (mode == ShiftMode::Lsq) {
        double num = 0.0, den = 0.0;
        for (Eigen::Index i = 0; i < corr.A.rows(); ++i)
            for (Eigen::Index j = 0; j < corr.A.cols(); ++j) {
                num += (corr.A(i, j) * std::conj(corr.B(i, j))).real();
                den += std::norm(corr.B(i, j));
            }
        c_used = den > 0.0 ? num / den : 0.0;
    } else if (mode == ShiftMode::DiagonalZero) {
        c_used = corr.A(corr.grid.mid(), corr.grid.mid()).real();
    }
    CorrelatorSet out = corr;
    out.A -= c_used * out.B;
    return {std::move(out), c_used};
}

// Exact expectation of the MC estimator over the discrete distribution:
//   F_n = sum over all tuples  w_{i1} .. w_{in} A[i_n][i_1] prod B[i_k][i_{k+1}].
// Explicit summation, cost N_T^n; n capped at 3.
inline std::pair<Complex, Complex> quadrature_riemann(const CorrelatorSet& corr,
                                                      const std::vector<double>& weights, int n) {
    if (n < 1) throw std::invalid_argument("quadrature_riemann: n < 1");
    if (n > 3) throw std::runtime_error("quadrature_riemann: n > 3 exceeds the cost cap");
    const int m = corr.grid.N_T;
    Complex F = 0.0, J = 0.0;
    if (n == 1) {
        for (int i = 0; i < m; ++i) {
            F += weights[i] * corr.A(i, i);
            J += weights[i] * corr.B(i, i);
        }
    } else if (n == 2) {
        for (int i1 = 0; i1 < m; ++i1)
            for (int i2 = 0; i2 < m; ++i2) {
                const double w = weights[i1] * weights[i2];
                F += w * corr.A(i2, i1) * corr.B(i1, i2);
                J += w * corr.B(i2, i1) * corr.B(i1, i2);
            }
    } else {
        for (int i1 = 0; i1 < m; ++i1)
            for (int i2 = 0; i2 < m; ++i2) {
                const double w12 = weights[i1] * weights[i2];
                const Complex b12 = corr.B(i1, i2);
                for (int i3 = 0; i3 < m; ++i3) {
                    const double w = w12 * weights[i3];
                    const Complex chain = b12 * corr.B(i2, i3);
                    F += w * corr.A(i3, i1) * chain;
                    J += w * corr.B(i3, i1) * chain;
                }
            }
    }
    return {F, J};
}

// rho_bar = sum_i w_i |psi(t_i)><psi(t_i)| on the discrete grid.
inline Eigen::MatrixXcd build_rho_bar_discrete(const Statevector& initial,
                                               const SpectralDecomposition& spec,
                                               const TimeGrid& grid,
                                               const std::vector<double>& weights) {
    if (initial.n_qubits > 12)
        throw std::runtime_error("build_rho_bar_discrete: dense cap of 12 qubits exceeded");
    const Eigen::MatrixXcd S = detail::grid_states(initial, spec, grid);
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(S.rows(), S.rows());
    for (int i = 0; i < grid.N_T; ++i) rho += weights[i] * S.col(i) * S.col(i).adjoint();
    return rho;
}

// Continuous Gaussian average: in the energy eigenbasis
//   rho_jk = c_j c_k^* exp(-(E_j - E_k)^2 sigma^2 / 2),
// rotated back to the computational basis.
inline Eigen::MatrixXcd build_rho_bar_analytic(const Statevector& initial,
                                               const SpectralDecomposition& spec, double sigma) {
    if (initial.n_qubits > 12)
        throw std::runtime_error("build_rho_bar_analytic: dense cap of 12 qubits exceeded");
    const Eigen::VectorXcd c = spec.eigenvectors.adjoint() * initial.amp;
    Eigen::MatrixXcd rho(c.size(), c.size());
    for (Eigen::Index j = 0; j < c.size(); ++j)
        for (Eigen::Index k = 0; k < c.size(); ++k) {
            const double d = spec.energies(j) - spec.energies(k);
            rho(j, k) = c(j) * std::conj(c(k)) * std::exp(-0.5 * d * d * sigma * sigma);
        }
    return spec.eigenvectors * rho * spec.eigenvectors.adjoint();
}

// Exact virtual-distillation ratio tr[rho^n O] / tr[rho^n].
inline double vd_oracle(const Eigen::MatrixXcd& rho_bar, const PauliSum& O, int n) {
    if (n < 1) throw std::invalid_argument("vd_oracle: n < 1");
    if (rho_bar.rows() > 4096) throw std::runtime_error("vd_oracle: matrix too large");
    Eigen::MatrixXcd pw = rho_bar;
    for (int k = 1; k < n; ++k) pw = pw * rho_bar;
    const Complex den = pw.trace();
    const Complex num = (pw * O.dense()).trace();
    return (num / den).real();
}

struct CopyExtrapolation {
    double value = 0.0;  // fitted n -> infinity limit a
    bool degenerate = false;
    double a = 0.0, b = 0.0, c = 0.0;
};

// Nonlinear least squares of f(n) = a + c b^n. For a fixed b the problem is
// linear in (a, c); b is located by a coarse scan plus golden-section
// refinement, seeded by the successive-difference ratio.
inline CopyExtrapolation extrapolate_copies(const std::vector<std::pair<int, double>>& pts) {
    if (pts.size() < 3) throw std::invalid_argument("extrapolate_copies: need >= 3 points");
    {
        std::vector<int> ns;
        for (const auto& [n, v] : pts) ns.push_back(n);
        std::sort(ns.begin(), ns.end());
        if (std::adjacent_find(ns.begin(), ns.end()) != ns.end())
            throw std::invalid_argument("extrapolate_copies: duplicate n");
    }
    auto sorted = pts;
    std::sort(sorted.begin(), sorted.end());

    bool flat = true;
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (std::abs(sorted[i].second - sorted[i - 1].second) > 1e-12) flat = false;
    if (flat) {
        CopyExtrapolation out;
        out.value = out.a = sorted.back().second;
        out.degenerate = true;
        return out;
    }

    // residual of the best linear (a, c) for the given b
    auto sse = [&](double b, double* a_out = nullptr, double* c_out = nullptr) {
        Eigen::MatrixXd X(sorted.size(), 2);
        Eigen::VectorXd y(sorted.size());
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            X(i, 0) = 1.0;
            X(i, 1) = std::pow(b, sorted[i].first);
            y(i) = sorted[i].second;
        }
        const Eigen::Vector2d ac = (X.transpose() * X).ldlt().solve(X.transpose() * y);
        if (a_out) *a_out = ac(0);
        if (c_out) *c_out = ac(1);
        return (X * ac - y).squaredNorm();
    };

    double best_b = 0.0, best = std::numeric_limits<double>::infinity();
    for (int i = 1; i < 4000; ++i) {
        const double b = -0.9995 + i * (1.999 / 4000.0);
        if (std::abs(b) < 1e-6) continue;
        const double s = sse(b);
        if (s < best) {
            best = s;
            best_b = b;
        }
    }
    // golden-section polish
    double lo = best_b - 2e-3, hi = best_b + 2e-3;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = sse(x1), f2 = sse(x2);
    for (int it = 0; it < 200; ++it) {
        if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = sse(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = sse(x2);
        }
    }
    CopyExtrapolation out;
    out.b = 0.5 * (lo + hi);
    sse(out.b, &out.a, &out.c);
    out.value = out.a;
    if (!std::isfinite(out.value)) throw std::runtime_error("extrapolate_copies: fit diverged");
    return out;
}

// End-to-end single estimate from a correlator grid: Gaussian weights, the
// variance shift, MC sampling with per-batch child streams, and the chosen
// estimator. Sampling is partitioned by batch index so the result does not
// depend on any thread layout.
inline Estimate dde_estimate(const CorrelatorSet& corr, const DdeConfig& cfg) {
    const double sigma = cfg.sigma > 0.0 ? cfg.sigma : corr.grid.T / 4.0;
    const auto weights = discrete_gaussian_weights(corr.grid, sigma);

    std::optional<double> fixed;
    if (cfg.shift_mode == ShiftMode::Fixed) fixed = cfg.shift_c;
    if (cfg.shift_mode == ShiftMode::None) fixed = 0.0;
    auto [shifted, c_used] = variance_shift(corr, fixed, cfg.shift_mode);

    Rng root(cfg.seed);
    std::vector<Complex> F, J;
    if (cfg.estimator == EstimatorKind::Mean) {
        if (cfg.n_mc < 1) throw std::invalid_argument("dde_estimate: n_mc < 1");
        Rng rf = root.child(1), rj = root.child(2);
        F = mc_samples(shifted, weights, cfg.n_copies, cfg.n_mc, SampleKind::F, rf);
        J = mc_samples(shifted, weights, cfg.n_copies, cfg.n_mc, SampleKind::J, rj);
        return estimate_mean(F, J, c_used);
    }
    if (cfg.K < 1 || cfg.N_batch < 1)
        throw std::invalid_argument("dde_estimate: bad median-of-means shape");
    F.reserve(cfg.K * cfg.N_batch);
    J.reserve(cfg.K * cfg.N_batch);
    for (int k = 0; k < cfg.K; ++k) {
        Rng rk = root.child(100 + k);
        auto batch = mc_samples(shifted, weights, cfg.n_copies, cfg.N_batch, SampleKind::F, rk);
        F.insert(F.end(), batch.begin(), batch.end());
    }
    for (int k = 0; k < cfg.K; ++k) {
        Rng rk = root.child(200 + k);
        auto batch = mc_samples(shifted, weights, cfg.n_copies, cfg.N_batch, SampleKind::J, rk);
        J.insert(J.end(), batch.begin(), batch.end());
    }
    return estimate_median_of_means(F, J, cfg.K, c_used);
}

}  // namespace dde
