#pragma once

#include "dde/engine.hpp"

namespace dde {

struct PopulationVector {
    std::vector<double> p;
    int q_index = 0;

    PopulationVector() = default;
    PopulationVector(std::vector<double> pops, int q) : p(std::move(pops)), q_index(q) {
        double sum = 0.0;
        for (double x : p) {
            if (x < -1e-12) throw std::invalid_argument("PopulationVector: negative entry");
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-10)
            throw std::invalid_argument("PopulationVector: populations do not sum to 1");
        if (q_index < 0 || q_index >= static_cast<int>(p.size()))
            throw std::invalid_argument("PopulationVector: q_index out of range");
    }

    double p_q() const { return p[q_index]; }

    // renormalized sub-dominant distribution p'_k = p_k / sum_{i != q} p_i
    std::vector<double> subdominant() const {
        std::vector<double> out;
        double rest = 0.0;
        for (int k = 0; k < static_cast<int>(p.size()); ++k)
            if (k != q_index) rest += p[k];
        if (rest <= 0.0) return out;
        for (int k = 0; k < static_cast<int>(p.size()); ++k)
            if (k != q_index) out.push_back(p[k] / rest);
        return out;
    }
};

// H_a(p) = ln(sum p^a) / (1 - a); a = inf gives min-entropy -ln max p.
inline double renyi_entropy(const std::vector<double>& p, double a) {
    if (a == 1.0) throw std::invalid_argument("renyi_entropy: a = 1 (Shannon) unsupported");
    if (!(a > 0.0)) throw std::invalid_argument("renyi_entropy: a <= 0");
    if (p.empty()) throw std::invalid_argument("renyi_entropy: empty distribution");
    if (std::isinf(a)) {
        double mx = 0.0;
        for (double x : p) mx = std::max(mx, x);
        return -std::log(mx);
    }
    double s = 0.0;
    for (double x : p)
        if (x > 0.0) s += std::pow(x, a);
    return std::log(s) / (1.0 - a);
}

struct GapResult {
    double delta = 0.0;
    bool degenerate = false;
    bool single_eigenstate = false;
};

// Smallest energy difference between distinct eigenstates carrying weight in c.
inline GapResult spectral_gap(const SpectralDecomposition& spec, const Eigen::VectorXcd& c,
                              double support_tol = 1e-12) {
    std::vector<int> support;
    for (Eigen::Index k = 0; k < c.size(); ++k)
        if (std::abs(c(k)) > support_tol) support.push_back(static_cast<int>(k));
    GapResult out;
    if (support.size() < 2) {
        out.single_eigenstate = true;
        return out;
    }
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < support.size(); ++i)
        for (std::size_t j = i + 1; j < support.size(); ++j)
            best = std::min(best, std::abs(spec.energies(support[i]) - spec.energies(support[j])));
    if (best < 1e-10) {
        out.degenerate = true;
        out.delta = 0.0;
    } else {
        out.delta = best;
    }
    return out;
}

struct BoundReport {
    double hs_bound = 0.0;
    double trace_bound = 0.0;
    double hs_actual = 0.0;
    double trace_actual = 0.0;
    double delta = 0.0;
    double h2 = 0.0;
    double c_l1 = 0.0;     // l1 norm of c in the eigenbasis of E
    double e_l1 = 0.0;     // trace norm of E (validity-condition input)
    double a_bound = 0.0;  // |A| bound (filled by lemma2_bound callers)
    double q_bound = 0.0;  // |Q| two-term bound (filled by theorem1_bound callers)
    bool degenerate = false;
    bool single_eigenstate = false;
};

// Off-diagonal remainder of the Gaussian time average in the energy
// eigenbasis: E_jk = c_j c_k^* e^{-(E_j - E_k)^2 sigma^2 / 2}, j != k. Both
// norms and the proof's ||c||_1 are computed exactly on the support block (E
// vanishes wherever c does).
inline BoundReport lemma1_bounds(const Eigen::VectorXcd& c, const SpectralDecomposition& spec,
                                 double sigma, double support_tol = 1e-12) {
    if (c.size() != spec.energies.size())
        throw std::invalid_argument("lemma1_bounds: dimension mismatch");
    BoundReport rep;

    std::vector<double> p(c.size());
    for (Eigen::Index k = 0; k < c.size(); ++k) p[k] = std::norm(c(k));
    rep.h2 = renyi_entropy(p, 2.0);

    const GapResult gap = spectral_gap(spec, c, support_tol);
    rep.delta = gap.delta;
    rep.degenerate = gap.degenerate;
    rep.single_eigenstate = gap.single_eigenstate;

    std::vector<int> support;
    double outside_l1 = 0.0;
    for (Eigen::Index k = 0; k < c.size(); ++k) {
        if (std::abs(c(k)) > support_tol)
            support.push_back(static_cast<int>(k));
        else
            outside_l1 += std::abs(c(k));
    }
    const int m = static_cast<int>(support.size());
    if (m >= 2) {
        Eigen::MatrixXcd E(m, m);
        double hs2 = 0.0;
        for (int i = 0; i < m; ++i) {
            E(i, i) = 0.0;
            for (int j = i + 1; j < m; ++j) {
                const double d = spec.energies(support[i]) - spec.energies(support[j]);
                const double g = std::exp(-0.5 * d * d * sigma * sigma);
                E(i, j) = c(support[i]) * std::conj(c(support[j])) * g;
                E(j, i) = std::conj(E(i, j));
                hs2 += 2.0 * std::norm(E(i, j));
            }
        }
        rep.hs_actual = std::sqrt(hs2);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(E);
        rep.trace_actual = es.eigenvalues().cwiseAbs().sum();
        Eigen::VectorXcd cs(m);
        for (int i = 0; i < m; ++i) cs(i) = c(support[i]);
        rep.c_l1 = (es.eigenvectors().adjoint() * cs).cwiseAbs().sum() + outside_l1;
        rep.e_l1 = rep.trace_actual;
    } else {
        rep.c_l1 = c.cwiseAbs().sum();
    }

    const double supp = gap.single_eigenstate ? 0.0 : std::exp(-0.5 * rep.delta * rep.delta *
                                                               sigma * sigma);
    rep.hs_bound = (m >= 2 ? supp : 0.0) * std::sqrt(std::max(0.0, 1.0 - std::exp(-rep.h2)));
    rep.trace_bound = (m >= 2 ? supp : 0.0) * rep.c_l1;
    return rep;
}

// |A| <= 2 (p_q^-1 - 1)^n e^{-(n-1) H_n(p')}.
inline double lemma2_bound(const PopulationVector& pop, int n) {
    if (n < 1) throw std::invalid_argument("lemma2_bound: n < 1");
    const double pq = pop.p_q();
    const auto sub = pop.subdominant();
    if (sub.empty() || pq >= 1.0) return 0.0;
    double ent = 0.0;
    if (n > 1) ent = renyi_entropy(sub, static_cast<double>(n));
    return 2.0 * std::pow(1.0 / pq - 1.0, n) * std::exp(-(n - 1) * ent);
}

// |Q| <= lemma2 + 4 n p_q^-1 e^{-Delta^2 sigma^2 / 2} ||c||_1 ||O||_inf
// (the O(||E||_1^2) tail is dropped).
inline double theorem1_bound(const PopulationVector& pop, int n, double delta, double sigma,
                             double c_l1, double o_norm_inf) {
    const double lem2 = lemma2_bound(pop, n);
    const double tail = 4.0 * n / pop.p_q() * std::exp(-0.5 * delta * delta * sigma * sigma) *
                        c_l1 * o_norm_inf;
    return lem2 + tail;
}

// Sufficient condition for Theorem 1's expansion: ||E||_1 < p_q / (e n).
inline bool theorem1_valid(double e_l1, double p_q, int n) {
    return e_l1 < p_q / (M_E * n);
}

struct ResourceEstimate {
    int n = 1;
    double sigma = 0.0;
};

// Closed-form copy count and window width hitting a target bias Q.
inline ResourceEstimate resource_estimate(double Q_target, const PopulationVector& pop,
                                          double delta, double c_l1, double o_norm_inf) {
    if (!(Q_target > 0.0) || Q_target >= 1.0)
        throw std::invalid_argument("resource_estimate: Q_target outside (0,1)");
    const double pq = pop.p_q();
    if (pq <= 0.5) throw std::runtime_error("resource_estimate: requires p_q > 1/2");
    ResourceEstimate out;
    const auto sub = pop.subdominant();
    if (sub.empty()) {
        out.n = 1;
    } else {
        const double h_inf = renyi_entropy(sub, std::numeric_limits<double>::infinity());
        const double num = std::log(4.0 / Q_target) + h_inf;
        const double den = std::log(1.0 / (1.0 / pq - 1.0)) + h_inf;
        out.n = std::max(1, static_cast<int>(std::ceil(num / den)));
    }
    if (!(delta > 0.0)) throw std::invalid_argument("resource_estimate: delta <= 0");
    out.sigma = std::sqrt(2.0 * std::log(out.n / Q_target) +
                          2.0 * std::log(8.0 * c_l1 * o_norm_inf)) /
                delta;
    return out;
}

// Implementable surrogate of the Lemma 3 shot-count scaling:
// p_q^{-2n} / eps^2 with n from the copy-count formula.
inline double shot_complexity(const PopulationVector& pop, double Q_target, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("shot_complexity: eps <= 0");
    const double pq = pop.p_q();
    const auto sub = pop.subdominant();
    int n = 1;
    if (!sub.empty() && pq > 0.5) {
        const double h_inf = renyi_entropy(sub, std::numeric_limits<double>::infinity());
        const double num = std::log(4.0 / Q_target) + h_inf;
        const double den = std::log(1.0 / (1.0 / pq - 1.0)) + h_inf;
        n = std::max(1, static_cast<int>(std::ceil(num / den)));
    }
    return std::pow(pq, -2.0 * n) / (eps * eps);
}

// Spectral norm of an observable, exact at dense sizes.
inline double operator_norm_inf(const PauliSum& O) {
    const auto spec = diagonalize(O);
    return std::max(std::abs(spec.energies(0)),
                    std::abs(spec.energies(spec.energies.size() - 1)));
}

}  // namespace dde
