#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rscopt/activation.hpp"
#include "rscopt/matrix.hpp"
#include "rscopt/rng.hpp"

namespace rscopt {

/// The generalized family is orthogonal under the N(0, a) weight. Two
/// scalings are exposed: the orthonormal convention Hhat_r^[a](x) = H_r(x/sqrt a)
/// (unit norm under N(0,a), the default) and the display convention carrying an
/// extra a^{r/2} factor.
enum class HermiteConvention { orthonormal, display };

/// Normalized probabilist's Hermite polynomial H_r (orthonormal under N(0,1)),
/// by the three-term recurrence sqrt(r+1) H_{r+1} = x H_r - sqrt(r) H_{r-1}.
inline double hermite_std(std::size_t r, double x) {
    double hm = 0.0, h = 1.0;  // H_{-1}, H_0
    for (std::size_t k = 0; k < r; ++k) {
        const double hn = (x * h - std::sqrt(static_cast<double>(k)) * hm) /
                          std::sqrt(static_cast<double>(k + 1));
        hm = h;
        h = hn;
    }
    return h;
}

inline double hermite_eval(std::size_t r, double x, double a,
                           HermiteConvention conv = HermiteConvention::orthonormal) {
    if (!(a > 0.0)) throw std::invalid_argument("hermite_eval: variance a must be positive");
    const double v = hermite_std(r, x / std::sqrt(a));
    if (conv == HermiteConvention::display) return std::pow(a, 0.5 * static_cast<double>(r)) * v;
    return v;
}

/// Normalized physicist's Hermite polynomial Htilde_r(x) = Hphys_r(x)/(2^r sqrt(r!)),
/// which coincides with the display-convention generalized family at a = 1/2.
inline double hermite_physicist(std::size_t r, double x) {
    double hm = 0.0, h = 1.0;  // unnormalized physicist's recurrence
    for (std::size_t k = 0; k < r; ++k) {
        const double hn = 2.0 * x * h - 2.0 * static_cast<double>(k) * hm;
        hm = h;
        h = hn;
    }
    double norm = 1.0;
    for (std::size_t k = 1; k <= r; ++k) norm *= 4.0 * static_cast<double>(k);
    return h / std::sqrt(norm);
}

struct Quadrature {
    std::vector<double> nodes;    // abscissae for the standard normal weight
    std::vector<double> weights;  // sum to 1
};

/// Gauss-Hermite rule for the N(0,1) weight via Golub-Welsch: eigenvalues of
/// the Jacobi matrix (zero diagonal, off-diagonal sqrt(k)) are the nodes and
/// squared first eigenvector components the weights.
inline Quadrature gauss_hermite(std::size_t n) {
    if (n < 1 || n > 1024) throw std::invalid_argument("gauss_hermite: need 1 <= n <= 1024");
    Matrix J(n, n);
    for (std::size_t k = 1; k < n; ++k) {
        const double b = std::sqrt(static_cast<double>(k));
        J(k - 1, k) = b;
        J(k, k - 1) = b;
    }
    const EigResult e = sym_eig(J);
    Quadrature q;
    q.nodes.resize(n);
    q.weights.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        q.nodes[k] = e.values[n - 1 - k];  // ascending
        const double w0 = e.vectors(0, n - 1 - k);
        q.weights[k] = w0 * w0;
    }
    return q;
}

struct HermiteCoeffs {
    double variance = 1.0;  // a
    std::vector<double> mu;  // mu[r], r = 0..R, orthonormal convention
    std::size_t quadrature_nodes = 0;
};

/// mu_r = E_{z ~ N(0,a)}[phi(z) Hhat_r^[a](z)] by Gauss-Hermite quadrature.
/// Display-convention coefficients follow by the a^{+-r/2} rescale.
inline HermiteCoeffs hermite_coeffs(const Activation& act, double a, std::size_t R,
                                    std::size_t nodes = 200) {
    if (!(a > 0.0)) throw std::invalid_argument("hermite_coeffs: variance a must be positive");
    if (nodes < 2 * R + 2) throw std::invalid_argument("hermite_coeffs: nodes >= 2R+2 required");
    const Quadrature q = gauss_hermite(nodes);
    const double sa = std::sqrt(a);
    HermiteCoeffs c;
    c.variance = a;
    c.quadrature_nodes = nodes;
    c.mu.assign(R + 1, 0.0);
    for (std::size_t k = 0; k < nodes; ++k) {
        const double phi = act.eval(sa * q.nodes[k]);
        double hm = 0.0, h = 1.0;
        for (std::size_t r = 0; r <= R; ++r) {
            c.mu[r] += q.weights[k] * phi * h;
            const double hn = (q.nodes[k] * h - std::sqrt(static_cast<double>(r)) * hm) /
                              std::sqrt(static_cast<double>(r + 1));
            hm = h;
            h = hn;
        }
    }
    double total = 0.0;
    for (double m : c.mu) total += m * m;
    if (R >= 1 && c.mu[R] * c.mu[R] >= 1e-10 * std::max(total, 1e-300))
        throw std::runtime_error("hermite_coeffs: tail check failed, raise the order limit");
    return c;
}

/// c_{phi,sigma0} = E_{z ~ N(0, sigma0^2)}[phi(z)^2]
inline double c_phi_sigma0(const Activation& act, double sigma0, std::size_t nodes = 200) {
    if (!(sigma0 > 0.0)) throw std::invalid_argument("c_phi_sigma0: sigma0 must be positive");
    const Quadrature q = gauss_hermite(nodes);
    double s = 0.0;
    for (std::size_t k = 0; k < nodes; ++k) {
        const double phi = act.eval(sigma0 * q.nodes[k]);
        s += q.weights[k] * phi * phi;
    }
    return s;
}

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

/// Monte Carlo estimate of E_g[ H_r^[a_x](c_x <g,u_x>) H_r'^[a_y](c_y <g,u_y>) ]
/// with g ~ N(0, sigma^2 I), a_x = sigma^2 c_x^2, a_y = sigma^2 c_y^2, under the
/// selected convention. Under the orthonormal convention the closed form is
/// <u_x,u_y>^r delta_{rr'}.
inline McEstimate hermite_product_expectation(std::size_t r, std::size_t r2, double c_x,
                                              double c_y, double sigma,
                                              const std::vector<double>& u_x,
                                              const std::vector<double>& u_y,
                                              std::size_t samples, std::uint64_t seed,
                                              HermiteConvention conv =
                                                  HermiteConvention::orthonormal) {
    if (u_x.size() != u_y.size())
        throw std::invalid_argument("hermite_product_expectation: dimension mismatch");
    if (std::abs(norm2(u_x) - 1.0) > 1e-10 || std::abs(norm2(u_y) - 1.0) > 1e-10)
        throw std::invalid_argument("hermite_product_expectation: directions must be unit");
    if (samples < 10000)
        throw std::invalid_argument("hermite_product_expectation: samples >= 1e4 required");
    const double ax = sigma * sigma * c_x * c_x;
    const double ay = sigma * sigma * c_y * c_y;
    const std::size_t dim = u_x.size();
    SeqRng rng(seed, /*stream=*/0x4e70u);
    double sum = 0.0, sumsq = 0.0;
    std::vector<double> g(dim);
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t i = 0; i < dim; ++i) g[i] = sigma * rng.normal();
        const double t = hermite_eval(r, c_x * dot(g, u_x), ax, conv) *
                         hermite_eval(r2, c_y * dot(g, u_y), ay, conv);
        sum += t;
        sumsq += t * t;
    }
    McEstimate e;
    const double n = static_cast<double>(samples);
    e.estimate = sum / n;
    const double var = std::max(sumsq / n - e.estimate * e.estimate, 0.0);
    e.std_error = std::sqrt(var / n);
    return e;
}

struct NTKBoundConstants {
    double c_phi_sigma0 = 0.0;
    double nu0_sq = 0.0;                // sigma0^2 / c_{phi,sigma0}
    std::vector<double> mu_r0_sq;       // index r; min over the c-grid of mu_r^2
    std::vector<double> c0_lr;          // index r; c0^{(L-1, r)}
    double c0 = 0.0;
    std::size_t best_r = 0;
    bool degenerate = false;            // every order r >= 2 had vanishing coefficients
    double lambda1 = 0.0, lambda1_se = 0.0, lambda0 = 0.0;  // filled by callers
};

inline double c0_of(double mu_r0_sq, double c_phi, double sigma0, std::size_t l, std::size_t r) {
    return std::pow(mu_r0_sq / (6.0 * c_phi), static_cast<double>(l)) *
           std::pow(sigma0 * sigma0 / 2.0, 3.0 * static_cast<double>(r) *
                                               static_cast<double>(l));
}

/// Kernel lower-bound constants: (mu_{r,0})^2 minimized over a 32-point grid of
/// c in [sqrt(c_phi/2), sqrt(3 c_phi/2)] with coefficients taken at variance
/// c^2 nu0^2; c0 = max over r in {2..R} of c0^{(L-1,r)}, skipping orders whose
/// coefficients vanish identically (odd activations at even r).
inline NTKBoundConstants ntk_lower_bound_constants(std::size_t depth, const Activation& act,
                                                   double sigma0, std::size_t R,
                                                   std::size_t grid = 32) {
    if (depth < 1 || R < 2) throw std::invalid_argument("ntk_lower_bound_constants: bad orders");
    NTKBoundConstants out;
    out.c_phi_sigma0 = c_phi_sigma0(act, sigma0);
    out.nu0_sq = sigma0 * sigma0 / out.c_phi_sigma0;
    const double lo = std::sqrt(out.c_phi_sigma0 / 2.0);
    const double hi = std::sqrt(3.0 * out.c_phi_sigma0 / 2.0);
    out.mu_r0_sq.assign(R + 1, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < grid; ++i) {
        const double c = lo + (hi - lo) * static_cast<double>(i) /
                                  static_cast<double>(grid - 1);
        const HermiteCoeffs hc = hermite_coeffs(act, c * c * out.nu0_sq, R);
        for (std::size_t r = 0; r <= R; ++r)
            out.mu_r0_sq[r] = std::min(out.mu_r0_sq[r], hc.mu[r] * hc.mu[r]);
    }
    const std::size_t l = depth - 1;
    out.c0_lr.assign(R + 1, 0.0);
    out.c0 = 0.0;
    out.degenerate = true;
    for (std::size_t r = 2; r <= R; ++r) {
        out.c0_lr[r] = c0_of(out.mu_r0_sq[r], out.c_phi_sigma0, sigma0, l, r);
        if (out.mu_r0_sq[r] > 1e-20) {
            out.degenerate = false;
            if (out.c0_lr[r] > out.c0) {
                out.c0 = out.c0_lr[r];
                out.best_r = r;
            }
        }
    }
    return out;
}

/// lambda_min of the Monte Carlo estimate of E_g[phi(Xg/sqrt d) phi(Xg/sqrt d)^T]
/// with g ~ N(0, sigma^2 I_d); standard error from 10-fold batch splitting.
inline McEstimate lambda1_estimate(const Matrix& X, double sigma, const Activation& act,
                                   std::size_t samples, std::uint64_t seed,
                                   bool check_rows = true) {
    const std::size_t n = X.rows, d = X.cols;
    if (n > 512) throw std::length_error("lambda1_estimate: size limit n <= 512 exceeded");
    if (check_rows) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < d; ++j) s += X(i, j) * X(i, j);
            if (std::abs(s - static_cast<double>(d)) > 1e-6 * static_cast<double>(d))
                throw std::invalid_argument("lambda1_estimate: rows must satisfy ||x||^2 = d");
        }
    }
    const std::size_t folds = 10;
    const std::size_t per_fold = std::max<std::size_t>(samples / folds, 1);
    SeqRng rng(seed, /*stream=*/0x11a1u);
    Matrix total(n, n);
    std::vector<double> fold_lmins;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<double> g(d), u;
    for (std::size_t f = 0; f < folds; ++f) {
        Matrix G(n, n);
        for (std::size_t s = 0; s < per_fold; ++s) {
            for (std::size_t j = 0; j < d; ++j) g[j] = sigma * rng.normal();
            u = matvec(X, g);
            for (double& x : u) x = act.eval(x * scale);
            cblas_dger(CblasRowMajor, static_cast<int>(n), static_cast<int>(n), 1.0, u.data(), 1,
                       u.data(), 1, G.a.data(), static_cast<int>(n));
        }
        for (double& x : G.a) x /= static_cast<double>(per_fold);
        fold_lmins.push_back(min_eigenvalue(G));
        for (std::size_t i = 0; i < G.a.size(); ++i) total.a[i] += G.a[i];
    }
    for (double& x : total.a) x /= static_cast<double>(folds);
    McEstimate e;
    e.estimate = min_eigenvalue(total);
    double mean = 0.0;
    for (double v : fold_lmins) mean += v;
    mean /= static_cast<double>(folds);
    double var = 0.0;
    for (double v : fold_lmins) var += (v - mean) * (v - mean);
    var /= static_cast<double>(folds - 1);
    e.std_error = std::sqrt(var / static_cast<double>(folds));
    return e;
}

}  // namespace rscopt
