#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rscopt/matrix.hpp"
#include "rscopt/network.hpp"

namespace rscopt {

inline double gamma_const(double sigma1, double rho, std::size_t m) {
    if (m < 1) throw std::invalid_argument("gamma_const: m >= 1 required");
    return sigma1 + rho / std::sqrt(static_cast<double>(m));
}

/// h(l) = gamma^{l-1} + |phi(0)| * sum_{i=1}^{l-1} gamma^{i-1}; returned vector
/// is indexed h[l] for l = 1..L+1 (h[0] unused), so h[1] = 1 always.
inline std::vector<double> h_seq(double gamma, double phi0_abs, std::size_t L) {
    if (L < 1) throw std::invalid_argument("h_seq: L >= 1 required");
    std::vector<double> h(L + 2, 0.0);
    for (std::size_t l = 1; l <= L + 1; ++l) {
        double s = 0.0, gp = 1.0;
        for (std::size_t i = 1; i + 1 <= l; ++i) {
            s += gp;  // gamma^{i-1}
            gp *= gamma;
        }
        h[l] = std::pow(gamma, static_cast<double>(l - 1)) + phi0_abs * s;
    }
    return h;
}

/// g(a) = a^L + |phi(0)| * sum_{i=1}^L a^i
inline double g_of(double a, double phi0_abs, std::size_t L) {
    double s = 0.0, ap = 1.0;
    for (std::size_t i = 1; i <= L; ++i) {
        ap *= a;
        s += ap;
    }
    return std::pow(a, static_cast<double>(L)) + phi0_abs * s;
}

/// psi_H: max over layer pairs 1 <= l1 < l2 <= L of the three second-derivative
/// norm bounds. For L = 1 the pair range is empty; the single surviving term
/// class beta_phi * h(1)^2 is used (documented extension).
inline double psi_H_const(double gamma, const std::vector<double>& h, double beta_phi,
                          std::size_t L) {
    if (L == 1) return beta_phi * h[1] * h[1];
    double best = 0.0;
    for (std::size_t l1 = 1; l1 < L; ++l1)
        for (std::size_t l2 = l1 + 1; l2 <= L; ++l2) {
            const double t1 = beta_phi * h[l1] * h[l1];
            const double t2 = h[l1] * (0.5 * beta_phi * (gamma * gamma + h[l2] * h[l2]) + 1.0);
            const double t3 = beta_phi * gamma * gamma * h[l1] * h[l2];
            best = std::max({best, t1, t2, t3});
        }
    return best;
}

inline double c_H_const(double gamma, const std::vector<double>& h, double psi_H, double rho1,
                        std::size_t L) {
    const double Ld = static_cast<double>(L);
    const double gL = std::pow(gamma, Ld);
    double max_pow = 0.0, max_h = 0.0;
    for (std::size_t l = 1; l <= L; ++l) {
        max_pow = std::max(max_pow, std::pow(gamma, static_cast<double>(L - l)));
        max_h = std::max(max_h, h[l]);
    }
    return Ld * (Ld * Ld * gL * gL + Ld * gL + 1.0) * (1.0 + rho1) * psi_H * max_pow +
           Ld * gL * max_h;
}

/// varrho^2 = h(L+1)^2 + (1/m)(1+rho1)^2 sum_{l=1}^{L+1} h(l)^2 gamma^{2(L-l)}
inline double varrho_const(double gamma, const std::vector<double>& h, double rho1, std::size_t L,
                           std::size_t m) {
    double s = 0.0;
    for (std::size_t l = 1; l <= L + 1; ++l) {
        const double e = 2.0 * (static_cast<double>(L) - static_cast<double>(l));
        s += h[l] * h[l] * std::pow(gamma, e);
    }
    const double v2 = h[L + 1] * h[L + 1] +
                      (1.0 + rho1) * (1.0 + rho1) * s / static_cast<double>(m);
    return std::sqrt(v2);
}

/// c_{a,b} = (2/n) sum y_i^2 + 2 (1+a)^2 |g(b)|^2
inline double loss_constant(const std::vector<double>& y, double a, double b, double phi0_abs,
                            std::size_t L) {
    if (y.empty()) throw std::invalid_argument("loss_constant: empty labels");
    double sy = 0.0;
    for (double yi : y) sy += yi * yi;
    const double g = g_of(b, phi0_abs, L);
    return 2.0 * sy / static_cast<double>(y.size()) + 2.0 * (1.0 + a) * (1.0 + a) * g * g;
}

/// Every closed-form constant of the analysis, evaluated once per configuration.
struct BoundContext {
    std::size_t L = 1, m = 1;
    double sigma1 = 1.0;
    double beta_phi = 0.0, phi0_abs = 0.0;
    double rho = 1.0, rho1 = 1.0, rho2 = 0.0;
    double kappa = 1.0;
    double loss_a = 2.0, loss_b = 2.0;  // square loss
    double gamma = 0.0;
    std::vector<double> h;  // h[1..L+1]
    double psi_H = 0.0, c_H = 0.0, varrho = 0.0;
    double c_loss_init = 0.0, c_loss_ball = 0.0;  // c_{0,sigma1}, c_{rho1,gamma}
    double beta = 0.0;
};

inline BoundContext make_bound_context(const NetworkConfig& cfg, double rho, double rho1,
                                       double rho2, double kappa) {
    if (!(kappa > 0.0 && kappa <= 1.0))
        throw std::invalid_argument("make_bound_context: kappa must lie in (0,1]");
    BoundContext c;
    c.L = cfg.depth;
    c.m = cfg.width;
    c.sigma1 = cfg.sigma1;
    c.beta_phi = cfg.act.smoothness;
    c.phi0_abs = std::abs(cfg.act.value_at_zero);
    c.rho = rho;
    c.rho1 = rho1;
    c.rho2 = rho2;
    c.kappa = kappa;
    c.gamma = gamma_const(cfg.sigma1, rho, cfg.width);
    c.h = h_seq(c.gamma, c.phi0_abs, c.L);
    c.psi_H = psi_H_const(c.gamma, c.h, c.beta_phi, c.L);
    c.c_H = c_H_const(c.gamma, c.h, c.psi_H, rho1, c.L);
    c.varrho = varrho_const(c.gamma, c.h, rho1, c.L, c.m);
    return c;
}

inline void set_loss_constants(BoundContext& c, const std::vector<double>& y) {
    c.c_loss_init = loss_constant(y, 0.0, c.sigma1, c.phi0_abs, c.L);
    c.c_loss_ball = loss_constant(y, c.rho1, c.gamma, c.phi0_abs, c.L);
}

/// beta = b varrho^2 + c_H sqrt(c_{rho1,gamma}) / sqrt(m)
inline double smoothness_beta(const BoundContext& c) {
    return c.loss_b * c.varrho * c.varrho +
           c.c_H * std::sqrt(c.c_loss_ball) / std::sqrt(static_cast<double>(c.m));
}

/// alpha_t = a kappa^2 ||gbar||^2 - 2 c_H (a varrho rho2 + sqrt(c_{rho1,gamma})) / sqrt(m)
inline double rsc_alpha(double gbar_norm_sq, const BoundContext& c) {
    const double c1 = c.loss_a * c.kappa * c.kappa;
    const double c2 = 2.0 * c.c_H * (c.loss_a * c.varrho * c.rho2 + std::sqrt(c.c_loss_ball));
    return c1 * gbar_norm_sq - c2 / std::sqrt(static_cast<double>(c.m));
}

/// General-loss variant with c4 = 2 a varrho c_H rho2 and c_{4,t} = c_H sqrt(lambda_t),
/// lambda_t = (1/n) sum (loss derivative)^2.
inline double rsc_alpha_general(double gbar_norm_sq, double lambda_t, const BoundContext& c) {
    if (lambda_t < 0.0) throw std::invalid_argument("rsc_alpha_general: lambda_t < 0");
    const double c1 = c.loss_a * c.kappa * c.kappa;
    const double c4 = 2.0 * c.loss_a * c.varrho * c.c_H * c.rho2;
    const double c4t = c.c_H * std::sqrt(lambda_t);
    return c1 * gbar_norm_sq - (c4 + c4t) / std::sqrt(static_cast<double>(c.m));
}

struct BallReport {
    bool member = false;
    std::vector<double> margins;  // rho - spectral deviation per layer, then rho1 - ||v - v0||
};

/// Layerwise spectral ball membership; deviations estimated with 40 power
/// iterations and a 1e-6 slack added to the radii to avoid false negatives.
inline BallReport in_spec_ball(const Params& theta, const Params& theta0, double rho, double rho1,
                               std::uint64_t seed = 7) {
    if (theta.W.size() != theta0.W.size() || theta.v.size() != theta0.v.size())
        throw std::invalid_argument("in_spec_ball: shape mismatch");
    BallReport r;
    r.member = true;
    for (std::size_t l = 0; l < theta.W.size(); ++l) {
        check_same_shape(theta.W[l], theta0.W[l], "in_spec_ball");
        Matrix D = theta.W[l];
        for (std::size_t i = 0; i < D.a.size(); ++i) D.a[i] -= theta0.W[l].a[i];
        const double dev = spectral_norm(D, 40, 1e-10, seed + l);
        r.margins.push_back(rho - dev);
        if (dev > rho + 1e-6) r.member = false;
    }
    std::vector<double> dv = theta.v;
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] -= theta0.v[i];
    const double dvn = norm2(dv);
    r.margins.push_back(rho1 - dvn);
    if (dvn > rho1 + 1e-6) r.member = false;
    return r;
}

/// |cos(theta_candidate - theta_t, gbar)| >= kappa
inline bool in_q_kappa(const std::vector<double>& theta_candidate,
                       const std::vector<double>& theta_t, const std::vector<double>& gbar,
                       double kappa) {
    if (!(kappa > 0.0 && kappa <= 1.0))
        throw std::invalid_argument("in_q_kappa: kappa must lie in (0,1]");
    if (theta_candidate.size() != theta_t.size() || theta_t.size() != gbar.size())
        throw std::invalid_argument("in_q_kappa: length mismatch");
    std::vector<double> disp(theta_t.size());
    for (std::size_t i = 0; i < disp.size(); ++i) disp[i] = theta_candidate[i] - theta_t[i];
    const double nd = norm2(disp), ng = norm2(gbar);
    if (nd == 0.0 || ng == 0.0)
        throw std::invalid_argument("in_q_kappa: undefined cosine (zero displacement or gbar)");
    return std::abs(dot(disp, gbar)) / (nd * ng) >= kappa;
}

}  // namespace rscopt
