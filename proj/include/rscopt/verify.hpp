#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rscopt/bounds.hpp"
#include "rscopt/matrix.hpp"
#include "rscopt/network.hpp"

namespace rscopt {

struct VerificationReport {
    std::string quantity;
    double empirical = 0.0;
    double bound = 0.0;
    bool satisfied = false;
    double margin_ratio = 0.0;  // empirical / bound
    std::string method;
    std::string note;
};

inline VerificationReport make_report(std::string quantity, double empirical, double bound,
                                      std::string method, std::string note = "") {
    VerificationReport r;
    r.quantity = std::move(quantity);
    r.empirical = empirical;
    r.bound = bound;
    r.satisfied = empirical <= bound * (1.0 + 1e-6);
    r.margin_ratio = bound != 0.0 ? empirical / bound : std::numeric_limits<double>::infinity();
    r.method = std::move(method);
    r.note = std::move(note);
    return r;
}

/// ||hessian of f at x||_2: dense finite-difference oracle for small parameter
/// counts, Hessian-vector-product power iteration otherwise.
inline double hessian_spectral_norm(const Params& p, const NetworkConfig& cfg,
                                    const std::vector<double>& x, std::uint64_t seed,
                                    std::string* method = nullptr) {
    const std::size_t psize = p.flat_size();
    if (psize <= 2000) {
        if (method) *method = "dense_oracle";
        const EigResult e = sym_eig(dense_hessian(p, cfg, x));
        return std::max(std::abs(e.values.front()), std::abs(e.values.back()));
    }
    if (method) *method = "power_iteration";
    auto apply = [&](const std::vector<double>& v) {
        const double nv = norm2(v);
        if (nv == 0.0) return std::vector<double>(v.size(), 0.0);
        std::vector<double> unit = v;
        for (double& u : unit) u /= nv;
        std::vector<double> hv = hvp(p, cfg, x, unit);
        for (double& u : hv) u *= nv;
        return hv;
    };
    return power_iteration_spectral_norm(apply, psize, 200, 1e-8, seed);
}

/// max over data rows of the empirical Hessian spectral norm vs c_H / sqrt(m).
inline VerificationReport verify_hessian_bound(const Params& p, const NetworkConfig& cfg,
                                               const BoundContext& ctx, const Matrix& X,
                                               const Params& theta0, std::uint64_t seed = 99) {
    double worst = 0.0;
    std::string method;
    std::vector<double> x(cfg.input_dim);
    for (std::size_t i = 0; i < X.rows; ++i) {
        for (std::size_t j = 0; j < cfg.input_dim; ++j) x[j] = X(i, j);
        worst = std::max(worst, hessian_spectral_norm(p, cfg, x, seed + i, &method));
    }
    const double bound = ctx.c_H / std::sqrt(static_cast<double>(cfg.width));
    std::string note;
    if (!in_spec_ball(p, theta0, ctx.rho, ctx.rho1).member)
        note = "precondition: parameters outside the spectral ball";
    return make_report("hessian_spectral_norm", worst, bound, method, note);
}

/// Lower estimate of the (2,2,1)-norm sup_{|x|=|z|=1} sum_k |x^T M_k z| by
/// alternating sign-weighted ascent with random restarts. Never exceeds the sup.
inline double tensor_221_norm_estimate(const Tensor3& T, std::size_t restarts = 20,
                                       std::size_t iters = 50, std::uint64_t seed = 1) {
    if (restarts < 1) throw std::invalid_argument("tensor_221_norm_estimate: restarts >= 1");
    std::vector<Matrix> M(T.d3);
    for (std::size_t k = 0; k < T.d3; ++k) M[k] = T.slice(k);
    SeqRng rng(seed, /*stream=*/0x2217u);
    auto objective = [&](const std::vector<double>& x, const std::vector<double>& z) {
        double s = 0.0;
        for (std::size_t k = 0; k < T.d3; ++k) s += std::abs(dot(x, matvec(M[k], z)));
        return s;
    };
    double best = 0.0;
    for (std::size_t rs = 0; rs < restarts; ++rs) {
        std::vector<double> x(T.d1), z(T.d2);
        for (double& v : x) v = rng.normal();
        for (double& v : z) v = rng.normal();
        double nx = norm2(x), nz = norm2(z);
        if (nx == 0.0 || nz == 0.0) continue;
        for (double& v : x) v /= nx;
        for (double& v : z) v /= nz;
        for (std::size_t it = 0; it < iters; ++it) {
            // x-step: x proportional to sum_k sign(x^T M_k z) M_k z
            std::vector<double> acc(T.d1, 0.0);
            for (std::size_t k = 0; k < T.d3; ++k) {
                const std::vector<double> yk = matvec(M[k], z);
                const double s = dot(x, yk) >= 0.0 ? 1.0 : -1.0;
                for (std::size_t i = 0; i < T.d1; ++i) acc[i] += s * yk[i];
            }
            nx = norm2(acc);
            if (nx > 0.0)
                for (std::size_t i = 0; i < T.d1; ++i) x[i] = acc[i] / nx;
            // z-step: z proportional to sum_k sign(x^T M_k z) M_k^T x
            std::vector<double> accz(T.d2, 0.0);
            for (std::size_t k = 0; k < T.d3; ++k) {
                const std::vector<double> uk = matvec_t(M[k], x);
                const double s = dot(uk, z) >= 0.0 ? 1.0 : -1.0;
                for (std::size_t j = 0; j < T.d2; ++j) accz[j] += s * uk[j];
            }
            nz = norm2(accz);
            if (nz > 0.0)
                for (std::size_t j = 0; j < T.d2; ++j) z[j] = accz[j] / nz;
        }
        best = std::max(best, objective(x, z));
    }
    return best;
}

/// Column-major index of entry (row a, col b) within vec(W), matching the flat
/// parameter layout.
inline std::size_t vec_index(std::size_t a, std::size_t b, std::size_t rows) {
    return b * rows + a;
}

/// d^2 alpha^(l) / d alpha^(l-1)^2: T(j, k, i) = phi''(pre_i) W_ij W_ik / fan_in.
inline Tensor3 tensor_d2alpha_dalpha2(const Params& p, const NetworkConfig& cfg,
                                      const ForwardTrace& t, std::size_t l) {
    const std::size_t m = cfg.width, f = cfg.fan_in(l);
    Tensor3 T(f, f, m);
    const Matrix& W = p.W[l - 1];
    for (std::size_t i = 0; i < m; ++i) {
        const double c = cfg.act.deriv2(t.preacts[l - 1][i]) / static_cast<double>(f);
        for (std::size_t j = 0; j < f; ++j)
            for (std::size_t k = 0; k < f; ++k) T(j, k, i) = c * W(i, j) * W(i, k);
    }
    return T;
}

/// Mixed d^2 alpha^(l) / d w^(l) d alpha^(l-1): first index runs over vec(W^(l)).
inline Tensor3 tensor_d2alpha_dwdalpha(const Params& p, const NetworkConfig& cfg,
                                       const ForwardTrace& t, std::size_t l) {
    const std::size_t m = cfg.width, f = cfg.fan_in(l);
    Tensor3 T(m * f, f, m);
    const Matrix& W = p.W[l - 1];
    const std::vector<double>& prev = t.alphas[l - 1];
    const double rf = std::sqrt(static_cast<double>(f));
    for (std::size_t i = 0; i < m; ++i) {
        const double d2 = cfg.act.deriv2(t.preacts[l - 1][i]);
        const double d1 = cfg.act.deriv(t.preacts[l - 1][i]);
        for (std::size_t b = 0; b < f; ++b) {
            const std::size_t a_idx = vec_index(i, b, m);
            for (std::size_t j = 0; j < f; ++j) {
                double v = d2 * (prev[b] / rf) * (W(i, j) / rf);
                if (j == b) v += d1 / rf;
                T(a_idx, j, i) = v;
            }
        }
    }
    return T;
}

/// d^2 alpha^(l) / d w^(l)^2: both leading indices run over vec(W^(l)).
inline Tensor3 tensor_d2alpha_dw2(const Params& p, const NetworkConfig& cfg, const ForwardTrace& t,
                                  std::size_t l) {
    const std::size_t m = cfg.width, f = cfg.fan_in(l);
    Tensor3 T(m * f, m * f, m);
    const std::vector<double>& prev = t.alphas[l - 1];
    for (std::size_t i = 0; i < m; ++i) {
        const double c = cfg.act.deriv2(t.preacts[l - 1][i]) / static_cast<double>(f);
        for (std::size_t b = 0; b < f; ++b)
            for (std::size_t d = 0; d < f; ++d)
                T(vec_index(i, b, m), vec_index(i, d, m), i) = c * prev[b] * prev[d];
    }
    return T;
}

/// Random in-ball perturbation: Gaussian layer increments rescaled to the
/// target spectral deviation, Gaussian last-layer increment rescaled to the
/// target Euclidean deviation.
inline Params perturb_in_ball(const Params& p0, const NetworkConfig& cfg, double target_spec_dev,
                              double target_v_dev, std::uint64_t seed) {
    Params p = p0;
    CounterRng rng(seed);
    for (std::size_t l = 0; l < p.W.size(); ++l) {
        if (target_spec_dev <= 0.0) continue;
        Matrix G(p.W[l].rows, p.W[l].cols);
        for (std::size_t i = 0; i < G.a.size(); ++i) G.a[i] = rng.normal(/*stream=*/100 + l, i);
        const double s = spectral_norm(G);
        if (s == 0.0) continue;
        for (std::size_t i = 0; i < G.a.size(); ++i)
            p.W[l].a[i] += target_spec_dev / s * G.a[i];
    }
    if (target_v_dev > 0.0) {
        std::vector<double> g(p.v.size());
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = rng.normal(/*stream=*/200, i);
        const double ng = norm2(g);
        if (ng > 0.0)
            for (std::size_t i = 0; i < g.size(); ++i) p.v[i] += target_v_dev / ng * g[i];
    }
    return p;
}

/// The per-layer and gradient norm checks: spectral/norm bounds on weights,
/// layer Jacobians, layer outputs, sensitivities, predictor and loss gradients,
/// plus the three second-derivative tensor bounds on small layers.
inline std::vector<VerificationReport> verify_appendix_A(const Params& p,
                                                         const NetworkConfig& cfg,
                                                         const BoundContext& ctx, const Matrix& X,
                                                         const std::vector<double>& y = {},
                                                         std::uint64_t seed = 3,
                                                         bool at_init = false) {
    const std::size_t L = cfg.depth, m = cfg.width, n = X.rows;
    const double rm = std::sqrt(static_cast<double>(m));
    std::vector<VerificationReport> out;

    if (at_init) {
        double worst = 0.0;
        for (std::size_t l = 0; l < L; ++l)
            worst = std::max(worst, spectral_norm(p.W[l], 400, 1e-10, seed + l));
        out.push_back(make_report("init_weight_spectral", worst, cfg.sigma1 * rm,
                                  "power_iteration", "probabilistic bound"));
    }

    std::vector<double> max_dada(L, 0.0), max_dadw(L, 0.0), max_alpha(L, 0.0);
    std::vector<double> max_b2(L, 0.0), max_binf(L, 0.0);
    double max_gradf = 0.0, max_gradx = 0.0;
    std::vector<double> f_vals(n);
    std::vector<double> x(cfg.input_dim);
    const bool tiny = m <= 16 && cfg.input_dim <= 16;
    std::vector<double> max_t1(L, 0.0), max_t2(L, 0.0), max_t3(L, 0.0);

    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t j = 0; j < cfg.input_dim; ++j) x[j] = X(s, j);
        const ForwardTrace t = forward(p, cfg, x);
        const GradientBundle g = backward(p, cfg, t);
        f_vals[s] = t.output;
        for (std::size_t l = 1; l <= L; ++l) {
            const std::size_t f = cfg.fan_in(l);
            const double rf = std::sqrt(static_cast<double>(f));
            Matrix DW = p.W[l - 1];
            for (std::size_t i = 0; i < m; ++i) {
                const double di = t.act_derivs[l - 1][i] / rf;
                for (std::size_t j = 0; j < f; ++j) DW(i, j) *= di;
            }
            max_dada[l - 1] = std::max(max_dada[l - 1], spectral_norm(DW, 400, 1e-10, seed));
            double dmax = 0.0;
            for (double d : t.act_derivs[l - 1]) dmax = std::max(dmax, std::abs(d));
            max_dadw[l - 1] =
                std::max(max_dadw[l - 1], dmax * norm2(t.alphas[l - 1]) / rf);
            max_alpha[l - 1] = std::max(max_alpha[l - 1], norm2(t.alphas[l]));
            const std::vector<double>& b = g.sensitivities[l - 1];
            double binf = 0.0;
            for (double v : b) binf = std::max(binf, std::abs(v));
            max_b2[l - 1] = std::max(max_b2[l - 1], norm2(b));
            max_binf[l - 1] = std::max(max_binf[l - 1], binf);
            if (tiny) {
                max_t1[l - 1] = std::max(
                    max_t1[l - 1],
                    tensor_221_norm_estimate(tensor_d2alpha_dalpha2(p, cfg, t, l), 20, 50, seed));
                max_t2[l - 1] = std::max(
                    max_t2[l - 1],
                    tensor_221_norm_estimate(tensor_d2alpha_dwdalpha(p, cfg, t, l), 20, 50, seed));
                max_t3[l - 1] = std::max(
                    max_t3[l - 1],
                    tensor_221_norm_estimate(tensor_d2alpha_dw2(p, cfg, t, l), 20, 50, seed));
            }
        }
        max_gradf = std::max(max_gradf, norm2(g.flat));
        max_gradx = std::max(max_gradx, norm2(g.input_grad));
    }

    for (std::size_t l = 1; l <= L; ++l) {
        const std::string suffix = "_layer" + std::to_string(l);
        const double bl_bound =
            std::pow(ctx.gamma, static_cast<double>(L - l)) * (1.0 + ctx.rho1) / rm;
        // ||W^(l)||_2 <= gamma sqrt(m) gives ||D W / sqrt(fan_in)|| <= gamma for
        // the uniform-width layers; the first layer divides by sqrt(d) instead,
        // so its derived bound carries the extra sqrt(m/d) factor.
        const double dada_bound =
            ctx.gamma * std::sqrt(static_cast<double>(m) / static_cast<double>(cfg.fan_in(l)));
        out.push_back(make_report("dalpha_dalpha_spectral" + suffix, max_dada[l - 1], dada_bound,
                                  "power_iteration"));
        out.push_back(
            make_report("dalpha_dw_spectral" + suffix, max_dadw[l - 1], ctx.h[l], "dense_oracle"));
        out.push_back(make_report("alpha_norm" + suffix, max_alpha[l - 1], ctx.h[l + 1] * rm,
                                  "dense_oracle"));
        out.push_back(make_report("b_norm2" + suffix, max_b2[l - 1], bl_bound, "dense_oracle"));
        out.push_back(make_report("b_norm_inf" + suffix, max_binf[l - 1], bl_bound,
                                  "dense_oracle"));
        if (tiny) {
            out.push_back(make_report("tensor_d2alpha_dalpha2" + suffix, max_t1[l - 1],
                                      ctx.beta_phi * ctx.gamma * ctx.gamma, "alternating_ascent"));
            out.push_back(make_report(
                "tensor_d2alpha_dwdalpha" + suffix, max_t2[l - 1],
                0.5 * ctx.beta_phi * (ctx.gamma * ctx.gamma + ctx.h[l] * ctx.h[l]) + 1.0,
                "alternating_ascent"));
            out.push_back(make_report("tensor_d2alpha_dw2" + suffix, max_t3[l - 1],
                                      ctx.beta_phi * ctx.h[l] * ctx.h[l], "alternating_ascent"));
        }
    }
    out.push_back(make_report("predictor_gradient_norm", max_gradf, ctx.varrho, "dense_oracle"));
    out.push_back(make_report(
        "input_gradient_norm", max_gradx,
        std::pow(ctx.gamma, static_cast<double>(L)) * (1.0 + ctx.rho1) / rm, "dense_oracle"));

    if (!y.empty()) {
        if (y.size() != n) throw std::invalid_argument("verify_appendix_A: label count mismatch");
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) loss += (f_vals[i] - y[i]) * (f_vals[i] - y[i]);
        loss /= static_cast<double>(n);
        out.push_back(make_report("loss_value", loss, ctx.c_loss_ball, "dense_oracle"));
        // ||grad loss|| <= 2 sqrt(loss) * varrho
        std::vector<double> c(n);
        for (std::size_t i = 0; i < n; ++i)
            c[i] = 2.0 * (f_vals[i] - y[i]) / static_cast<double>(n);
        const BatchTrace bt = forward_batch(p, cfg, X);
        const double gl = norm2(backward_batch(p, cfg, bt, c));
        out.push_back(make_report("loss_gradient_norm", gl, 2.0 * std::sqrt(loss) * ctx.varrho,
                                  "dense_oracle"));
    }
    return out;
}

}  // namespace rscopt
