#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "rscopt/activation.hpp"
#include "rscopt/matrix.hpp"
#include "rscopt/rng.hpp"

namespace rscopt {

struct NetworkConfig {
    std::size_t depth = 1;      // L
    std::size_t input_dim = 1;  // d
    std::size_t width = 1;      // m, uniform across layers
    Activation act = Activation::make(ActKind::Tanh);
    double sigma1 = 1.0;
    std::uint64_t seed = 0;
    bool assumption2_sigma0 = false;  // alternate sigma0 display, off by default

    void validate() const {
        if (depth < 1 || width < 1 || input_dim < 1 || !(sigma1 > 0.0))
            throw std::invalid_argument("NetworkConfig: need L,m,d >= 1 and sigma1 > 0");
    }

    /// Width of the layer feeding layer l (1-based); layer 1 reads the input.
    std::size_t fan_in(std::size_t l) const { return l == 1 ? input_dim : width; }
};

/// Initialization standard deviation sigma0. Default follows the spectral-bound
/// lemma, sigma1/(2(1+sqrt(log m/(2m)))); the alternate display
/// sigma1/(2(1+2 sqrt(log m)/sqrt(m))) is available behind the config switch.
inline double init_stddev(const NetworkConfig& cfg) {
    const double m = static_cast<double>(cfg.width);
    const double lm = std::log(m);
    if (cfg.assumption2_sigma0) return cfg.sigma1 / (2.0 * (1.0 + 2.0 * std::sqrt(lm) / std::sqrt(m)));
    return cfg.sigma1 / (2.0 * (1.0 + std::sqrt(lm / (2.0 * m))));
}

struct Params {
    std::vector<Matrix> W;  // W[l-1] is the m x fan_in(l) weight of layer l
    std::vector<double> v;  // last layer, length m

    std::size_t flat_size() const {
        std::size_t p = 0;
        for (const Matrix& w : W) p += w.rows * w.cols;
        return p + v.size();
    }

    /// Flat layout: vec(W^(1)) column-major, ..., vec(W^(L)), then v.
    std::vector<double> to_flat() const {
        std::vector<double> f;
        f.reserve(flat_size());
        for (const Matrix& w : W)
            for (std::size_t j = 0; j < w.cols; ++j)
                for (std::size_t i = 0; i < w.rows; ++i) f.push_back(w(i, j));
        f.insert(f.end(), v.begin(), v.end());
        return f;
    }

    static Params from_flat(const std::vector<double>& f, const NetworkConfig& cfg) {
        Params p;
        std::size_t pos = 0;
        for (std::size_t l = 1; l <= cfg.depth; ++l) {
            Matrix w(cfg.width, cfg.fan_in(l));
            for (std::size_t j = 0; j < w.cols; ++j)
                for (std::size_t i = 0; i < w.rows; ++i) w(i, j) = f[pos++];
            p.W.push_back(std::move(w));
        }
        p.v.assign(f.begin() + static_cast<std::ptrdiff_t>(pos), f.end());
        if (p.v.size() != cfg.width) throw std::invalid_argument("from_flat: length mismatch");
        return p;
    }
};

/// Draw parameters with the given per-entry weight standard deviation; the
/// last layer is Gaussian normalized to unit Euclidean norm.
inline Params init_with_stddev(const NetworkConfig& cfg, double w_std) {
    cfg.validate();
    CounterRng rng(cfg.seed);
    Params p;
    for (std::size_t l = 1; l <= cfg.depth; ++l) {
        Matrix w(cfg.width, cfg.fan_in(l));
        for (std::size_t i = 0; i < w.rows; ++i)
            for (std::size_t j = 0; j < w.cols; ++j)
                w(i, j) = w_std * rng.normal(/*stream=*/l, /*counter=*/i * w.cols + j);
        p.W.push_back(std::move(w));
    }
    p.v.resize(cfg.width);
    for (std::size_t i = 0; i < cfg.width; ++i)
        p.v[i] = rng.normal(/*stream=*/cfg.depth + 1, /*counter=*/i);
    const double nv = norm2(p.v);
    if (nv == 0.0) throw std::runtime_error("init: degenerate zero last-layer draw");
    for (double& x : p.v) x /= nv;
    return p;
}

inline Params init(const NetworkConfig& cfg) { return init_with_stddev(cfg, init_stddev(cfg)); }

struct ForwardTrace {
    std::vector<std::vector<double>> alphas;      // alphas[l], l = 0..L
    std::vector<std::vector<double>> preacts;     // preacts[l-1] for layer l
    std::vector<std::vector<double>> act_derivs;  // phi'(preact), same indexing
    double output = 0.0;
    bool normalized_input = true;  // ||x||^2 = d held within tolerance
};

inline ForwardTrace forward(const Params& p, const NetworkConfig& cfg,
                            const std::vector<double>& x) {
    if (x.size() != cfg.input_dim) throw std::invalid_argument("forward: input dimension mismatch");
    if (p.W.size() != cfg.depth || p.v.size() != cfg.width)
        throw std::invalid_argument("forward: params do not match config");
    ForwardTrace t;
    const double d = static_cast<double>(cfg.input_dim);
    t.normalized_input = std::abs(dot(x, x) - d) <= 1e-6 * std::max(1.0, d);
    t.alphas.push_back(x);
    for (std::size_t l = 1; l <= cfg.depth; ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.fan_in(l)));
        std::vector<double> pre = matvec(p.W[l - 1], t.alphas[l - 1]);
        std::vector<double> alpha(pre.size()), dphi(pre.size());
        for (std::size_t i = 0; i < pre.size(); ++i) {
            pre[i] *= scale;
            alpha[i] = cfg.act.eval(pre[i]);
            dphi[i] = cfg.act.deriv(pre[i]);
        }
        t.preacts.push_back(std::move(pre));
        t.act_derivs.push_back(std::move(dphi));
        t.alphas.push_back(std::move(alpha));
    }
    t.output = dot(p.v, t.alphas[cfg.depth]) / std::sqrt(static_cast<double>(cfg.width));
    return t;
}

struct GradientBundle {
    std::vector<Matrix> dW;                           // per layer
    std::vector<double> dv;                           // last layer
    std::vector<double> flat;                         // Eq.-layout concatenation
    std::vector<double> input_grad;                   // d f / d x
    std::vector<std::vector<double>> sensitivities;   // b^(l) = df/dalpha^(l), l = 1..L
};

inline GradientBundle backward(const Params& p, const NetworkConfig& cfg, const ForwardTrace& t) {
    const std::size_t L = cfg.depth;
    const double rm = std::sqrt(static_cast<double>(cfg.width));
    GradientBundle g;
    g.sensitivities.resize(L);
    std::vector<double> b(p.v.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = p.v[i] / rm;
    g.sensitivities[L - 1] = b;
    for (std::size_t l = L; l-- >= 2;) {
        // b^(l) = W^(l+1)^T D^(l+1) b^(l+1) / sqrt(m)
        std::vector<double> db(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) db[i] = t.act_derivs[l][i] * b[i];
        b = matvec_t(p.W[l], db);
        for (double& x : b) x /= rm;
        g.sensitivities[l - 1] = b;
        if (l == 1) break;
    }
    g.dW.resize(L);
    for (std::size_t l = 1; l <= L; ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.fan_in(l)));
        const std::vector<double>& bl = g.sensitivities[l - 1];
        const std::vector<double>& dphi = t.act_derivs[l - 1];
        const std::vector<double>& prev = t.alphas[l - 1];
        Matrix dw(cfg.width, cfg.fan_in(l));
        for (std::size_t i = 0; i < dw.rows; ++i) {
            const double c = bl[i] * dphi[i] * scale;
            for (std::size_t j = 0; j < dw.cols; ++j) dw(i, j) = c * prev[j];
        }
        g.dW[l - 1] = std::move(dw);
    }
    g.dv.resize(cfg.width);
    for (std::size_t i = 0; i < cfg.width; ++i) g.dv[i] = t.alphas[L][i] / rm;
    {
        std::vector<double> db(cfg.width);
        for (std::size_t i = 0; i < cfg.width; ++i)
            db[i] = t.act_derivs[0][i] * g.sensitivities[0][i];
        g.input_grad = matvec_t(p.W[0], db);
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.input_dim));
        for (double& x : g.input_grad) x *= scale;
    }
    std::size_t psize = g.dv.size();
    for (const Matrix& w : g.dW) psize += w.a.size();
    g.flat.reserve(psize);
    for (const Matrix& w : g.dW)
        for (std::size_t j = 0; j < w.cols; ++j)
            for (std::size_t i = 0; i < w.rows; ++i) g.flat.push_back(w(i, j));
    g.flat.insert(g.flat.end(), g.dv.begin(), g.dv.end());
    return g;
}

/// Gradient of the scalar output at x, as a flat vector (one NTK Jacobian row).
inline std::vector<double> ntk_feature(const Params& p, const NetworkConfig& cfg,
                                       const std::vector<double>& x) {
    return backward(p, cfg, forward(p, cfg, x)).flat;
}

/// Hessian-vector product by central differencing of the analytic gradient.
inline std::vector<double> hvp(const Params& p, const NetworkConfig& cfg,
                               const std::vector<double>& x, const std::vector<double>& vdir,
                               double eps = 0.0) {
    const std::vector<double> theta = p.to_flat();
    if (vdir.size() != theta.size()) throw std::invalid_argument("hvp: direction length mismatch");
    const double nv = norm2(vdir);
    if (nv == 0.0) throw std::invalid_argument("hvp: zero direction");
    if (eps == 0.0)
        eps = std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + norm2(theta)) / nv;
    if (!(eps > 0.0)) throw std::invalid_argument("hvp: eps must be positive");
    std::vector<double> tp = theta, tm = theta;
    for (std::size_t i = 0; i < theta.size(); ++i) {
        tp[i] += eps * vdir[i];
        tm[i] -= eps * vdir[i];
    }
    const Params pp = Params::from_flat(tp, cfg);
    const Params pm = Params::from_flat(tm, cfg);
    std::vector<double> gp = backward(pp, cfg, forward(pp, cfg, x)).flat;
    const std::vector<double> gm = backward(pm, cfg, forward(pm, cfg, x)).flat;
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] = (gp[i] - gm[i]) / (2.0 * eps);
    return gp;
}

/// Dense symmetrized finite-difference Hessian of a gradient callback.
inline Matrix fd_hessian(const std::function<std::vector<double>(const std::vector<double>&)>& grad,
                         const std::vector<double>& theta) {
    const std::size_t p = theta.size();
    if (p > 2000) throw std::length_error("fd_hessian: size limit p <= 2000 exceeded");
    const double eps = std::sqrt(std::numeric_limits<double>::epsilon()) * (1.0 + norm2(theta));
    Matrix H(p, p);
    std::vector<double> t = theta;
    for (std::size_t j = 0; j < p; ++j) {
        t[j] = theta[j] + eps;
        const std::vector<double> gp = grad(t);
        t[j] = theta[j] - eps;
        const std::vector<double> gm = grad(t);
        t[j] = theta[j];
        for (std::size_t i = 0; i < p; ++i) H(i, j) = (gp[i] - gm[i]) / (2.0 * eps);
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) {
            const double s = 0.5 * (H(i, j) + H(j, i));
            H(i, j) = s;
            H(j, i) = s;
        }
    return H;
}

inline Matrix dense_hessian(const Params& p, const NetworkConfig& cfg,
                            const std::vector<double>& x) {
    auto grad = [&](const std::vector<double>& theta) {
        const Params q = Params::from_flat(theta, cfg);
        return backward(q, cfg, forward(q, cfg, x)).flat;
    };
    return fd_hessian(grad, p.to_flat());
}

// ---------- batched evaluation over a data matrix (rows are samples) ----------

struct BatchTrace {
    std::vector<Matrix> A;    // A[0] = X (n x d), A[l] = layer outputs (n x m)
    std::vector<Matrix> Pre;  // pre-activations per layer (n x m)
    std::vector<double> f;    // n outputs
};

inline BatchTrace forward_batch(const Params& p, const NetworkConfig& cfg, const Matrix& X) {
    if (X.cols != cfg.input_dim) throw std::invalid_argument("forward_batch: dimension mismatch");
    BatchTrace t;
    t.A.push_back(X);
    for (std::size_t l = 1; l <= cfg.depth; ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.fan_in(l)));
        Matrix pre = matmul_nt(t.A[l - 1], p.W[l - 1]);
        Matrix alpha(pre.rows, pre.cols);
        for (std::size_t i = 0; i < pre.a.size(); ++i) {
            pre.a[i] *= scale;
            alpha.a[i] = cfg.act.eval(pre.a[i]);
        }
        t.Pre.push_back(std::move(pre));
        t.A.push_back(std::move(alpha));
    }
    t.f = matvec(t.A[cfg.depth], p.v);
    const double rm = std::sqrt(static_cast<double>(cfg.width));
    for (double& y : t.f) y /= rm;
    return t;
}

/// Gradient of sum_i c_i f(theta; x_i) with respect to theta, flat layout.
inline std::vector<double> backward_batch(const Params& p, const NetworkConfig& cfg,
                                          const BatchTrace& t, const std::vector<double>& c) {
    const std::size_t L = cfg.depth;
    const std::size_t n = t.A[0].rows;
    if (c.size() != n) throw std::invalid_argument("backward_batch: weight length mismatch");
    const double rm = std::sqrt(static_cast<double>(cfg.width));
    // G_l = d(sum c_i f_i)/d pre_l, built from the top
    Matrix G(n, cfg.width);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < cfg.width; ++j)
            G(i, j) = c[i] * p.v[j] / rm * cfg.act.deriv(t.Pre[L - 1](i, j));
    std::vector<Matrix> dW(L);
    for (std::size_t l = L;; --l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.fan_in(l)));
        Matrix g = matmul_tn(G, t.A[l - 1]);  // m x fan_in
        for (double& x : g.a) x *= scale;
        dW[l - 1] = std::move(g);
        if (l == 1) break;
        Matrix Gprev = matmul(G, p.W[l - 1]);  // n x fan_in(l) = n x m
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < cfg.width; ++j)
                Gprev(i, j) *= scale * cfg.act.deriv(t.Pre[l - 2](i, j));
        G = std::move(Gprev);
    }
    std::vector<double> dv = matvec_t(t.A[L], c);
    for (double& x : dv) x /= rm;
    std::vector<double> flat;
    std::size_t psize = dv.size();
    for (const Matrix& w : dW) psize += w.a.size();
    flat.reserve(psize);
    for (const Matrix& w : dW)
        for (std::size_t j = 0; j < w.cols; ++j)
            for (std::size_t i = 0; i < w.rows; ++i) flat.push_back(w(i, j));
    flat.insert(flat.end(), dv.begin(), dv.end());
    return flat;
}

// ---------- serialization ----------

inline void save_params(const Params& p, const NetworkConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_params: cannot open " + path);
    out.write("RSCN", 4);
    const std::uint32_t header[4] = {1u, static_cast<std::uint32_t>(cfg.depth),
                                     static_cast<std::uint32_t>(cfg.input_dim),
                                     static_cast<std::uint32_t>(cfg.width)};
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    const std::vector<double> flat = p.to_flat();
    out.write(reinterpret_cast<const char*>(flat.data()),
              static_cast<std::streamsize>(flat.size() * sizeof(double)));
    if (!out) throw std::runtime_error("save_params: write failed");
}

struct ParamsFile {
    std::uint32_t version = 0, depth = 0, input_dim = 0, width = 0;
    std::vector<double> flat;
};

inline ParamsFile load_params_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_params: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "RSCN", 4) != 0)
        throw std::runtime_error("load_params: bad magic");
    std::uint32_t header[4];
    in.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!in) throw std::runtime_error("load_params: truncated header");
    ParamsFile f;
    f.version = header[0];
    f.depth = header[1];
    f.input_dim = header[2];
    f.width = header[3];
    if (f.version != 1) throw std::runtime_error("load_params: unsupported version");
    const std::size_t L = f.depth, d = f.input_dim, m = f.width;
    const std::size_t p = m * d + (L - 1) * m * m + m;
    f.flat.resize(p);
    in.read(reinterpret_cast<char*>(f.flat.data()),
            static_cast<std::streamsize>(p * sizeof(double)));
    if (!in) throw std::runtime_error("load_params: truncated payload");
    return f;
}

inline Params load_params(const std::string& path, const NetworkConfig& cfg) {
    const ParamsFile f = load_params_file(path);
    if (f.depth != cfg.depth || f.input_dim != cfg.input_dim || f.width != cfg.width)
        throw std::runtime_error("load_params: header does not match config");
    return Params::from_flat(f.flat, cfg);
}

}  // namespace rscopt
