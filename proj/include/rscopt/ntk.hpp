#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rscopt/hermite.hpp"
#include "rscopt/matrix.hpp"
#include "rscopt/network.hpp"

namespace rscopt {

struct NTKReport {
    Matrix K;             // gradient outer products
    Matrix K_decomposed;  // layerwise Hadamard formula
    double lambda_min_empirical = 0.0;
    std::vector<Matrix> decomposition_terms;
    std::vector<Matrix> B_layers;  // B_l rows = D_l b^(l), l = 1..L
    std::vector<Matrix> A_layers;  // A^(l), l = 0..L
    double frob_gap_rel = 0.0;
    bool rows_normalized = true;
    double lower_bound = 0.0;  // c0 * lambda1, filled by ntk_min_eig_bound
};

/// Kernel at the given parameters computed two independent ways: per-sample
/// gradient inner products, and the layerwise decomposition
/// sum_l (1/m_{l-1}) A^(l-1) A^(l-1)^T (hadamard) B_l B_l^T + (1/m) A^(L) A^(L)^T.
inline NTKReport ntk_gram(const Params& p, const NetworkConfig& cfg, const Matrix& X) {
    const std::size_t n = X.rows;
    if (n > 512) throw std::length_error("ntk_gram: size limit n <= 512 exceeded");
    NTKReport rep;
    for (std::size_t i = 0; i < n && rep.rows_normalized; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < X.cols; ++j) s += X(i, j) * X(i, j);
        if (std::abs(s - static_cast<double>(X.cols)) > 1e-6 * static_cast<double>(X.cols))
            rep.rows_normalized = false;
    }

    // first way: rows of the Jacobian from backpropagation
    std::vector<double> x(cfg.input_dim);
    Matrix J;
    {
        const std::size_t psize =
            cfg.width * cfg.input_dim + (cfg.depth - 1) * cfg.width * cfg.width + cfg.width;
        if (n * psize > (std::size_t{1} << 28))
            throw std::length_error("ntk_gram: gradient storage limit exceeded");
        J = Matrix(n, psize);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < cfg.input_dim; ++j) x[j] = X(i, j);
            const std::vector<double> row = ntk_feature(p, cfg, x);
            std::copy(row.begin(), row.end(),
                      J.a.begin() + static_cast<std::ptrdiff_t>(i * psize));
        }
    }
    rep.K = matmul_nt(J, J);

    // second way: explicit chain-rule product, no reuse of backward()
    const std::size_t L = cfg.depth;
    const double rm = std::sqrt(static_cast<double>(cfg.width));
    BatchTrace bt = forward_batch(p, cfg, X);
    rep.A_layers = bt.A;
    std::vector<Matrix> D(L);
    for (std::size_t l = 0; l < L; ++l) {
        D[l] = Matrix(n, cfg.width);
        for (std::size_t i = 0; i < D[l].a.size(); ++i)
            D[l].a[i] = cfg.act.deriv(bt.Pre[l].a[i]);
    }
    rep.B_layers.assign(L, Matrix());
    Matrix B(n, cfg.width);  // B_L rows = D_L v / sqrt(m)
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < cfg.width; ++j) B(i, j) = D[L - 1](i, j) * p.v[j] / rm;
    rep.B_layers[L - 1] = B;
    for (std::size_t l = L - 1; l >= 1; --l) {
        // B_l = (B_{l+1} W^(l+1) / sqrt(m)) hadamard D_l
        Matrix Bn = matmul(rep.B_layers[l], p.W[l]);
        for (std::size_t i = 0; i < Bn.a.size(); ++i) Bn.a[i] = Bn.a[i] / rm * D[l - 1].a[i];
        rep.B_layers[l - 1] = std::move(Bn);
    }
    rep.K_decomposed = Matrix(n, n);
    for (std::size_t l = 1; l <= L; ++l) {
        Matrix AA = matmul_nt(bt.A[l - 1], bt.A[l - 1]);
        const double scale = 1.0 / static_cast<double>(cfg.fan_in(l));
        Matrix BB = matmul_nt(rep.B_layers[l - 1], rep.B_layers[l - 1]);
        Matrix term(n, n);
        for (std::size_t i = 0; i < term.a.size(); ++i)
            term.a[i] = scale * AA.a[i] * BB.a[i];
        for (std::size_t i = 0; i < term.a.size(); ++i) rep.K_decomposed.a[i] += term.a[i];
        rep.decomposition_terms.push_back(std::move(term));
    }
    {
        Matrix term = matmul_nt(bt.A[L], bt.A[L]);
        for (double& v : term.a) v /= static_cast<double>(cfg.width);
        for (std::size_t i = 0; i < term.a.size(); ++i) rep.K_decomposed.a[i] += term.a[i];
        rep.decomposition_terms.push_back(std::move(term));
    }

    Matrix gap = rep.K;
    for (std::size_t i = 0; i < gap.a.size(); ++i) gap.a[i] -= rep.K_decomposed.a[i];
    rep.frob_gap_rel = gap.frobenius_norm() / std::max(rep.K.frobenius_norm(), 1e-300);
    rep.lambda_min_empirical = min_eigenvalue(rep.K);
    return rep;
}

struct MinEigBound {
    double empirical = 0.0;
    double bound = 0.0;
    double tolerance = 0.0;
    bool satisfied = false;
};

inline MinEigBound ntk_min_eig_bound(NTKReport& rep, const NTKBoundConstants& hc) {
    MinEigBound b;
    b.empirical = rep.lambda_min_empirical;
    b.bound = hc.c0 * hc.lambda1;
    b.tolerance = hc.c0 * hc.lambda1_se + 1e-8;
    b.satisfied = b.empirical >= b.bound - b.tolerance;
    rep.lower_bound = b.bound;
    return b;
}

struct LayerConcReport {
    std::size_t layer = 0;
    double pass_fraction = 0.0;
    bool rank_deficient = false;  // m < n, lambda_min is 0 by rank
    double mean_lambda_hat = 0.0;
    double mean_lambda_min = 0.0;
};

/// Fraction of seeds with lambda_min(A^(l) A^(l)^T) >= (m/4) lambda_hat_l, where
/// lambda_hat_l is the Monte Carlo expected-Gram minimum eigenvalue at the
/// previous layer's outputs with the given weight standard deviation.
inline std::vector<LayerConcReport> layer_gram_concentration(const NetworkConfig& cfg,
                                                             double weight_std, const Matrix& X,
                                                             std::size_t n_seeds,
                                                             std::size_t mc_samples = 4096) {
    const std::size_t L = cfg.depth, n = X.rows, m = cfg.width;
    std::vector<LayerConcReport> out(L);
    for (std::size_t l = 1; l <= L; ++l) {
        out[l - 1].layer = l;
        out[l - 1].rank_deficient = m < n;
    }
    for (std::size_t s = 0; s < n_seeds; ++s) {
        NetworkConfig c = cfg;
        c.seed = cfg.seed + s;
        const Params p = init_with_stddev(c, weight_std);
        const BatchTrace bt = forward_batch(p, c, X);
        for (std::size_t l = 1; l <= L; ++l) {
            const double lmin = min_eigenvalue(matmul_nt(bt.A[l], bt.A[l]));
            const McEstimate lam = lambda1_estimate(bt.A[l - 1], weight_std, cfg.act, mc_samples,
                                                    c.seed * 1000 + l, /*check_rows=*/false);
            out[l - 1].mean_lambda_min += lmin / static_cast<double>(n_seeds);
            out[l - 1].mean_lambda_hat += lam.estimate / static_cast<double>(n_seeds);
            if (lmin >= 0.25 * static_cast<double>(m) * lam.estimate)
                out[l - 1].pass_fraction += 1.0 / static_cast<double>(n_seeds);
        }
    }
    return out;
}

}  // namespace rscopt
