#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <cblas.h>

#include "rscopt/rng.hpp"

namespace rscopt {

/// Dense row-major matrix of 64-bit floats.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

    double& operator()(std::size_t i, std::size_t j) { return a[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix I(n, n);
        for (std::size_t i = 0; i < n; ++i) I(i, i) = 1.0;
        return I;
    }

    Matrix transposed() const {
        Matrix T(cols, rows);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) T(j, i) = (*this)(i, j);
        return T;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : a) s += v * v;
        return std::sqrt(s);
    }
};

inline void check_same_shape(const Matrix& A, const Matrix& B, const char* what) {
    if (A.rows != B.rows || A.cols != B.cols)
        throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

/// C = A * B
inline Matrix matmul(const Matrix& A, const Matrix& B) {
    if (A.cols != B.rows) throw std::invalid_argument("matmul: inner dimension mismatch");
    Matrix C(A.rows, B.cols);
    if (A.rows == 0 || B.cols == 0 || A.cols == 0) return C;
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, static_cast<int>(A.rows),
                static_cast<int>(B.cols), static_cast<int>(A.cols), 1.0, A.a.data(),
                static_cast<int>(A.cols), B.a.data(), static_cast<int>(B.cols), 0.0, C.a.data(),
                static_cast<int>(C.cols));
    return C;
}

/// C = A * B^T
inline Matrix matmul_nt(const Matrix& A, const Matrix& B) {
    if (A.cols != B.cols) throw std::invalid_argument("matmul_nt: inner dimension mismatch");
    Matrix C(A.rows, B.rows);
    if (A.rows == 0 || B.rows == 0 || A.cols == 0) return C;
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, static_cast<int>(A.rows),
                static_cast<int>(B.rows), static_cast<int>(A.cols), 1.0, A.a.data(),
                static_cast<int>(A.cols), B.a.data(), static_cast<int>(B.cols), 0.0, C.a.data(),
                static_cast<int>(C.cols));
    return C;
}

/// C = A^T * B
inline Matrix matmul_tn(const Matrix& A, const Matrix& B) {
    if (A.rows != B.rows) throw std::invalid_argument("matmul_tn: inner dimension mismatch");
    Matrix C(A.cols, B.cols);
    if (A.cols == 0 || B.cols == 0 || A.rows == 0) return C;
    cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, static_cast<int>(A.cols),
                static_cast<int>(B.cols), static_cast<int>(A.rows), 1.0, A.a.data(),
                static_cast<int>(A.cols), B.a.data(), static_cast<int>(B.cols), 0.0, C.a.data(),
                static_cast<int>(C.cols));
    return C;
}

inline std::vector<double> matvec(const Matrix& A, const std::vector<double>& x) {
    if (A.cols != x.size()) throw std::invalid_argument("matvec: dimension mismatch");
    std::vector<double> y(A.rows, 0.0);
    if (A.rows == 0 || A.cols == 0) return y;
    cblas_dgemv(CblasRowMajor, CblasNoTrans, static_cast<int>(A.rows), static_cast<int>(A.cols),
                1.0, A.a.data(), static_cast<int>(A.cols), x.data(), 1, 0.0, y.data(), 1);
    return y;
}

inline std::vector<double> matvec_t(const Matrix& A, const std::vector<double>& x) {
    if (A.rows != x.size()) throw std::invalid_argument("matvec_t: dimension mismatch");
    std::vector<double> y(A.cols, 0.0);
    if (A.rows == 0 || A.cols == 0) return y;
    cblas_dgemv(CblasRowMajor, CblasTrans, static_cast<int>(A.rows), static_cast<int>(A.cols), 1.0,
                A.a.data(), static_cast<int>(A.cols), x.data(), 1, 0.0, y.data(), 1);
    return y;
}

inline double dot(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

inline double norm2(const std::vector<double>& x) { return std::sqrt(dot(x, x)); }

/// Dense order-3 tensor, index order (i, j, k) with k the slice index of the
/// (2,2,1)-norm's absolute sum.
struct Tensor3 {
    std::size_t d1 = 0;
    std::size_t d2 = 0;
    std::size_t d3 = 0;
    std::vector<double> a;

    Tensor3() = default;
    Tensor3(std::size_t n1, std::size_t n2, std::size_t n3)
        : d1(n1), d2(n2), d3(n3), a(n1 * n2 * n3, 0.0) {}

    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return a[(i * d2 + j) * d3 + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return a[(i * d2 + j) * d3 + k];
    }

    /// Slice M_k with (M_k)_{ij} = T_{ijk}.
    Matrix slice(std::size_t k) const {
        Matrix M(d1, d2);
        for (std::size_t i = 0; i < d1; ++i)
            for (std::size_t j = 0; j < d2; ++j) M(i, j) = (*this)(i, j, k);
        return M;
    }
};

struct EigResult {
    std::vector<double> values;  // descending
    Matrix vectors;              // column k is the eigenvector of values[k]
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
inline EigResult sym_eig(const Matrix& A) {
    if (A.rows != A.cols) throw std::invalid_argument("sym_eig: matrix not square");
    const std::size_t n = A.rows;
    if (n > 1024) throw std::length_error("sym_eig: size limit n <= 1024 exceeded");
    double max_asym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            max_asym = std::max(max_asym, std::abs(A(i, j) - A(j, i)));
    if (max_asym > 1e-10) throw std::invalid_argument("sym_eig: symmetry violation above 1e-10");

    Matrix W = A;
    // enforce exact symmetry so rotations stay consistent
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = 0.5 * (W(i, j) + W(j, i));
            W(i, j) = v;
            W(j, i) = v;
        }
    Matrix V = Matrix::identity(n);
    const double fro = std::max(W.frobenius_norm(), 1e-300);
    const double stop = 1e-15 * fro;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += 2.0 * W(i, j) * W(i, j);
        if (std::sqrt(off) <= stop) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = W(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (W(q, q) - W(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double wkp = W(k, p), wkq = W(k, q);
                    W(k, p) = c * wkp - s * wkq;
                    W(k, q) = s * wkp + c * wkq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double wpk = W(p, k), wqk = W(q, k);
                    W(p, k) = c * wpk - s * wqk;
                    W(q, k) = s * wpk + c * wqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = V(k, p), vkq = V(k, q);
                    V(k, p) = c * vkp - s * vkq;
                    V(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return W(i, i) > W(j, j); });
    EigResult res;
    res.values.resize(n);
    res.vectors = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        res.values[k] = W(order[k], order[k]);
        for (std::size_t i = 0; i < n; ++i) res.vectors(i, k) = V(i, order[k]);
    }
    return res;
}

inline double min_eigenvalue(const Matrix& A) {
    EigResult e = sym_eig(A);
    return e.values.back();
}

/// Spectral norm of a symmetric operator given only as a matvec callback.
/// Power iteration is run in the A^2 sense (the operator is applied twice per
/// step) so extreme negative eigenvalues are captured as well.
inline double power_iteration_spectral_norm(
    const std::function<std::vector<double>(const std::vector<double>&)>& apply, std::size_t dim,
    std::size_t iters = 400, double tol = 1e-10, std::uint64_t seed = 12345) {
    if (iters < 1) throw std::invalid_argument("power_iteration: iters >= 1 required");
    SeqRng rng(seed, /*stream=*/0x9095u);
    std::vector<double> v(dim);
    for (std::size_t i = 0; i < dim; ++i) v[i] = rng.normal();
    double nv = norm2(v);
    if (nv == 0.0) return 0.0;
    for (double& x : v) x /= nv;

    double est = 0.0;
    for (std::size_t it = 0; it < iters; ++it) {
        std::vector<double> w = apply(apply(v));
        const double rayleigh = dot(v, w);  // = |A v|^2 >= 0 for symmetric A
        const double next = std::sqrt(std::max(rayleigh, 0.0));
        const double nw = norm2(w);
        if (nw == 0.0) return 0.0;
        for (std::size_t i = 0; i < dim; ++i) v[i] = w[i] / nw;
        if (it > 0 && std::abs(next - est) < tol * std::max(1.0, next)) {
            est = next;
            break;
        }
        est = next;
    }
    return est;
}

/// Spectral norm of a dense (possibly rectangular) matrix via power iteration
/// on the symmetric operator x -> A^T A x.
inline double spectral_norm(const Matrix& A, std::size_t iters = 400, double tol = 1e-10,
                            std::uint64_t seed = 12345) {
    if (A.rows == 0 || A.cols == 0) return 0.0;
    auto gram_apply = [&](const std::vector<double>& x) { return matvec_t(A, matvec(A, x)); };
    // gram_apply is A^T A; power_iteration squares it again, which still
    // converges to ||A^T A||_2 = ||A||_2^2.
    SeqRng rng(seed, /*stream=*/0x5becu);
    std::vector<double> v(A.cols);
    for (std::size_t i = 0; i < A.cols; ++i) v[i] = rng.normal();
    double nv = norm2(v);
    if (nv == 0.0) return 0.0;
    for (double& x : v) x /= nv;
    double est = 0.0;
    for (std::size_t it = 0; it < iters; ++it) {
        std::vector<double> w = gram_apply(v);
        const double rayleigh = dot(v, w);
        const double next = std::sqrt(std::max(rayleigh, 0.0));
        const double nw = norm2(w);
        if (nw == 0.0) return 0.0;
        for (std::size_t i = 0; i < A.cols; ++i) v[i] = w[i] / nw;
        if (it > 0 && std::abs(next - est) < tol * std::max(1.0, next)) {
            est = next;
            break;
        }
        est = next;
    }
    return est;
}

inline Matrix hadamard(const Matrix& A, const Matrix& B) {
    check_same_shape(A, B, "hadamard");
    Matrix C(A.rows, A.cols);
    for (std::size_t i = 0; i < A.a.size(); ++i) C.a[i] = A.a[i] * B.a[i];
    return C;
}

inline Matrix hadamard_power(const Matrix& A, std::size_t r) {
    if (r < 1) throw std::invalid_argument("hadamard_power: r >= 1 required");
    Matrix C = A;
    for (std::size_t k = 1; k < r; ++k) C = hadamard(C, A);
    return C;
}

/// Row-wise Kronecker power: row i of the result is the r-fold Kronecker
/// power of row i of U. Satisfies (U^{*r})(U^{*r})^T = (U U^T)^{hadamard r}.
inline Matrix khatri_rao_row_power(const Matrix& U, std::size_t r) {
    if (r < 1) throw std::invalid_argument("khatri_rao_row_power: r >= 1 required");
    const std::size_t m = U.cols;
    double width = 1.0;
    for (std::size_t k = 0; k < r; ++k) width *= static_cast<double>(m);
    if (width > static_cast<double>(1u << 24))
        throw std::length_error("khatri_rao_row_power: m^r exceeds 2^24 entries per row");
    const std::size_t out_cols = static_cast<std::size_t>(width);
    Matrix R(U.rows, out_cols);
    std::vector<double> row, next;
    for (std::size_t i = 0; i < U.rows; ++i) {
        row.assign(U.a.begin() + static_cast<std::ptrdiff_t>(i * m),
                   U.a.begin() + static_cast<std::ptrdiff_t>((i + 1) * m));
        for (std::size_t k = 1; k < r; ++k) {
            next.resize(row.size() * m);
            for (std::size_t p = 0; p < row.size(); ++p)
                for (std::size_t j = 0; j < m; ++j) next[p * m + j] = row[p] * U(i, j);
            row.swap(next);
        }
        std::copy(row.begin(), row.end(), R.a.begin() + static_cast<std::ptrdiff_t>(i * out_cols));
    }
    return R;
}

}  // namespace rscopt
