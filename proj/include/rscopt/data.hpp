#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rscopt/matrix.hpp"
#include "rscopt/rng.hpp"

namespace rscopt {

/// Rows are samples with ||x_i||^2 = d enforced; labels are real scalars.
struct Dataset {
    Matrix X;
    std::vector<double> y;
    std::string source;
    std::size_t n = 0, d = 0;
};

/// Scale every row to squared norm d; zero rows cannot be normalized.
inline void normalize_rows(Matrix& X) {
    const double d = static_cast<double>(X.cols);
    for (std::size_t i = 0; i < X.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < X.cols; ++j) s += X(i, j) * X(i, j);
        if (s == 0.0) throw std::runtime_error("normalize_rows: zero row cannot be normalized");
        const double f = std::sqrt(d / s);
        for (std::size_t j = 0; j < X.cols; ++j) X(i, j) *= f;
    }
}

/// Class index -> regression target in [-1, 1]: y = class/4.5 - 1.
inline double class_to_label(unsigned cls) { return static_cast<double>(cls) / 4.5 - 1.0; }

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in, const char* what) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error(std::string(what) + ": truncated file");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

}  // namespace detail

/// IDX image/label pair (big-endian headers, magics 2051/2049). Pixels are
/// scaled to [0,1] and rows rescaled to squared norm d.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw std::runtime_error("load_idx: cannot open " + images_path);
    std::ifstream lab(labels_path, std::ios::binary);
    if (!lab) throw std::runtime_error("load_idx: cannot open " + labels_path);

    if (detail::read_be_u32(img, "load_idx images") != 2051u)
        throw std::runtime_error("load_idx: bad magic in image file (want 2051)");
    const std::uint32_t n_img = detail::read_be_u32(img, "load_idx images");
    const std::uint32_t rows = detail::read_be_u32(img, "load_idx images");
    const std::uint32_t cols = detail::read_be_u32(img, "load_idx images");

    if (detail::read_be_u32(lab, "load_idx labels") != 2049u)
        throw std::runtime_error("load_idx: bad magic in label file (want 2049)");
    const std::uint32_t n_lab = detail::read_be_u32(lab, "load_idx labels");
    if (n_img != n_lab) throw std::runtime_error("load_idx: image/label count mismatch");

    Dataset ds;
    ds.n = n_img;
    ds.d = static_cast<std::size_t>(rows) * cols;
    ds.X = Matrix(ds.n, ds.d);
    ds.y.resize(ds.n);
    ds.source = "idx:" + images_path;
    std::vector<unsigned char> buf(ds.d);
    for (std::size_t i = 0; i < ds.n; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(ds.d));
        if (!img) throw std::runtime_error("load_idx: truncated image payload");
        for (std::size_t j = 0; j < ds.d; ++j) ds.X(i, j) = static_cast<double>(buf[j]) / 255.0;
        char c;
        lab.read(&c, 1);
        if (!lab) throw std::runtime_error("load_idx: truncated label payload");
        ds.y[i] = class_to_label(static_cast<unsigned char>(c));
    }
    normalize_rows(ds.X);
    return ds;
}

/// CIFAR-10 binary batch: 10000 records of 1 label byte + 3072 pixel bytes.
inline Dataset load_cifar10(const std::string& batch_path) {
    std::ifstream in(batch_path, std::ios::binary | std::ios::ate);
    if (!in) throw std::runtime_error("load_cifar10: cannot open " + batch_path);
    const std::streamoff size = in.tellg();
    const std::size_t rec = 3073, n = 10000, d = 3072;
    if (size != static_cast<std::streamoff>(rec * n))
        throw std::runtime_error("load_cifar10: wrong file size (want 10000 x 3073 bytes)");
    in.seekg(0);
    Dataset ds;
    ds.n = n;
    ds.d = d;
    ds.X = Matrix(n, d);
    ds.y.resize(n);
    ds.source = "cifar10:" + batch_path;
    std::vector<unsigned char> buf(rec);
    for (std::size_t i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(rec));
        if (!in) throw std::runtime_error("load_cifar10: truncated file");
        ds.y[i] = class_to_label(buf[0]);
        for (std::size_t j = 0; j < d; ++j) ds.X(i, j) = static_cast<double>(buf[j + 1]) / 255.0;
    }
    normalize_rows(ds.X);
    return ds;
}

/// Seeded uniform subsample without replacement (Fisher-Yates prefix).
inline Dataset subsample(const Dataset& ds, std::size_t n, std::uint64_t seed) {
    if (n > ds.n) throw std::invalid_argument("subsample: n exceeds available samples");
    std::vector<std::size_t> idx(ds.n);
    for (std::size_t i = 0; i < ds.n; ++i) idx[i] = i;
    SeqRng rng(seed, /*stream=*/0x5ab5u);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(ds.n - i));
        std::swap(idx[i], idx[j]);
    }
    Dataset out;
    out.n = n;
    out.d = ds.d;
    out.X = Matrix(n, ds.d);
    out.y.resize(n);
    out.source = ds.source + ":subsample";
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < ds.d; ++j) out.X(i, j) = ds.X(idx[i], j);
        out.y[i] = ds.y[idx[i]];
    }
    return out;
}

/// x ~ N(0, I_d) rescaled to squared norm d, y ~ Uniform[-1, 1].
inline Dataset synthetic(std::size_t n, std::size_t d, std::uint64_t seed) {
    Dataset ds;
    ds.n = n;
    ds.d = d;
    ds.X = Matrix(n, d);
    ds.y.resize(n);
    ds.source = "synthetic";
    CounterRng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) ds.X(i, j) = rng.normal(/*stream=*/0xdA7Au, i * d + j);
        ds.y[i] = 2.0 * rng.uniform01(/*stream=*/0x1AB5u, i) - 1.0;
    }
    normalize_rows(ds.X);
    return ds;
}

/// Internal CSV cache: one `idx,label,pixels...` row per sample, full double
/// precision so a round trip is bit-identical.
inline void save_csv_cache(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv_cache: cannot open " + path);
    out << "idx,label,pixels...\n";
    char buf[40];
    for (std::size_t i = 0; i < ds.n; ++i) {
        out << i;
        std::snprintf(buf, sizeof buf, "%.17g", ds.y[i]);
        out << ',' << buf;
        for (std::size_t j = 0; j < ds.d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.X(i, j));
            out << ',' << buf;
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("save_csv_cache: write failed");
}

inline Dataset load_csv_cache(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv_cache: cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv_cache: empty file");
    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');  // idx, ignored
        std::getline(ss, cell, ',');
        labels.push_back(std::stod(cell));
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    Dataset ds;
    ds.n = rows.size();
    ds.d = ds.n ? rows[0].size() : 0;
    ds.X = Matrix(ds.n, ds.d);
    ds.y = std::move(labels);
    ds.source = "csv:" + path;
    for (std::size_t i = 0; i < ds.n; ++i) {
        if (rows[i].size() != ds.d) throw std::runtime_error("load_csv_cache: ragged rows");
        for (std::size_t j = 0; j < ds.d; ++j) ds.X(i, j) = rows[i][j];
    }
    return ds;
}

}  // namespace rscopt
