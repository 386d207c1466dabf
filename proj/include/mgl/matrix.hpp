#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace mgl {

// Norm below which a vector counts as zero for cosine similarity.
inline constexpr double kNormEps = 1e-12;
// Floor applied to the population standard deviation when standardizing.
inline constexpr double kStdEps = 1e-8;

// Row-major dense matrix of doubles; the carrier for node features,
// embeddings and encoder parameters. All arithmetic is 64-bit.
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;  // length rows*cols, row-major

    DenseMatrix() = default;
    DenseMatrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), values(static_cast<std::size_t>(r) * c, fill) {}

    static DenseMatrix identity(int n) {
        DenseMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(int i, int j) { return values[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return values[static_cast<std::size_t>(i) * cols + j]; }

    double* row(int i) { return values.data() + static_cast<std::size_t>(i) * cols; }
    const double* row(int i) const { return values.data() + static_cast<std::size_t>(i) * cols; }

    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (double v : values)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline std::string shape_str(const DenseMatrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

namespace detail {
using EigenRowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<EigenRowMajor>;
using MapC = Eigen::Map<const EigenRowMajor>;

inline MapC emap(const DenseMatrix& m) { return MapC(m.values.data(), m.rows, m.cols); }
inline MapM emap(DenseMatrix& m) { return MapM(m.values.data(), m.rows, m.cols); }
}  // namespace detail

// c = a * b. Products route through Eigen (single-threaded, deterministic).
inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: dimension mismatch " + shape_str(a) + " * " + shape_str(b));
    DenseMatrix c(a.rows, b.cols);
    detail::emap(c).noalias() = detail::emap(a) * detail::emap(b);
    return c;
}

// c = a * b^T, without materializing the transpose.
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.cols)
        throw std::invalid_argument("matmul_nt: dimension mismatch " + shape_str(a) + " * " + shape_str(b) + "^T");
    DenseMatrix c(a.rows, b.rows);
    detail::emap(c).noalias() = detail::emap(a) * detail::emap(b).transpose();
    return c;
}

// c = a^T * b.
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows)
        throw std::invalid_argument("matmul_tn: dimension mismatch " + shape_str(a) + "^T * " + shape_str(b));
    DenseMatrix c(a.cols, b.cols);
    detail::emap(c).noalias() = detail::emap(a).transpose() * detail::emap(b);
    return c;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

inline void add_inplace(DenseMatrix& a, const DenseMatrix& b, double scale = 1.0) {
    if (!a.same_shape(b))
        throw std::invalid_argument("add: shape mismatch " + shape_str(a) + " vs " + shape_str(b));
    for (std::size_t i = 0; i < a.values.size(); ++i) a.values[i] += scale * b.values[i];
}

inline void scale_inplace(DenseMatrix& a, double s) {
    for (double& v : a.values) v *= s;
}

inline double frobenius_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.values) s += v * v;
    return std::sqrt(s);
}

inline double dot(const double* u, const double* v, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += u[i] * v[i];
    return s;
}

inline double norm2(const double* u, int n) { return std::sqrt(dot(u, u, n)); }

// cos(u, v) clamped to [-1, 1]; returns 0 when either norm is below
// kNormEps so degenerate embeddings never produce NaN.
inline double cosine_similarity(const double* u, const double* v, int n) {
    const double nu = norm2(u, n);
    const double nv = norm2(v, n);
    if (nu < kNormEps || nv < kNormEps) return 0.0;
    return std::clamp(dot(u, v, n) / (nu * nv), -1.0, 1.0);
}

inline double cosine_similarity(const std::vector<double>& u, const std::vector<double>& v) {
    if (u.size() != v.size())
        throw std::invalid_argument("cosine_similarity: length mismatch " + std::to_string(u.size()) +
                                    " vs " + std::to_string(v.size()));
    return cosine_similarity(u.data(), v.data(), static_cast<int>(u.size()));
}

// Per-column byproducts of standardize_columns, needed to backpropagate
// through it exactly.
struct ColumnStats {
    std::vector<double> centered_norm;  // ||z_c - mean|| = popstd * sqrt(rows)
    std::vector<bool> floored;          // popstd fell below kStdEps
};

// Standardizes each column c to (c - mean) / (popstd * sqrt(rows)), with the
// population std floored at kStdEps. Non-constant output columns have zero
// sum and unit squared norm, so Z^T Z is exactly the correlation matrix.
inline DenseMatrix standardize_columns(const DenseMatrix& z, ColumnStats* stats = nullptr) {
    if (z.rows < 2)
        throw std::invalid_argument("standardize_columns: need at least 2 rows, got " +
                                    std::to_string(z.rows));
    const int n = z.rows, d = z.cols;
    DenseMatrix out(n, d);
    if (stats) {
        stats->centered_norm.assign(static_cast<std::size_t>(d), 0.0);
        stats->floored.assign(static_cast<std::size_t>(d), false);
    }
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    for (int j = 0; j < d; ++j) {
        double mean = 0.0;
        for (int i = 0; i < n; ++i) mean += z(i, j);
        mean /= n;
        double ss = 0.0;
        for (int i = 0; i < n; ++i) {
            const double u = z(i, j) - mean;
            ss += u * u;
        }
        const double popstd = std::sqrt(ss / n);
        const bool floored = popstd < kStdEps;
        const double denom = (floored ? kStdEps : popstd) * sqrt_n;
        for (int i = 0; i < n; ++i) out(i, j) = (z(i, j) - mean) / denom;
        if (stats) {
            stats->centered_norm[static_cast<std::size_t>(j)] = popstd * sqrt_n;  // == ||centered||
            stats->floored[static_cast<std::size_t>(j)] = floored;
        }
    }
    return out;
}

}  // namespace mgl
