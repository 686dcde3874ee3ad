#ifndef SATNET_NUMERICS_HPP
#define SATNET_NUMERICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <cblas.h>

namespace satnet {

using Vector = std::vector<double>;

/// Dense row-major matrix of 64-bit floats.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> d)
        : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != rows * cols)
            throw std::invalid_argument("Matrix: data size does not match shape");
    }

    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    Matrix transposed() const {
        Matrix t(cols, rows);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) t(j, i) = (*this)(i, j);
        return t;
    }
};

inline std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

/// C = A * B via BLAS dgemm.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a) +
                                    " and " + shape_str(b));
    Matrix c(a.rows, b.cols);
    if (a.rows == 0 || b.cols == 0 || a.cols == 0) return c;
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, (int)a.rows, (int)b.cols,
                (int)a.cols, 1.0, a.data.data(), (int)a.cols, b.data.data(),
                (int)b.cols, 0.0, c.data.data(), (int)c.cols);
    return c;
}

/// y = A * x.
inline Vector matvec(const Matrix& a, const Vector& x) {
    if (a.cols != x.size())
        throw std::invalid_argument("matvec: incompatible shapes " + shape_str(a) +
                                    " and vector of length " + std::to_string(x.size()));
    Vector y(a.rows, 0.0);
    if (a.rows == 0 || a.cols == 0) return y;
    cblas_dgemv(CblasRowMajor, CblasNoTrans, (int)a.rows, (int)a.cols, 1.0,
                a.data.data(), (int)a.cols, x.data(), 1, 0.0, y.data(), 1);
    return y;
}

/// y = A^T * x.
inline Vector matvec_t(const Matrix& a, const Vector& x) {
    if (a.rows != x.size())
        throw std::invalid_argument("matvec_t: incompatible shapes");
    Vector y(a.cols, 0.0);
    if (a.rows == 0 || a.cols == 0) return y;
    cblas_dgemv(CblasRowMajor, CblasTrans, (int)a.rows, (int)a.cols, 1.0,
                a.data.data(), (int)a.cols, x.data(), 1, 0.0, y.data(), 1);
    return y;
}

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: length mismatch");
    return cblas_ddot((int)a.size(), a.data(), 1, b.data(), 1);
}

inline double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

inline double norm1(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += std::fabs(x);
    return s;
}

inline double norm_inf(const Vector& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::fabs(x));
    return s;
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
/// returned in descending order (ties keep original index order).
inline Vector sym_eigvals(const Matrix& s, double sym_tol = 1e-10) {
    if (s.rows != s.cols)
        throw std::invalid_argument("sym_eigvals: matrix not square: " + shape_str(s));
    const std::size_t n = s.rows;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (std::fabs(s(i, j) - s(j, i)) > sym_tol)
                throw std::invalid_argument("sym_eigvals: matrix not symmetric at (" +
                                            std::to_string(i) + "," + std::to_string(j) + ")");
    Matrix a = s;
    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0, diag_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            diag_sq += a(i, i) * a(i, i);
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        }
        if (off <= 1e-28 * std::max(1.0, diag_sq)) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a(p, q);
                if (std::fabs(apq) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
            }
        }
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });
    Vector ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(idx[i], idx[i]);
    return ev;
}

/// Singular values of J, descending, via the Jacobi eigen-solver on the
/// smaller Gram matrix. Tiny negative eigenvalues are clamped to zero.
inline Vector singular_values(const Matrix& j) {
    const Matrix jt = j.transposed();
    Matrix gram = (j.rows <= j.cols) ? matmul(j, jt) : matmul(jt, j);
    // symmetrize away round-off
    for (std::size_t i = 0; i < gram.rows; ++i)
        for (std::size_t k = i + 1; k < gram.cols; ++k) {
            double m = 0.5 * (gram(i, k) + gram(k, i));
            gram(i, k) = gram(k, i) = m;
        }
    Vector ev = sym_eigvals(gram, 1e-6);
    Vector sv(ev.size());
    for (std::size_t i = 0; i < ev.size(); ++i) sv[i] = std::sqrt(std::max(0.0, ev[i]));
    return sv;
}

/// Deterministic random stream. The engine (mt19937_64) is fully specified
/// by the standard; uniform and gaussian transforms are hand-rolled so the
/// stream is bit-identical across platforms and library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Uniform in [0, 1).
    double uniform() { return (engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        // rejection to avoid modulo bias
        std::uint64_t lim = std::numeric_limits<std::uint64_t>::max() -
                            std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do { v = engine_(); } while (v >= lim);
        return v % n;
    }

    /// Standard normal via Marsaglia polar method.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

    /// Derived independent stream, reproducible from (seed, index).
    Rng derive(std::uint64_t index) const {
        std::uint64_t x = seed_ ^ (0x9e3779b97f4a7c15ULL * (index + 1));
        // splitmix64 finalizer
        x ^= x >> 30; x *= 0xbf58476d1ce4e5b9ULL;
        x ^= x >> 27; x *= 0x94d049bb133111ebULL;
        x ^= x >> 31;
        return Rng(x);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

inline Vector sample_gaussian(Rng& rng, std::size_t n) {
    if (n < 1) throw std::invalid_argument("sample_gaussian: n must be >= 1");
    Vector v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = rng.gaussian();
    return v;
}

}  // namespace satnet

#endif  // SATNET_NUMERICS_HPP
