#include <gtest/gtest.h>

#include <cmath>

#include "satnet/numerics.hpp"

using namespace satnet;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
    Matrix m(r, c);
    for (double& v : m.data) v = rng.gaussian();
    return m;
}

// Independent oracle: naive triple-loop product.
Matrix matmul_oracle(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < b.cols; ++j)
            for (std::size_t k = 0; k < a.cols; ++k) c(i, j) += a(i, k) * b(k, j);
    return c;
}

// Independent oracle: classic Jacobi rotation (largest off-diagonal pivot)
// run to convergence, structured differently from the library's cyclic sweep.
std::vector<double> jacobi_oracle(Matrix a) {
    const std::size_t n = a.rows;
    for (int iter = 0; iter < 10000; ++iter) {
        std::size_t p = 0, q = 1;
        double mx = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j)
                if (std::fabs(a(i, j)) > mx) { mx = std::fabs(a(i, j)); p = i; q = j; }
        if (mx < 1e-14) break;
        double theta = 0.5 * std::atan2(2.0 * a(p, q), a(q, q) - a(p, p));
        double c = std::cos(theta), s = std::sin(theta);
        Matrix rot = Matrix::identity(n);
        rot(p, p) = c; rot(q, q) = c; rot(p, q) = s; rot(q, p) = -s;
        a = matmul_oracle(matmul_oracle(rot.transposed(), a), rot);
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i) ev[i] = a(i, i);
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

// Householder reflector H = I - 2 v v^T / (v^T v).
Matrix householder(const Vector& v) {
    const std::size_t n = v.size();
    Matrix h = Matrix::identity(n);
    double vv = dot(v, v);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) h(i, j) -= 2.0 * v[i] * v[j] / vv;
    return h;
}

}  // namespace

TEST(Matmul, IdentityCase) {
    Rng rng(1);
    Matrix a = random_matrix(rng, 2, 3);
    Matrix out = matmul(Matrix::identity(2), a);
    for (std::size_t i = 0; i < a.data.size(); ++i)
        EXPECT_DOUBLE_EQ(out.data[i], a.data[i]);
}

TEST(Matmul, HandArithmetic) {
    Matrix a(2, 2, {1, 2, 3, 4});
    Matrix b(2, 1, {0, 1});
    Matrix c = matmul(a, b);
    EXPECT_DOUBLE_EQ(c(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(c(1, 0), 4.0);
}

TEST(Matmul, MatchesTripleLoopOracle) {
    Rng rng(7);
    Matrix a = random_matrix(rng, 3, 4);
    Matrix b = random_matrix(rng, 4, 2);
    Matrix got = matmul(a, b);
    Matrix want = matmul_oracle(a, b);
    for (std::size_t i = 0; i < got.data.size(); ++i)
        EXPECT_NEAR(got.data[i], want.data[i], 1e-12);
}

TEST(Matmul, DimensionMismatchNamesShapes) {
    Matrix a(2, 3), b(2, 2);
    try {
        matmul(a, b);
        FAIL() << "expected exception";
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("2x3"), std::string::npos);
        EXPECT_NE(msg.find("2x2"), std::string::npos);
    }
}

TEST(Matmul, AssociativityProperty) {
    Rng rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        Matrix a = random_matrix(rng, 5, 6), b = random_matrix(rng, 6, 4),
               c = random_matrix(rng, 4, 3);
        Matrix lhs = matmul(matmul(a, b), c);
        Matrix rhs = matmul(a, matmul(b, c));
        for (std::size_t i = 0; i < lhs.data.size(); ++i)
            EXPECT_NEAR(lhs.data[i], rhs.data[i], 1e-9);
    }
}

TEST(SymEigvals, DiagonalCase) {
    Matrix s(3, 3, {3, 0, 0, 0, 1, 0, 0, 0, 2});
    Vector ev = sym_eigvals(s);
    EXPECT_NEAR(ev[0], 3.0, 1e-12);
    EXPECT_NEAR(ev[1], 2.0, 1e-12);
    EXPECT_NEAR(ev[2], 1.0, 1e-12);
}

TEST(SymEigvals, Known2x2Spectrum) {
    Matrix s(2, 2, {2, 1, 1, 2});
    Vector ev = sym_eigvals(s);
    EXPECT_NEAR(ev[0], 3.0, 1e-12);
    EXPECT_NEAR(ev[1], 1.0, 1e-12);
}

TEST(SymEigvals, MatchesJacobiOracle) {
    Rng rng(42);
    Matrix a = random_matrix(rng, 10, 10);
    Matrix s(10, 10);
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 10; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
    Vector got = sym_eigvals(s);
    std::vector<double> want = jacobi_oracle(s);
    for (std::size_t i = 0; i < 10; ++i) EXPECT_NEAR(got[i], want[i], 1e-8);
}

TEST(SymEigvals, RejectsNonSquareAndAsymmetric) {
    EXPECT_THROW(sym_eigvals(Matrix(2, 3)), std::invalid_argument);
    Matrix s(2, 2, {1, 0.5, 0.1, 1});
    EXPECT_THROW(sym_eigvals(s), std::invalid_argument);
}

TEST(SymEigvals, TracePreservation) {
    Rng rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        Matrix a = random_matrix(rng, 8, 8);
        Matrix s(8, 8);
        double trace = 0.0;
        for (std::size_t i = 0; i < 8; ++i) {
            for (std::size_t j = 0; j < 8; ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
            trace += s(i, i);
        }
        Vector ev = sym_eigvals(s);
        double sum = 0.0;
        for (double v : ev) sum += v;
        EXPECT_NEAR(sum, trace, 1e-9);
    }
}

TEST(SingularValues, Identity) {
    Vector sv = singular_values(Matrix::identity(3));
    for (double s : sv) EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(SingularValues, RankOneOuterProduct) {
    // u v^T with |u| = 2, |v| = 3 -> singular values (6, 0, 0)
    Vector u{2, 0, 0}, v{0, 3, 0};
    Matrix m(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) m(i, j) = u[i] * v[j];
    Vector sv = singular_values(m);
    EXPECT_NEAR(sv[0], 6.0, 1e-10);
    EXPECT_NEAR(sv[1], 0.0, 1e-10);
    EXPECT_NEAR(sv[2], 0.0, 1e-10);
}

TEST(SingularValues, WideMatrixMatchesGramOracle) {
    Rng rng(9);
    Matrix j = random_matrix(rng, 10, 784);
    Vector sv = singular_values(j);
    Matrix gram = matmul_oracle(j, j.transposed());
    std::vector<double> ev = jacobi_oracle(gram);
    for (std::size_t i = 0; i < 10; ++i)
        EXPECT_NEAR(sv[i], std::sqrt(std::max(0.0, ev[i])), 1e-8);
}

TEST(SingularValues, OrthogonalInvariance) {
    Rng rng(13);
    Matrix j = random_matrix(rng, 4, 6);
    Vector base = singular_values(j);
    Matrix ql = householder(sample_gaussian(rng, 4));
    Matrix qr = householder(sample_gaussian(rng, 6));
    Vector left = singular_values(matmul(ql, j));
    Vector right = singular_values(matmul(j, qr));
    for (std::size_t i = 0; i < base.size(); ++i) {
        EXPECT_NEAR(left[i], base[i], 1e-8);
        EXPECT_NEAR(right[i], base[i], 1e-8);
    }
}

TEST(Rng, GaussianMomentsAtMillionSamples) {
    Rng rng(123);
    Vector v = sample_gaussian(rng, 1000000);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= (double)v.size();
    double var = 0.0, m4 = 0.0;
    for (double x : v) {
        double d = x - mean;
        var += d * d;
        m4 += d * d * d * d;
    }
    var /= (double)v.size();
    m4 /= (double)v.size();
    EXPECT_NEAR(mean, 0.0, 0.01);
    EXPECT_NEAR(var, 1.0, 0.02);
    EXPECT_NEAR(m4 / (var * var) - 3.0, 0.0, 0.05);
}

TEST(Rng, SameSeedSameStream) {
    Rng a(55), b(55);
    Vector va = sample_gaussian(a, 1000), vb = sample_gaussian(b, 1000);
    EXPECT_EQ(va, vb);
}

TEST(Rng, ChiSquareUniformity) {
    // 100 bins, 100k draws per stream; threshold is the chi2(99) quantile at
    // p = 0.001 (~148.2).
    for (std::uint64_t seed : {1ULL, 2ULL, 99ULL}) {
        Rng rng(seed);
        std::vector<std::size_t> bins(100, 0);
        const std::size_t n = 100000;
        for (std::size_t i = 0; i < n; ++i) {
            auto b = (std::size_t)(rng.uniform() * 100.0);
            if (b >= 100) b = 99;
            bins[b]++;
        }
        double expect = (double)n / 100.0;
        double chi2 = 0.0;
        for (std::size_t c : bins) chi2 += ((double)c - expect) * ((double)c - expect) / expect;
        EXPECT_LT(chi2, 148.23) << "seed " << seed;
    }
}

TEST(Rng, DerivedStreamsDiffer) {
    Rng base(7);
    Rng a = base.derive(0), b = base.derive(1);
    EXPECT_NE(sample_gaussian(a, 10), sample_gaussian(b, 10));
}
