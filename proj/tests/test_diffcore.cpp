#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "lipsysid/cayley.hpp"
#include "lipsysid/linalg.hpp"
#include "lipsysid/tape.hpp"
#include "test_util.hpp"

using namespace lipsysid;
using namespace lipsysid::testutil;

TEST_CASE("solve recovers known systems") {
    Matrix a(2, 2);
    a(0, 0) = 2;
    a(0, 1) = 1;
    a(1, 0) = 1;
    a(1, 1) = 3;
    Matrix b(2, 1);
    b(0, 0) = 5;
    b(1, 0) = 10;
    Matrix x = solve(a, b);
    CHECK(x(0, 0) == doctest::Approx(1.0));
    CHECK(x(1, 0) == doctest::Approx(3.0));

    std::mt19937_64 rng(7);
    for (int t = 0; t < 20; ++t) {
        Matrix m = random_matrix(8, 8, rng);
        Matrix rhs = random_matrix(8, 3, rng);
        Matrix sol = solve(m, rhs);
        CHECK(frobenius_norm(m * sol - rhs) < 1e-9);
    }
}

TEST_CASE("solve rejects singular matrix") {
    Matrix a(2, 2);  // rank 1
    a(0, 0) = 1;
    a(0, 1) = 2;
    a(1, 0) = 2;
    a(1, 1) = 4;
    Matrix b(2, 1, 1.0);
    CHECK_THROWS_AS(solve(a, b), std::runtime_error);
}

TEST_CASE("spectral_norm on diagonal and rotation-like matrices") {
    CHECK(spectral_norm(Matrix::diag({3.0, 1.0})) == doctest::Approx(3.0));
    // [[-0.2, 2], [-2, -0.2]] has M^T M = 4.04 I.
    Matrix m(2, 2);
    m(0, 0) = -0.2;
    m(0, 1) = 2.0;
    m(1, 0) = -2.0;
    m(1, 1) = -0.2;
    CHECK(spectral_norm(m) == doctest::Approx(std::sqrt(4.04)).epsilon(1e-9));
    CHECK(spectral_norm(Matrix(3, 3)) == 0.0);
}

TEST_CASE("spectral_norm dominates rayleigh quotients") {
    std::mt19937_64 rng(3);
    Matrix m = random_matrix(6, 6, rng);
    const double s = spectral_norm(m, 1e-12);
    for (int t = 0; t < 100; ++t) {
        Vector x = random_vector(6, rng);
        const double q = norm2(matvec(m, x)) / norm2(x);
        CHECK(s >= q - 1e-9 * s);
    }
}

TEST_CASE("cayley identity and 1x1 hand cases") {
    {
        Matrix x(1, 1), y(1, 1);
        CayleyPair p = cayley(x, y);
        CHECK(p.a(0, 0) == doctest::Approx(1.0));
        CHECK(p.b(0, 0) == doctest::Approx(0.0));
    }
    {
        Matrix x(1, 1), y(1, 1);
        y(0, 0) = 1.0;
        CayleyPair p = cayley(x, y);
        CHECK(p.a(0, 0) == doctest::Approx(0.0));
        CHECK(p.b(0, 0) == doctest::Approx(-1.0));
        CHECK(p.a(0, 0) * p.a(0, 0) + p.b(0, 0) * p.b(0, 0) == doctest::Approx(1.0));
    }
}

TEST_CASE("cayley satisfies A A^T + B B^T = I") {
    std::mt19937_64 rng(0);
    for (int t = 0; t < 50; ++t) {
        const int n_out = 1 + static_cast<int>(rng() % 6);
        const int n_in = 1 + static_cast<int>(rng() % 6);
        Matrix x = random_matrix(n_out, n_out, rng);
        Matrix y = random_matrix(n_in, n_out, rng);
        CayleyPair p = cayley(x, y);
        Matrix gram = p.a * transpose(p.a) + p.b * transpose(p.b);
        CHECK(frobenius_norm(gram - Matrix::identity(n_out)) < 1e-10);
    }
}

namespace {

// Scalar probe of the cayley map for finite differencing: sum of
// elementwise products with fixed cotangents.
double cayley_probe(const Matrix& x, const Matrix& y, const Matrix& a_bar, const Matrix& b_bar) {
    CayleyPair p = cayley(x, y);
    double s = 0.0;
    for (size_t i = 0; i < p.a.size(); ++i) s += a_bar.data()[i] * p.a.data()[i];
    for (size_t i = 0; i < p.b.size(); ++i) s += b_bar.data()[i] * p.b.data()[i];
    return s;
}

}  // namespace

TEST_CASE("cayley_adjoint matches central finite differences") {
    std::mt19937_64 rng(0);
    for (int t = 0; t < 20; ++t) {
        const int n_out = 1 + static_cast<int>(rng() % 4);
        const int n_in = 1 + static_cast<int>(rng() % 4);
        Matrix x = random_matrix(n_out, n_out, rng, 0.5);
        Matrix y = random_matrix(n_in, n_out, rng, 0.5);
        Matrix a_bar = random_matrix(n_out, n_out, rng);
        Matrix b_bar = random_matrix(n_out, n_in, rng);

        CayleyAdjoint adj = cayley_adjoint(x, y, a_bar, b_bar);

        const double h = 1e-6;
        for (size_t i = 0; i < x.size(); ++i) {
            Matrix xp = x, xm = x;
            xp.data()[i] += h;
            xm.data()[i] -= h;
            const double fd =
                (cayley_probe(xp, y, a_bar, b_bar) - cayley_probe(xm, y, a_bar, b_bar)) / (2 * h);
            CHECK(rel_err(adj.x_bar.data()[i], fd) < 1e-5);
        }
        for (size_t i = 0; i < y.size(); ++i) {
            Matrix yp = y, ym = y;
            yp.data()[i] += h;
            ym.data()[i] -= h;
            const double fd =
                (cayley_probe(x, yp, a_bar, b_bar) - cayley_probe(x, ym, a_bar, b_bar)) / (2 * h);
            CHECK(rel_err(adj.y_bar.data()[i], fd) < 1e-5);
        }
    }
}

TEST_CASE("cayley_adjoint zero cotangent and scalar case") {
    Matrix x(2, 2), y(3, 2);
    std::mt19937_64 rng(1);
    x = random_matrix(2, 2, rng);
    y = random_matrix(3, 2, rng);
    CayleyAdjoint adj = cayley_adjoint(x, y, Matrix(2, 2), Matrix(2, 3));
    CHECK(frobenius_norm(adj.x_bar) == 0.0);
    CHECK(frobenius_norm(adj.y_bar) == 0.0);

    // X = [[0]], Y = [[1]], A_bar = [[1]]: dA/dY at Y=1 is -1.
    Matrix x1(1, 1), y1(1, 1), ab(1, 1), bb(1, 1);
    y1(0, 0) = 1.0;
    ab(0, 0) = 1.0;
    CayleyAdjoint s = cayley_adjoint(x1, y1, ab, bb);
    CHECK(s.y_bar(0, 0) == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(s.x_bar(0, 0) == doctest::Approx(0.0));
}

namespace {

// Evaluates a composite tape expression as a function of leaf entries, for
// finite differencing. Builds: loss = sum_sq(relu(W*H + b) elementwise ops).
double tape_expr(const Matrix& w, const Matrix& h, const Matrix& b, const Matrix& v) {
    Tape t;
    auto iw = t.leaf(w);
    auto ih = t.leaf(h);
    auto ib = t.leaf(b);
    auto iv = t.leaf(v);
    auto e = t.exp_elem(iv);
    auto m = t.row_scale(e, t.matmul(iw, ih));
    auto s = t.relu(t.add_col(m, ib));
    auto loss = t.sum_sq(t.scale(s, 0.7));
    return t.value(loss)(0, 0);
}

}  // namespace

TEST_CASE("tape gradients match finite differences on composite expressions") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix w = random_matrix(4, 3, rng);
        Matrix h = random_matrix(3, 5, rng);
        Matrix b = random_matrix(4, 1, rng);
        Matrix v = random_matrix(4, 1, rng, 0.3);

        Tape t;
        auto iw = t.leaf(w);
        auto ih = t.leaf(h);
        auto ib = t.leaf(b);
        auto iv = t.leaf(v);
        auto e = t.exp_elem(iv);
        auto m = t.row_scale(e, t.matmul(iw, ih));
        auto s = t.relu(t.add_col(m, ib));
        auto loss = t.sum_sq(t.scale(s, 0.7));
        t.backward(loss);

        const double h_step = 1e-6;
        auto check_grads = [&](Matrix& base, const Matrix& grad) {
            for (size_t i = 0; i < base.size(); ++i) {
                const double x0 = base.data()[i];
                base.data()[i] = x0 + h_step;
                const double fp = tape_expr(w, h, b, v);
                base.data()[i] = x0 - h_step;
                const double fm = tape_expr(w, h, b, v);
                base.data()[i] = x0;
                const double fd = (fp - fm) / (2 * h_step);
                if (std::abs(fd) > 1e-7) CHECK(rel_err(grad.data()[i], fd) < 1e-4);
            }
        };
        check_grads(w, t.grad(iw));
        check_grads(h, t.grad(ih));
        check_grads(b, t.grad(ib));
        check_grads(v, t.grad(iv));
    }
}

TEST_CASE("tape cayley node propagates adjoints") {
    std::mt19937_64 rng(5);
    Matrix x = random_matrix(3, 3, rng, 0.5);
    Matrix y = random_matrix(2, 3, rng, 0.5);
    Matrix h = random_matrix(2, 4, rng);

    auto eval = [&](const Matrix& xx, const Matrix& yy) {
        Tape t;
        auto ix = t.leaf(xx);
        auto iy = t.leaf(yy);
        auto [ia, ib] = t.cayley_node(ix, iy);
        auto ih = t.leaf(h);
        auto prod = t.matmul(ib, ih);
        auto both = t.add(t.sum_sq(prod), t.sum_sq(ia));
        return t.value(both)(0, 0);
    };

    Tape t;
    auto ix = t.leaf(x);
    auto iy = t.leaf(y);
    auto [ia, ib] = t.cayley_node(ix, iy);
    auto ih = t.leaf(h);
    auto prod = t.matmul(ib, ih);
    auto both = t.add(t.sum_sq(prod), t.sum_sq(ia));
    t.backward(both);

    const double hs = 1e-6;
    for (size_t i = 0; i < x.size(); ++i) {
        Matrix xp = x, xm = x;
        xp.data()[i] += hs;
        xm.data()[i] -= hs;
        const double fd = (eval(xp, y) - eval(xm, y)) / (2 * hs);
        if (std::abs(fd) > 1e-7) CHECK(rel_err(t.grad(ix).data()[i], fd) < 1e-4);
    }
    for (size_t i = 0; i < y.size(); ++i) {
        Matrix yp = y, ym = y;
        yp.data()[i] += hs;
        ym.data()[i] -= hs;
        const double fd = (eval(x, yp) - eval(x, ym)) / (2 * hs);
        if (std::abs(fd) > 1e-7) CHECK(rel_err(t.grad(iy).data()[i], fd) < 1e-4);
    }
}

TEST_CASE("tape col_diff and l2_norm") {
    Tape t;
    Matrix m(2, 3);
    m(0, 0) = 1;
    m(1, 0) = 2;
    m(0, 1) = 4;
    m(1, 1) = 6;
    auto im = t.leaf(m);
    auto d = t.col_diff(im, 1, 0);  // (3, 4)
    auto n = t.l2_norm(d);
    CHECK(t.value(n)(0, 0) == doctest::Approx(5.0));
    t.backward(n);
    // d/dm of ||col1 - col0||: unit direction (0.6, 0.8) into col1, negated into col0.
    CHECK(t.grad(im)(0, 1) == doctest::Approx(0.6));
    CHECK(t.grad(im)(1, 1) == doctest::Approx(0.8));
    CHECK(t.grad(im)(0, 0) == doctest::Approx(-0.6));
    CHECK(t.grad(im)(1, 0) == doctest::Approx(-0.8));
}
