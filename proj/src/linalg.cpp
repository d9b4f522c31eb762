#include "lipsysid/linalg.hpp"

#include <cmath>
#include <cstdlib>

namespace lipsysid {

namespace {
void require(bool ok, const char* what) {
    if (!ok) throw ShapeError(what);
}
}  // namespace

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diag(const Vector& d) {
    Matrix m(static_cast<int>(d.size()), static_cast<int>(d.size()));
    for (size_t i = 0; i < d.size(); ++i) m(static_cast<int>(i), static_cast<int>(i)) = d[i];
    return m;
}

Matrix Matrix::from_column(const Vector& v) {
    Matrix m(static_cast<int>(v.size()), 1);
    for (size_t i = 0; i < v.size(); ++i) m(static_cast<int>(i), 0) = v[i];
    return m;
}

Vector Matrix::column(int j) const {
    Vector v(rows_);
    for (int i = 0; i < rows_; ++i) v[i] = (*this)(i, j);
    return v;
}

void Matrix::set_column(int j, const Vector& v) {
    for (int i = 0; i < rows_; ++i) (*this)(i, j) = v[i];
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    require(a.same_shape(b), "matrix add: shape mismatch");
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    require(a.same_shape(b), "matrix sub: shape mismatch");
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
    require(a.cols() == b.rows(), "matmul: inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i) {
        for (int k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (int j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix c = a;
    for (size_t i = 0; i < c.size(); ++i) c.data()[i] *= s;
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Vector matvec(const Matrix& a, const Vector& x) {
    require(a.cols() == static_cast<int>(x.size()), "matvec: dimension mismatch");
    Vector y(a.rows(), 0.0);
    for (int i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
    return std::sqrt(s);
}

double norm2(const Vector& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(const Vector& a, const Vector& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Vector vsub(const Vector& a, const Vector& b) {
    Vector c(a.size());
    for (size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
    return c;
}

Vector vadd(const Vector& a, const Vector& b) {
    Vector c(a.size());
    for (size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
    return c;
}

Vector vscale(double s, const Vector& v) {
    Vector c(v.size());
    for (size_t i = 0; i < v.size(); ++i) c[i] = s * v[i];
    return c;
}

Matrix solve(const Matrix& a, const Matrix& b) {
    require(a.rows() == a.cols(), "solve: matrix not square");
    require(a.rows() == b.rows(), "solve: rhs row count mismatch");
    const int n = a.rows();
    Matrix lu = a;
    Matrix x = b;
    std::vector<int> piv(n);
    for (int i = 0; i < n; ++i) piv[i] = i;

    for (int k = 0; k < n; ++k) {
        int p = k;
        double best = std::abs(lu(k, k));
        for (int i = k + 1; i < n; ++i) {
            if (std::abs(lu(i, k)) > best) {
                best = std::abs(lu(i, k));
                p = i;
            }
        }
        if (best < 1e-300) throw std::runtime_error("solve: singular matrix");
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(lu(k, j), lu(p, j));
            for (int j = 0; j < x.cols(); ++j) std::swap(x(k, j), x(p, j));
        }
        for (int i = k + 1; i < n; ++i) {
            const double m = lu(i, k) / lu(k, k);
            lu(i, k) = m;
            for (int j = k + 1; j < n; ++j) lu(i, j) -= m * lu(k, j);
        }
    }
    // Forward substitution (unit lower triangle stored below the diagonal).
    for (int j = 0; j < x.cols(); ++j) {
        for (int i = 1; i < n; ++i) {
            double s = x(i, j);
            for (int k = 0; k < i; ++k) s -= lu(i, k) * x(k, j);
            x(i, j) = s;
        }
        for (int i = n - 1; i >= 0; --i) {
            double s = x(i, j);
            for (int k = i + 1; k < n; ++k) s -= lu(i, k) * x(k, j);
            x(i, j) = s / lu(i, i);
        }
    }
    return x;
}

double spectral_norm(const Matrix& m, double tol, int max_iter) {
    if (m.rows() == 0 || m.cols() == 0) return 0.0;
    double maxabs = 0.0;
    for (size_t i = 0; i < m.size(); ++i) maxabs = std::max(maxabs, std::abs(m.data()[i]));
    if (maxabs == 0.0) return 0.0;

    // Fixed start vector keeps the result reproducible across runs.
    Vector v(m.cols());
    for (size_t i = 0; i < v.size(); ++i) v[i] = 1.0 + 0.01 * static_cast<double>(i % 7);
    double nv = norm2(v);
    for (double& x : v) x /= nv;

    const Matrix mt = transpose(m);
    double sigma2 = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        Vector w = matvec(mt, matvec(m, v));
        const double lambda = norm2(w);
        if (lambda == 0.0) return 0.0;
        for (double& x : w) x /= lambda;
        v = w;
        const double prev = sigma2;
        sigma2 = lambda;
        if (it > 0 && std::abs(sigma2 - prev) <= tol * sigma2) break;
    }
    return std::sqrt(sigma2);
}

}  // namespace lipsysid
