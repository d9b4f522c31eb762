#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace lipsysid {

using Vector = std::vector<double>;

// Dense row-major matrix. Sizes here never exceed a few hundred, so all
// kernels are straightforward loops.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols, fill) {}

    static Matrix identity(int n);
    static Matrix diag(const Vector& d);
    static Matrix from_column(const Vector& v);

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    double& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
    double operator()(int i, int j) const { return a_[static_cast<size_t>(i) * cols_ + j]; }

    double* data() { return a_.data(); }
    const double* data() const { return a_.data(); }
    size_t size() const { return a_.size(); }

    Vector column(int j) const;
    void set_column(int j, const Vector& v);

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> a_;
};

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);
Matrix transpose(const Matrix& a);

Vector matvec(const Matrix& a, const Vector& x);

double frobenius_norm(const Matrix& a);
double norm2(const Vector& v);
double dot(const Vector& a, const Vector& b);
Vector vsub(const Vector& a, const Vector& b);
Vector vadd(const Vector& a, const Vector& b);
Vector vscale(double s, const Vector& v);

// Solves A X = B by LU with partial pivoting. Throws std::runtime_error on a
// numerically singular pivot.
Matrix solve(const Matrix& a, const Matrix& b);

// Largest singular value via power iteration on M^T M. A zero matrix
// returns 0. Deterministic: the start vector is fixed.
double spectral_norm(const Matrix& m, double tol = 1e-9, int max_iter = 10000);

struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace lipsysid
