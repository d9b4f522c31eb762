#include "lipsysid/cayley.hpp"

namespace lipsysid {

namespace {
Matrix cayley_z(const Matrix& x, const Matrix& y) {
    if (x.rows() != x.cols()) throw ShapeError("cayley: X must be square");
    if (y.cols() != x.rows()) throw ShapeError("cayley: Y column count must match X dimension");
    return x - transpose(x) + transpose(y) * y;
}
}  // namespace

CayleyPair cayley(const Matrix& x, const Matrix& y) {
    const int n = x.rows();
    const Matrix z = cayley_z(x, y);
    const Matrix i = Matrix::identity(n);
    const Matrix s = i + z;
    // A^T = S^{-1}(I - Z)  =>  A = (I - Z)^T S^{-T}, via S^T A = (I - Z)^T.
    const Matrix at = solve(s, i - z);
    // B^T = -2 Y S^{-1}  =>  S^T B = -2 Y^T.
    const Matrix b = solve(transpose(s), -2.0 * transpose(y));
    return {transpose(at), b};
}

CayleyAdjoint cayley_adjoint(const Matrix& x, const Matrix& y,
                             const Matrix& a_bar, const Matrix& b_bar) {
    const int n = x.rows();
    const Matrix z = cayley_z(x, y);
    const Matrix i = Matrix::identity(n);
    const Matrix s = i + z;
    const Matrix st = transpose(s);
    const CayleyPair fwd = cayley(x, y);

    // dA = -(A + I) dZ^T S^{-T},  dB = -S^{-T} dZ^T B - 2 S^{-T} dY^T.
    // Pairing <G, dM> = sum_ij G_ij dM_ij gives the Z cotangent
    //   Z_bar = -S^{-T} A_bar^T (A + I) - B B_bar^T S^{-T},
    // and the direct Y term -2 B_bar^T S^{-T}.
    const Matrix s_inv_t = solve(st, i);  // S^{-T}
    const Matrix z_bar =
        -1.0 * (s_inv_t * transpose(a_bar) * (fwd.a + i)) - fwd.b * transpose(b_bar) * s_inv_t;

    // dZ = dX - dX^T + dY^T Y + Y^T dY.
    CayleyAdjoint out;
    out.x_bar = z_bar - transpose(z_bar);
    out.y_bar = y * (z_bar + transpose(z_bar)) - 2.0 * transpose(b_bar) * s_inv_t;
    return out;
}

}  // namespace lipsysid
