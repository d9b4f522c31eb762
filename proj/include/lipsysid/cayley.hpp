#pragma once

#include "lipsysid/linalg.hpp"

namespace lipsysid {

// Orthogonality-constrained weight pair produced by the Cayley transform:
// with Z = X - X^T + Y^T Y,
//   A^T = (I + Z)^{-1} (I - Z),   B^T = -2 Y (I + Z)^{-1},
// which satisfies A A^T + B B^T = I. I + Z is always nonsingular (skew part
// plus a PSD part), so solve failures indicate parameter overflow.
struct CayleyPair {
    Matrix a;  // n_out x n_out
    Matrix b;  // n_out x n_in
};

// X: n_out x n_out, Y: n_in x n_out.
CayleyPair cayley(const Matrix& x, const Matrix& y);

// Reverse-mode adjoint of cayley(): maps output cotangents (a_bar, b_bar)
// to input cotangents (x_bar, y_bar). The inverse is differentiated through
// the solve, d(M^{-1}) = -M^{-1} dM M^{-1}.
struct CayleyAdjoint {
    Matrix x_bar;
    Matrix y_bar;
};

CayleyAdjoint cayley_adjoint(const Matrix& x, const Matrix& y,
                             const Matrix& a_bar, const Matrix& b_bar);

}  // namespace lipsysid
