#pragma once

#include <cmath>

#include "graphnotears/types.hpp"

namespace gnt {

namespace detail {

// Degree-m diagonal Pade approximant split into U (odd powers) and V (even
// powers); exp(A) ~= (V - U)^{-1} (V + U).

inline void expm_pade3(const Matrix& A, Matrix& U, Matrix& V) {
  static const double b[] = {120., 60., 12., 1.};
  const Matrix A2 = A * A;
  const Matrix I = Matrix::Identity(A.rows(), A.cols());
  U = A * (b[3] * A2 + b[1] * I);
  V = b[2] * A2 + b[0] * I;
}

inline void expm_pade5(const Matrix& A, Matrix& U, Matrix& V) {
  static const double b[] = {30240., 15120., 3360., 420., 30., 1.};
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix I = Matrix::Identity(A.rows(), A.cols());
  U = A * (b[5] * A4 + b[3] * A2 + b[1] * I);
  V = b[4] * A4 + b[2] * A2 + b[0] * I;
}

inline void expm_pade7(const Matrix& A, Matrix& U, Matrix& V) {
  static const double b[] = {17297280., 8648640., 1995840., 277200.,
                             25200.,    1512.,    56.,      1.};
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  const Matrix I = Matrix::Identity(A.rows(), A.cols());
  U = A * (b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  V = b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
}

inline void expm_pade9(const Matrix& A, Matrix& U, Matrix& V) {
  static const double b[] = {17643225600., 8821612800., 2075673600.,
                             302702400.,   30270240.,   2162160.,
                             110880.,      3960.,       90.,
                             1.};
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  const Matrix A8 = A6 * A2;
  const Matrix I = Matrix::Identity(A.rows(), A.cols());
  U = A * (b[9] * A8 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I);
  V = b[8] * A8 + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
}

inline void expm_pade13(const Matrix& A, Matrix& U, Matrix& V) {
  static const double b[] = {64764752532480000., 32382376266240000.,
                             7771770303897600.,  1187353796428800.,
                             129060195264000.,   10559470521600.,
                             670442572800.,      33522128640.,
                             1323241920.,        40840800.,
                             960960.,            16380.,
                             182.,               1.};
  const Matrix A2 = A * A;
  const Matrix A4 = A2 * A2;
  const Matrix A6 = A4 * A2;
  const Matrix I = Matrix::Identity(A.rows(), A.cols());
  U = A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 +
           b[5] * A4 + b[3] * A2 + b[1] * I);
  V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 +
      b[2] * A2 + b[0] * I;
}

}  // namespace detail

// Largest 1-norm the exponential accepts; the acyclicity-penalty path never
// needs more, so anything beyond signals a diverging iterate.
inline constexpr double kExpmNormLimit = 100.0;

// Dense matrix exponential by scaling-and-squaring with Pade approximants
// (Higham 2005). Accurate to ~1e-12 inside the norm limit.
inline Matrix expm(const Matrix& A) {
  if (A.rows() != A.cols()) throw ShapeMismatch("expm: matrix must be square");
  const double norm = A.cwiseAbs().colwise().sum().maxCoeff();
  if (!std::isfinite(norm) || norm > kExpmNormLimit) {
    throw NumericalOverflow("expm: matrix 1-norm " + std::to_string(norm) +
                            " exceeds limit " + std::to_string(kExpmNormLimit));
  }

  Matrix U, V;
  int squarings = 0;
  if (norm < 1.495585217958292e-2) {
    detail::expm_pade3(A, U, V);
  } else if (norm < 2.539398330063230e-1) {
    detail::expm_pade5(A, U, V);
  } else if (norm < 9.504178996162932e-1) {
    detail::expm_pade7(A, U, V);
  } else if (norm < 2.097847961257068e0) {
    detail::expm_pade9(A, U, V);
  } else {
    const double theta13 = 5.371920351148152e0;
    if (norm > theta13) {
      squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
    }
    const Matrix As = A * std::pow(2.0, -squarings);
    detail::expm_pade13(As, U, V);
  }

  Matrix F = (V - U).partialPivLu().solve(V + U);
  for (int i = 0; i < squarings; ++i) F = F * F;
  return F;
}

}  // namespace gnt
