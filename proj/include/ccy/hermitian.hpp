#pragma once

#include <cmath>

#include "ccy/util.hpp"

namespace ccy {

// 2x2 Hermitian matrix of metric coefficients in a (dz, dw)-type coframe.
// The squared length of a tangent vector (v1, v2) is
//   g11 |v1|^2 + 2 Re(g12 v1 conj(v2)) + g22 |v2|^2.
struct HermitianForm2 {
  double g11 = 0.0, g22 = 0.0;
  cplx g12{};

  double det() const { return g11 * g22 - std::norm(g12); }
  bool positive_definite() const { return g11 > 0.0 && det() > 0.0; }

  double length2(cplx v1, cplx v2) const {
    return g11 * std::norm(v1) + 2.0 * (g12 * v1 * std::conj(v2)).real() +
           g22 * std::norm(v2);
  }

  HermitianForm2 operator+(const HermitianForm2& o) const {
    return {g11 + o.g11, g22 + o.g22, g12 + o.g12};
  }
  HermitianForm2 operator-(const HermitianForm2& o) const {
    return {g11 - o.g11, g22 - o.g22, g12 - o.g12};
  }
  HermitianForm2 scaled(double c) const { return {c * g11, c * g22, c * g12}; }

  // Eigenvalues of ref^{-1} (*this); ref must be positive definite.
  void relative_eigenvalues(const HermitianForm2& ref, double& lo,
                            double& hi) const {
    // det(A - x B) = x^2 det B - x (a11 b22 + a22 b11 - 2 Re(a12 conj(b12)))
    //              + det A
    const double db = ref.det();
    const double da = det();
    const double mixed = g11 * ref.g22 + g22 * ref.g11 -
                         2.0 * (g12 * std::conj(ref.g12)).real();
    const double disc = std::max(0.0, mixed * mixed - 4.0 * db * da);
    const double root = std::sqrt(disc);
    lo = (mixed - root) / (2.0 * db);
    hi = (mixed + root) / (2.0 * db);
  }

  // Frobenius-type norm of *this measured against a reference metric,
  // |A|_B = sqrt(tr(B^{-1} A B^{-1} A)).
  double norm_against(const HermitianForm2& ref) const {
    const double db = ref.det();
    // B^{-1} = (1/det) [b22, -b12; -conj(b12), b11]
    const double i11 = ref.g22 / db, i22 = ref.g11 / db;
    const cplx i12 = -ref.g12 / db;
    // M = B^{-1} A (general complex 2x2)
    const cplx m11 = i11 * g11 + i12 * std::conj(g12);
    const cplx m12 = i11 * g12 + i12 * g22;
    const cplx m21 = std::conj(i12) * g11 + i22 * std::conj(g12);
    const cplx m22 = std::conj(i12) * g12 + i22 * g22;
    const double tr =
        (m11 * m11 + m12 * m21 + m21 * m12 + m22 * m22).real();
    return std::sqrt(std::max(0.0, tr));
  }
};

}  // namespace ccy
