#ifndef FHN_MAT2_HPP
#define FHN_MAT2_HPP

// Closed-form functions of real 2x2 matrices: exponential, phi_1, the
// continuous Lyapunov solve and a semidefinite Cholesky factor. Every spectral
// mode of the drift reduces to one of these blocks.

#include <Eigen/Dense>
#include <cmath>

#include "fhn/errors.hpp"

namespace fhn {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

namespace detail {

// cosh(sqrt(q)) and sinh(sqrt(q))/sqrt(q), analytic in q, each multiplied by
// exp(s). Exponents are merged so large |s| +- sqrt(q) cannot overflow.
inline void scaled_cosh_sinhc(double s, double q, double& ch, double& sh) {
  if (std::abs(q) < 1e-4) {
    double es = std::exp(s);
    ch = es * (1.0 + q / 2.0 + q * q / 24.0 + q * q * q / 720.0);
    sh = es * (1.0 + q / 6.0 + q * q / 120.0 + q * q * q / 5040.0);
  } else if (q > 0) {
    double r = std::sqrt(q);
    double ep = std::exp(s + r), em = std::exp(s - r);
    ch = 0.5 * (ep + em);
    sh = 0.5 * (ep - em) / r;
  } else {
    double r = std::sqrt(-q);
    double es = std::exp(s);
    ch = es * std::cos(r);
    sh = es * std::sin(r) / r;
  }
}

}  // namespace detail

/// Matrix exponential of a 2x2 matrix via the traceless split A = sI + B, B^2 = qI.
inline Mat2 expm(const Mat2& a) {
  double s = 0.5 * a.trace();
  Mat2 b = a - s * Mat2::Identity();
  double q = b(0, 0) * b(0, 0) + b(0, 1) * b(1, 0);
  double ch = 0, sh = 0;
  detail::scaled_cosh_sinhc(s, q, ch, sh);
  return ch * Mat2::Identity() + sh * b;
}

/// phi_1(Z) = Z^{-1}(e^Z - I) = sum_j Z^j/(j+1)!.
inline Mat2 phi1(const Mat2& z) {
  double norm = z.lpNorm<Eigen::Infinity>();
  if (norm < 0.5) {
    Mat2 term = Mat2::Identity();
    Mat2 sum = Mat2::Identity();
    for (int j = 1; j < 24; ++j) {
      term = term * z / static_cast<double>(j + 1);
      sum += term;
    }
    return sum;
  }
  double det = z.determinant();
  if (std::abs(det) < 1e-300) {
    throw NumericalError("phi1: singular argument with large norm");
  }
  return z.inverse() * (expm(z) - Mat2::Identity());
}

/// Max real part of the eigenvalues of m.
inline double spectral_abscissa(const Mat2& m) {
  double tr = m.trace();
  double det = m.determinant();
  double disc = tr * tr / 4.0 - det;
  return disc >= 0 ? tr / 2.0 + std::sqrt(disc) : tr / 2.0;
}

inline bool is_hurwitz(const Mat2& m) { return m.trace() < 0 && m.determinant() > 0; }

/// Solves m * S + S * m^T + q = 0 for symmetric S.
inline Mat2 lyapunov(const Mat2& m, const Mat2& q) {
  if (!is_hurwitz(m)) throw NumericalError("lyapunov: mode matrix is not Hurwitz");
  const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
  Eigen::Matrix3d sys;
  sys << 2 * a, 2 * b, 0,  //
      c, a + d, b,         //
      0, 2 * c, 2 * d;
  Eigen::Vector3d rhs(-q(0, 0), -0.5 * (q(0, 1) + q(1, 0)), -q(1, 1));
  Eigen::FullPivLU<Eigen::Matrix3d> lu(sys);
  if (!lu.isInvertible()) throw NumericalError("lyapunov: singular 3x3 system");
  Eigen::Vector3d s = lu.solve(rhs);
  Mat2 out;
  out << s(0), s(1), s(1), s(2);
  return out;
}

/// Lower-triangular L with L L^T = s for a symmetric positive semidefinite s.
/// Round-off negatives on the diagonal are clipped to zero.
inline Mat2 cholesky_psd(const Mat2& s) {
  Mat2 l = Mat2::Zero();
  double l00 = std::sqrt(std::max(s(0, 0), 0.0));
  double l10 = l00 > 0 ? s(1, 0) / l00 : 0.0;
  double l11 = std::sqrt(std::max(s(1, 1) - l10 * l10, 0.0));
  l(0, 0) = l00;
  l(1, 0) = l10;
  l(1, 1) = l11;
  return l;
}

}  // namespace fhn

#endif  // FHN_MAT2_HPP
