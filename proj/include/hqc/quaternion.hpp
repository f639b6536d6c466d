#pragma once

// Quaternion arithmetic on 4-vectors (x0 + x1 i + x2 j + x3 k), the matrices
// of left/right multiplication, and SO(3) exponential-chart helpers.

#include <cmath>

#include "hqc/types.hpp"

namespace hqc {

template <class T>
using Quat = Eigen::Matrix<T, 4, 1>;

template <class T>
Quat<T> qmul(const Quat<T>& p, const Quat<T>& q) {
  Quat<T> r;
  r[0] = p[0] * q[0] - p[1] * q[1] - p[2] * q[2] - p[3] * q[3];
  r[1] = p[0] * q[1] + p[1] * q[0] + p[2] * q[3] - p[3] * q[2];
  r[2] = p[0] * q[2] - p[1] * q[3] + p[2] * q[0] + p[3] * q[1];
  r[3] = p[0] * q[3] + p[1] * q[2] - p[2] * q[1] + p[3] * q[0];
  return r;
}

template <class T>
Quat<T> qconj(const Quat<T>& q) {
  return Quat<T>(q[0], -q[1], -q[2], -q[3]);
}

inline Quat<double> qunit(int k) { return Quat<double>::Unit(k); }

// Matrix of v -> p v.
inline Eigen::Matrix4d left_mult(const Quat<double>& p) {
  Eigen::Matrix4d m;
  for (int c = 0; c < 4; ++c) m.col(c) = qmul<double>(p, qunit(c));
  return m;
}
// Matrix of v -> v p.
inline Eigen::Matrix4d right_mult(const Quat<double>& p) {
  Eigen::Matrix4d m;
  for (int c = 0; c < 4; ++c) m.col(c) = qmul<double>(qunit(c), p);
  return m;
}

// Block-diagonal matrix on H^n repeating a 4x4 block.
inline MatX block_diag(const Eigen::Matrix4d& b, int n) {
  MatX m = MatX::Zero(4 * n, 4 * n);
  for (int k = 0; k < n; ++k) m.block(4 * k, 4 * k, 4, 4) = b;
  return m;
}

// Standard frame on H^n: I1 = R_i, I2 = R_j, I3 = -R_k.
inline Frame<double> standard_frame(int n) {
  return {block_diag(right_mult(qunit(1)), n), block_diag(right_mult(qunit(2)), n),
          block_diag(Eigen::Matrix4d(-right_mult(qunit(3))), n)};
}

template <class S>
Frame<S> lift_frame(const Frame<double>& f) {
  return {lift<S>(f[0]), lift<S>(f[1]), lift<S>(f[2])};
}

// ---------------------------------------------------------------------------
// SO(3). Coefficient functions of s = |phi|^2, switched to Taylor series for
// small s so that forward-mode derivatives stay finite at phi = 0.

namespace so3_detail {
inline constexpr double kSeriesCutoff = 1e-2;

// sin t / t
template <class T>
T sinc(const T& s) {
  using std::sin;
  using std::sqrt;
  if (value(s) < kSeriesCutoff) return 1.0 - s / 6.0 + s * s / 120.0 - s * s * s / 5040.0 + s * s * s * s / 362880.0;
  T t = sqrt(s);
  return sin(t) / t;
}
// (1 - cos t) / t^2
template <class T>
T cosc(const T& s) {
  using std::cos;
  using std::sqrt;
  if (value(s) < kSeriesCutoff)
    return 0.5 - s / 24.0 + s * s / 720.0 - s * s * s / 40320.0 + s * s * s * s / 3628800.0;
  T t = sqrt(s);
  return (1.0 - cos(t)) / s;
}
// (t - sin t) / t^3
template <class T>
T sinc3(const T& s) {
  using std::sin;
  using std::sqrt;
  if (value(s) < kSeriesCutoff)
    return 1.0 / 6.0 - s / 120.0 + s * s / 5040.0 - s * s * s / 362880.0 + s * s * s * s / 39916800.0;
  T t = sqrt(s);
  return (t - sin(t)) / (s * t);
}
// 1/t^2 - (1 + cos t) / (2 t sin t)
template <class T>
T jinv_coef(const T& s) {
  using std::cos;
  using std::sin;
  using std::sqrt;
  if (value(s) < kSeriesCutoff)
    return 1.0 / 12.0 + s / 720.0 + s * s / 30240.0 + s * s * s / 1209600.0 + s * s * s * s / 47900160.0;
  T t = sqrt(s);
  return 1.0 / s - (1.0 + cos(t)) / (2.0 * t * sin(t));
}
}  // namespace so3_detail

template <class T>
Mat3<T> so3_exp(const Vec3<T>& phi) {
  T s = phi.squaredNorm();
  Mat3<T> K = hat(phi);
  return Mat3<T>::Identity() + so3_detail::sinc(s) * K + so3_detail::cosc(s) * (K * K);
}

// Right Jacobian: Exp(phi)^{-1} d Exp(phi) = hat(J_r(phi) dphi).
template <class T>
Mat3<T> so3_jr(const Vec3<T>& phi) {
  T s = phi.squaredNorm();
  Mat3<T> K = hat(phi);
  return Mat3<T>::Identity() - so3_detail::cosc(s) * K + so3_detail::sinc3(s) * (K * K);
}

template <class T>
Mat3<T> so3_jr_inv(const Vec3<T>& phi) {
  T s = phi.squaredNorm();
  Mat3<T> K = hat(phi);
  return Mat3<T>::Identity() + 0.5 * K + so3_detail::jinv_coef(s) * (K * K);
}

// Logarithm on SO(3) (double only), rotation angle < pi.
inline Vec3d so3_log(const Mat3d& R) {
  double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  double t = std::acos(c);
  Vec3d w = vee(Mat3d(R - R.transpose()));  // = 2 sin t * axis
  if (t < 1e-6) return 0.5 * w;
  return w * (t / (2.0 * std::sin(t)));
}

inline Mat3d rot_axis(int axis, double angle) {
  Vec3d phi = Vec3d::Zero();
  phi[axis] = angle;
  return so3_exp(phi);
}

// Rotation matrix of a unit quaternion.
inline Mat3d quat_to_rotation(const Quat<double>& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3d R;
  R << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y), 2 * (x * y + w * z),
      1 - 2 * (x * x + z * z), 2 * (y * z - w * x), 2 * (x * z - w * y), 2 * (y * z + w * x),
      1 - 2 * (x * x + y * y);
  return R;
}

// Nearest rotation via polar decomposition.
inline Mat3d polar_rotation(const Mat3d& M) {
  Eigen::JacobiSVD<Mat3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3d U = svd.matrixU(), V = svd.matrixV();
  Mat3d D = Mat3d::Identity();
  D(2, 2) = (U * V.transpose()).determinant() < 0 ? -1.0 : 1.0;
  return U * D * V.transpose();
}

// Vector (a*acos(c)/sqrt(1-c^2)) with the factor expanded near c = 1; used to
// build the rotation vector of the minimal rotation e1 -> w for unit w.
template <class T>
Vec3<T> minimal_rotation_vector(const Vec3<T>& w) {
  using std::acos;
  using std::sqrt;
  Vec3<T> axis(T(0.0), -w[2], w[1]);  // e1 x w
  T c = w[0];
  T d = 1.0 - c;
  T factor;
  if (value(d) < 1e-3)
    factor = 1.0 + d / 3.0 + 2.0 * d * d / 15.0 + 2.0 * d * d * d / 35.0 + 8.0 * d * d * d * d / 315.0 +
             8.0 * d * d * d * d * d / 693.0;
  else
    factor = acos(c) / sqrt(1.0 - c * c);
  return axis * factor;
}

}  // namespace hqc
