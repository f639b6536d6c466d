#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hqc/dual.hpp"

namespace hqc {

// Orientation sign of the principal action. Fixed to +1 (right actions).
inline constexpr double kEps = 1.0;

template <class T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;
template <class T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <class T>
using Vec3 = Eigen::Matrix<T, 3, 1>;
template <class T>
using Mat3 = Eigen::Matrix<T, 3, 3>;

using VecX = Vec<double>;
using MatX = Mat<double>;
using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;

// Admissible frame (I1, I2, I3) as d x d matrices.
template <class T>
using Frame = std::array<Mat<T>, 3>;

// Christoffel symbols: gamma[i](k, j) = Gamma^k_{ij}, i.e. the matrix of
// the endomorphism Z -> nabla_{d_i} Z - d_i Z.
template <class T>
using Christoffel = std::vector<Mat<T>>;

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct FlowEscapeError : std::runtime_error {
  FlowEscapeError(const std::string& what, double t) : std::runtime_error(what), exit_time(t) {}
  double exit_time;
};
struct CapabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PreconditionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParameterError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ProjectionError : std::runtime_error {
  ProjectionError(const std::string& what, double best) : std::runtime_error(what), best_residual(best) {}
  double best_residual;
};
struct DegeneratePointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedModelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Cyclic successor indices for alpha in {0,1,2}: (alpha, beta, gamma).
inline int cyc1(int a) { return (a + 1) % 3; }
inline int cyc2(int a) { return (a + 2) % 3; }

// Primal part and tangent part of scalars and Eigen objects.
inline double primal(double x) { return x; }
template <class T>
T primal(const Dual<T>& x) {
  return x.v;
}
template <class T>
T tangent(const Dual<T>& x) {
  return x.d;
}
template <class T, int R, int C>
Eigen::Matrix<T, R, C> primal(const Eigen::Matrix<Dual<T>, R, C>& m) {
  return m.unaryExpr([](const Dual<T>& x) { return x.v; });
}
template <class T, int R, int C>
Eigen::Matrix<T, R, C> tangent(const Eigen::Matrix<Dual<T>, R, C>& m) {
  return m.unaryExpr([](const Dual<T>& x) { return x.d; });
}

// Lift a matrix to a higher scalar level (constant tangent).
template <class S, class T, int R, int C>
Eigen::Matrix<S, R, C> lift(const Eigen::Matrix<T, R, C>& m) {
  return m.unaryExpr([](const T& x) { return S(x); });
}

template <class T, int R, int C>
Eigen::Matrix<double, R, C> values(const Eigen::Matrix<T, R, C>& m) {
  return m.unaryExpr([](const T& x) { return value(x); });
}

// Seeds direction `dir` on top of the point `y`.
template <class T>
Vec<Dual<T>> seed(const Vec<T>& y, const Vec<T>& dir) {
  Vec<Dual<T>> out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = Dual<T>(y[i], dir[i]);
  return out;
}
template <class T>
Vec<Dual<T>> seed_axis(const Vec<T>& y, Eigen::Index axis) {
  Vec<Dual<T>> out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = Dual<T>(y[i], i == axis ? T(1.0) : T(0.0));
  return out;
}

template <class T>
Mat3<T> hat(const Vec3<T>& w) {
  Mat3<T> m;
  m << T(0.0), -w[2], w[1], w[2], T(0.0), -w[0], -w[1], w[0], T(0.0);
  return m;
}
template <class T>
Vec3<T> vee(const Mat3<T>& m) {
  return Vec3<T>(m(2, 1), m(0, 2), m(1, 0));
}

}  // namespace hqc
