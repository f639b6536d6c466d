#pragma once

// Dense Gaussian elimination that works for any scalar (including nested
// dual numbers), pivoting on primal values.

#include <cmath>

#include "hqc/types.hpp"

namespace hqc {

template <class T>
struct LuResult {
  Mat<T> lu;
  std::vector<Eigen::Index> perm;
  int sign = 1;
};

template <class T>
LuResult<T> lu_factor(const Mat<T>& A) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw ShapeError("lu_factor: matrix must be square");
  LuResult<T> r{A, std::vector<Eigen::Index>(n), 1};
  for (Eigen::Index i = 0; i < n; ++i) r.perm[i] = i;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    double best = std::abs(value(r.lu(k, k)));
    for (Eigen::Index i = k + 1; i < n; ++i) {
      double v = std::abs(value(r.lu(i, k)));
      if (v > best) best = v, piv = i;
    }
    if (best == 0.0) throw DomainError("lu_factor: singular matrix");
    if (piv != k) {
      r.lu.row(k).swap(r.lu.row(piv));
      std::swap(r.perm[k], r.perm[piv]);
      r.sign = -r.sign;
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      T f = r.lu(i, k) / r.lu(k, k);
      r.lu(i, k) = f;
      for (Eigen::Index j = k + 1; j < n; ++j) r.lu(i, j) -= f * r.lu(k, j);
    }
  }
  return r;
}

template <class T>
Mat<T> lu_solve(const LuResult<T>& f, const Mat<T>& B) {
  const Eigen::Index n = f.lu.rows();
  Mat<T> X(n, B.cols());
  for (Eigen::Index i = 0; i < n; ++i) X.row(i) = B.row(f.perm[i]);
  for (Eigen::Index c = 0; c < B.cols(); ++c) {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < i; ++j) X(i, c) -= f.lu(i, j) * X(j, c);
    for (Eigen::Index i = n - 1; i >= 0; --i) {
      for (Eigen::Index j = i + 1; j < n; ++j) X(i, c) -= f.lu(i, j) * X(j, c);
      X(i, c) = X(i, c) / f.lu(i, i);
    }
  }
  return X;
}

template <class T>
Mat<T> solve(const Mat<T>& A, const Mat<T>& B) {
  return lu_solve(lu_factor(A), B);
}

template <class T>
Mat<T> inverse(const Mat<T>& A) {
  return solve(A, Mat<T>(Mat<T>::Identity(A.rows(), A.rows())));
}

// log |det A|
template <class T>
T log_abs_det(const Mat<T>& A) {
  using std::log;
  LuResult<T> f = lu_factor(A);
  T acc(0.0);
  for (Eigen::Index i = 0; i < A.rows(); ++i) acc += log(abs(f.lu(i, i)));
  return acc;
}

}  // namespace hqc
