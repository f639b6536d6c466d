#pragma once

// Chart-based tensor calculus: derivatives, brackets, exterior derivatives,
// flows with variational equations and Lie derivatives.

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "hqc/types.hpp"

namespace hqc {

// Open box in R^d.
struct ChartBox {
  std::string id;
  VecX lo;
  VecX hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const VecX& x) const;
  // Box shrunk by `margin` (fraction of the width) on every side.
  ChartBox shrunk(double margin) const;
};

struct ChartPoint {
  VecX coords;
  std::string chart_id;

  ChartPoint(const ChartBox& box, VecX x);
};

enum class DiffMode { Forward, CentralDifference };

struct DerivativeEngine {
  DiffMode mode = DiffMode::Forward;
  double fd_step = 1e-5;
  double ode_tolerance = 1e-8;
};

// ---------------------------------------------------------------------------
// Forward-mode derivative helpers. `f` is a generic callable mapping Vec<S> to
// Vec<S> for any scalar S in {double, D1, D2, D3, ...}.

template <class F, class T>
Mat<T> jacobian(F&& f, const Vec<T>& y) {
  const Eigen::Index m = y.size();
  Mat<T> out;
  for (Eigen::Index j = 0; j < m; ++j) {
    Vec<Dual<T>> yd = seed_axis(y, j);
    Vec<Dual<T>> fy = f(yd);
    if (j == 0) out.resize(fy.size(), m);
    for (Eigen::Index i = 0; i < fy.size(); ++i) out(i, j) = fy[i].d;
  }
  return out;
}

// Directional derivative of a vector-valued map.
template <class F, class T>
Vec<T> directional(F&& f, const Vec<T>& y, const Vec<T>& dir) {
  Vec<Dual<T>> fy = f(seed(y, dir));
  Vec<T> out(fy.size());
  for (Eigen::Index i = 0; i < fy.size(); ++i) out[i] = fy[i].d;
  return out;
}

// Second derivatives: result[k](i, j) = d_i d_j f^k.
template <class F, class T>
std::vector<Mat<T>> second_derivatives(F&& f, const Vec<T>& y) {
  const Eigen::Index m = y.size();
  std::vector<Mat<T>> out;
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      Vec<Dual<Dual<T>>> yd(m);
      for (Eigen::Index a = 0; a < m; ++a) {
        Dual<T> inner(y[a], a == j ? T(1.0) : T(0.0));
        Dual<T> outer_d(a == i ? T(1.0) : T(0.0), T(0.0));
        yd[a] = Dual<Dual<T>>(inner, outer_d);
      }
      Vec<Dual<Dual<T>>> fy = f(yd);
      if (out.empty()) out.assign(fy.size(), Mat<T>::Zero(m, m));
      for (Eigen::Index k = 0; k < fy.size(); ++k) {
        out[k](i, j) = fy[k].d.d;
        out[k](j, i) = fy[k].d.d;
      }
    }
  }
  return out;
}

// Central finite-difference Jacobian (double only).
template <class F>
MatX jacobian_fd(F&& f, const VecX& y, double h) {
  MatX out;
  for (Eigen::Index j = 0; j < y.size(); ++j) {
    VecX yp = y, ym = y;
    yp[j] += h;
    ym[j] -= h;
    VecX d = (f(yp) - f(ym)) / (2.0 * h);
    if (j == 0) out.resize(d.size(), y.size());
    out.col(j) = d;
  }
  return out;
}

// d field / d coords[direction] at a chart point.
template <class F>
VecX differentiate(F&& field, const ChartPoint& p, int direction, const DerivativeEngine& eng = {}) {
  const VecX& y = p.coords;
  if (direction < 0 || direction >= y.size()) throw ShapeError("differentiate: direction out of range");
  if (eng.mode == DiffMode::Forward) return directional(field, y, VecX(VecX::Unit(y.size(), direction)));
  VecX yp = y, ym = y;
  yp[direction] += eng.fd_step;
  ym[direction] -= eng.fd_step;
  VecX fp = field(yp);
  VecX fm = field(ym);
  return (fp - fm) / (2.0 * eng.fd_step);
}

// [X, Y] = DY.X - DX.Y in coordinates.
template <class FX, class FY, class T>
Vec<T> lie_bracket(FX&& X, FY&& Y, const Vec<T>& y) {
  Vec<T> xv = X(y);
  Vec<T> yv = Y(y);
  if (xv.size() != y.size() || yv.size() != y.size()) throw ShapeError("lie_bracket: dimension mismatch");
  return directional(Y, y, xv) - directional(X, y, yv);
}

// Exterior derivative of a k-form. `form(y, vecs)` evaluates the form at y on
// k constant vectors; returns d(form)(v_0, ..., v_k) by the coordinate formula
// d w(v_0..v_k) = sum_i (-1)^i D_{v_i}[w(v_0..^v_i..v_k)].
template <class Form, class T>
T exterior_derivative(Form&& form, const Vec<T>& y, const std::vector<Vec<T>>& vectors, int k) {
  if (static_cast<int>(vectors.size()) != k + 1) throw ShapeError("exterior_derivative: need k+1 vectors");
  T out(0.0);
  for (int i = 0; i <= k; ++i) {
    std::vector<Vec<Dual<T>>> rest;
    for (int j = 0; j <= k; ++j)
      if (j != i) rest.push_back(lift<Dual<T>>(vectors[j]));
    Dual<T> val = form(seed(y, vectors[i]), rest);
    T term = val.d;
    out += (i % 2 == 0) ? term : T(-term);
  }
  return out;
}

// 1-form given as a covector field y -> w(y).
template <class W>
auto covector_form(W&& w) {
  return [w](const auto& y, const auto& vecs) {
    auto c = w(y);
    return c.dot(vecs[0]);
  };
}

// ---------------------------------------------------------------------------
// Flows.

struct FlowResult {
  VecX x;
  MatX jacobian;
  double richardson_error = 0.0;
};

using ClosedFormFlow = std::function<FlowResult(const VecX&, double)>;

namespace detail {
template <class F>
void rk4_step(F&& X, VecX& x, MatX& J, double h) {
  auto rhs = [&](const VecX& xs, const MatX& Js, VecX& dx, MatX& dJ) {
    dx = X(xs);
    dJ = jacobian(X, xs) * Js;
  };
  VecX k1, k2, k3, k4;
  MatX L1, L2, L3, L4;
  rhs(x, J, k1, L1);
  rhs(x + 0.5 * h * k1, J + 0.5 * h * L1, k2, L2);
  rhs(x + 0.5 * h * k2, J + 0.5 * h * L2, k3, L3);
  rhs(x + h * k3, J + h * L3, k4, L4);
  x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  J += h / 6.0 * (L1 + 2.0 * L2 + 2.0 * L3 + L4);
}

template <class F>
FlowResult rk4_integrate(F&& X, const ChartBox& box, const VecX& x0, double t, double step) {
  const int nsteps = std::max(1, static_cast<int>(std::ceil(std::abs(t) / step - 1e-12)));
  const double h = t / nsteps;
  VecX x = x0;
  MatX J = MatX::Identity(x0.size(), x0.size());
  for (int s = 0; s < nsteps; ++s) {
    rk4_step(X, x, J, h);
    if (!box.contains(x)) throw FlowEscapeError("flow left the chart", (s + 1) * h);
  }
  return {x, J, 0.0};
}
}  // namespace detail

// Integrates x' = X(x) with the variational equation J' = DX(x) J, J(0) = id.
// Fixed-step RK4 (step 1e-3) with a half-step Richardson error estimate; a
// closed-form flow, when supplied, is used instead.
template <class F>
FlowResult flow(F&& X, const ChartBox& box, const ChartPoint& p, double t,
                const std::optional<ClosedFormFlow>& exact = std::nullopt, double step = 1e-3) {
  if (exact) {
    FlowResult r = (*exact)(p.coords, t);
    if (!box.contains(r.x)) throw FlowEscapeError("flow left the chart", t);
    return r;
  }
  FlowResult coarse = detail::rk4_integrate(X, box, p.coords, t, step);
  FlowResult fine = detail::rk4_integrate(X, box, p.coords, t, 0.5 * step);
  fine.richardson_error = (fine.x - coarse.x).norm() / 15.0;
  return fine;
}

// ---------------------------------------------------------------------------
// Lie derivatives.

// Tensor field of valence (r, s) whose evaluator returns the components
// flattened row-major over (upper indices..., lower indices...).
template <class F>
struct TensorField {
  int upper;
  int lower;
  int dim;
  F eval;
};

template <class F>
TensorField<F> make_tensor_field(int upper, int lower, int dim, F f) {
  return TensorField<F>{upper, lower, dim, std::move(f)};
}

// L_X T for a tensor field of valence (r, s) with r + s <= 4.
template <class FX, class FT, class T>
Vec<T> lie_derivative_tensor(FX&& X, const TensorField<FT>& tf, const Vec<T>& y) {
  const int r = tf.upper, s = tf.lower, d = tf.dim;
  if (r < 0 || s < 0 || r + s > 4) throw CapabilityError("lie_derivative_tensor: unsupported valence");
  Vec<T> xv = X(y);
  Mat<T> DX = jacobian(X, y);  // DX(a, l) = d_l X^a
  Vec<T> t = tf.eval(y);
  const int rank = r + s;
  int total = 1;
  for (int m = 0; m < rank; ++m) total *= d;
  if (t.size() != total) throw ShapeError("lie_derivative_tensor: evaluator output has wrong size");
  Vec<T> out = directional(tf.eval, y, xv);
  std::vector<int> stride(rank);
  for (int m = 0; m < rank; ++m) {
    int st = 1;
    for (int q = m + 1; q < rank; ++q) st *= d;
    stride[m] = st;
  }
  for (int idx = 0; idx < total; ++idx) {
    for (int m = 0; m < rank; ++m) {
      const int im = (idx / stride[m]) % d;
      const int base = idx - im * stride[m];
      T acc(0.0);
      for (int l = 0; l < d; ++l) {
        const T& comp = t[base + l * stride[m]];
        if (m < r)
          acc -= comp * DX(im, l);  // -T^{..l..} d_l X^{a}
        else
          acc += comp * DX(l, im);  // +T_{..l..} d_b X^l
      }
      out[idx] += acc;
    }
  }
  return out;
}

// Flattens an endomorphism row-major: out[a*d + b] = E(a, b).
template <class T>
Vec<T> flatten_rowmajor(const Mat<T>& E) {
  Vec<T> out(E.rows() * E.cols());
  for (Eigen::Index a = 0; a < E.rows(); ++a)
    for (Eigen::Index b = 0; b < E.cols(); ++b) out[a * E.cols() + b] = E(a, b);
  return out;
}
template <class T>
Mat<T> unflatten_rowmajor(const Vec<T>& v, Eigen::Index rows, Eigen::Index cols) {
  Mat<T> E(rows, cols);
  for (Eigen::Index a = 0; a < rows; ++a)
    for (Eigen::Index b = 0; b < cols; ++b) E(a, b) = v[a * cols + b];
  return E;
}

// (L_X nabla)^k_{ij} for a connection with Christoffel field `gamma(y)`
// (Christoffel<S> layout), using
// d_i d_j X^k + X^l d_l G^k_ij - G^l_ij d_l X^k + G^k_lj d_i X^l + G^k_il d_j X^l.
// Returns result[i](k, j).
template <class FX, class FG, class T>
Christoffel<T> lie_derivative_connection(FX&& X, FG&& gamma, const Vec<T>& y) {
  const Eigen::Index d = y.size();
  Vec<T> xv = X(y);
  Mat<T> DX = jacobian(X, y);
  std::vector<Mat<T>> D2X = second_derivatives(X, y);
  Christoffel<T> G = gamma(y);
  auto gamma_flat = [&gamma, d](const auto& z) {
    auto Gz = gamma(z);
    using S = typename std::decay_t<decltype(Gz[0])>::Scalar;
    Vec<S> out(d * d * d);
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index k = 0; k < d; ++k)
        for (Eigen::Index j = 0; j < d; ++j) out[(i * d + k) * d + j] = Gz[i](k, j);
    return out;
  };
  Vec<T> dG = directional(gamma_flat, y, xv);
  Christoffel<T> out(d, Mat<T>::Zero(d, d));
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index k = 0; k < d; ++k)
      for (Eigen::Index j = 0; j < d; ++j) {
        T acc = D2X[k](i, j) + dG[(i * d + k) * d + j];
        for (Eigen::Index l = 0; l < d; ++l) {
          acc -= G[i](l, j) * DX(k, l);
          acc += G[l](k, j) * DX(l, i);
          acc += G[i](k, l) * DX(l, j);
        }
        out[i](k, j) = acc;
      }
  return out;
}

}  // namespace hqc
