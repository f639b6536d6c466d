#pragma once

#include <cmath>
#include <type_traits>

#include <Eigen/Core>

namespace hqc {

// Forward-mode dual number with a single tangent direction.
// Nesting (Dual<Dual<double>>) yields mixed higher derivatives.
template <class T>
struct Dual {
  T v{};
  T d{};

  Dual() = default;
  Dual(double x) : v(x), d(0.0) {}  // NOLINT(google-explicit-constructor)
  template <class U = T, std::enable_if_t<!std::is_same_v<U, double>, int> = 0>
  Dual(const T& x) : v(x), d(0.0) {}  // NOLINT(google-explicit-constructor)
  Dual(const T& x, const T& dx) : v(x), d(dx) {}

  Dual& operator+=(const Dual& o) { v += o.v; d += o.d; return *this; }
  Dual& operator-=(const Dual& o) { v -= o.v; d -= o.d; return *this; }
  Dual& operator*=(const Dual& o) { d = d * o.v + v * o.d; v *= o.v; return *this; }
  Dual& operator/=(const Dual& o) { *this = *this / o; return *this; }
  Dual operator-() const { return Dual(-v, -d); }
  Dual operator+() const { return *this; }

  friend Dual operator+(const Dual& a, const Dual& b) { return Dual(a.v + b.v, a.d + b.d); }
  friend Dual operator-(const Dual& a, const Dual& b) { return Dual(a.v - b.v, a.d - b.d); }
  friend Dual operator*(const Dual& a, const Dual& b) { return Dual(a.v * b.v, a.d * b.v + a.v * b.d); }
  friend Dual operator/(const Dual& a, const Dual& b) {
    T q = a.v / b.v;
    return Dual(q, (a.d - q * b.d) / b.v);
  }
  friend Dual operator+(const Dual& a, double b) { return Dual(a.v + b, a.d); }
  friend Dual operator+(double a, const Dual& b) { return Dual(a + b.v, b.d); }
  friend Dual operator-(const Dual& a, double b) { return Dual(a.v - b, a.d); }
  friend Dual operator-(double a, const Dual& b) { return Dual(a - b.v, -b.d); }
  friend Dual operator*(const Dual& a, double b) { return Dual(a.v * b, a.d * b); }
  friend Dual operator*(double a, const Dual& b) { return Dual(a * b.v, a * b.d); }
  friend Dual operator/(const Dual& a, double b) { return Dual(a.v / b, a.d / b); }
  friend Dual operator/(double a, const Dual& b) { return Dual(a) / b; }
};

using D1 = Dual<double>;
using D2 = Dual<D1>;
using D3 = Dual<D2>;

template <class T>
struct is_dual : std::false_type {};
template <class T>
struct is_dual<Dual<T>> : std::true_type {};

// Primal value of a (possibly nested) scalar.
inline double value(double x) { return x; }
inline double abs(double x) { return std::abs(x); }
template <class T>
double value(const Dual<T>& x) {
  return value(x.v);
}

template <class T>
bool operator<(const Dual<T>& a, const Dual<T>& b) { return value(a) < value(b); }
template <class T>
bool operator>(const Dual<T>& a, const Dual<T>& b) { return value(a) > value(b); }
template <class T>
bool operator<=(const Dual<T>& a, const Dual<T>& b) { return value(a) <= value(b); }
template <class T>
bool operator>=(const Dual<T>& a, const Dual<T>& b) { return value(a) >= value(b); }
template <class T>
bool operator<(const Dual<T>& a, double b) { return value(a) < b; }
template <class T>
bool operator>(const Dual<T>& a, double b) { return value(a) > b; }
template <class T>
bool operator==(const Dual<T>& a, const Dual<T>& b) { return a.v == b.v && a.d == b.d; }
template <class T>
bool operator!=(const Dual<T>& a, const Dual<T>& b) { return !(a == b); }

template <class T>
Dual<T> sin(const Dual<T>& x) {
  using std::cos;
  using std::sin;
  return Dual<T>(sin(x.v), cos(x.v) * x.d);
}
template <class T>
Dual<T> cos(const Dual<T>& x) {
  using std::cos;
  using std::sin;
  return Dual<T>(cos(x.v), -sin(x.v) * x.d);
}
template <class T>
Dual<T> exp(const Dual<T>& x) {
  using std::exp;
  T e = exp(x.v);
  return Dual<T>(e, e * x.d);
}
template <class T>
Dual<T> log(const Dual<T>& x) {
  using std::log;
  return Dual<T>(log(x.v), x.d / x.v);
}
template <class T>
Dual<T> sqrt(const Dual<T>& x) {
  using std::sqrt;
  T s = sqrt(x.v);
  return Dual<T>(s, x.d / (2.0 * s));
}
template <class T>
Dual<T> pow(const Dual<T>& x, double p) {
  using std::pow;
  return Dual<T>(pow(x.v, p), p * pow(x.v, p - 1.0) * x.d);
}
template <class T>
Dual<T> abs(const Dual<T>& x) {
  return value(x) < 0.0 ? -x : x;
}
template <class T>
Dual<T> atan2(const Dual<T>& y, const Dual<T>& x) {
  using std::atan2;
  T r2 = x.v * x.v + y.v * y.v;
  return Dual<T>(atan2(y.v, x.v), (x.v * y.d - y.v * x.d) / r2);
}

template <class T>
Dual<T> acos(const Dual<T>& x) {
  using std::acos;
  using std::sqrt;
  return Dual<T>(acos(x.v), -x.d / sqrt(1.0 - x.v * x.v));
}

// Seeds a tangent: returns Dual<T>(x, dx).
template <class T>
Dual<T> make_dual(const T& x, const T& dx) {
  return Dual<T>(x, dx);
}

}  // namespace hqc

namespace Eigen {

template <class T>
struct NumTraits<hqc::Dual<T>> : NumTraits<double> {
  using Real = hqc::Dual<T>;
  using NonInteger = hqc::Dual<T>;
  using Nested = hqc::Dual<T>;
  using Literal = double;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 1,
    AddCost = 3,
    MulCost = 3
  };
};

template <class T, typename BinaryOp>
struct ScalarBinaryOpTraits<hqc::Dual<T>, double, BinaryOp> {
  using ReturnType = hqc::Dual<T>;
};
template <class T, typename BinaryOp>
struct ScalarBinaryOpTraits<double, hqc::Dual<T>, BinaryOp> {
  using ReturnType = hqc::Dual<T>;
};

}  // namespace Eigen
