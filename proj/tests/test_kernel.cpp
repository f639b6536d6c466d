#include <cmath>

#include "doctest.h"
#include "hqc/kernel.hpp"
#include "hqc/models.hpp"
#include "hqc/quaternion.hpp"

using namespace hqc;

namespace {
ChartBox box2() { return ChartBox{"R2", VecX::Constant(2, -5.0), VecX::Constant(2, 5.0)}; }
VecX v2(double a, double b) {
  VecX v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("differentiate: polynomial, constant and AD vs FD") {
  VecX p(3);
  p << 3.0, 1.0, 2.0;
  ChartBox box{"R3", VecX::Constant(3, -10.0), VecX::Constant(3, 10.0)};
  ChartPoint cp(box, p);
  auto sq = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    Vec<S> out(1);
    out[0] = x[0] * x[0];
    return out;
  };
  CHECK(differentiate(sq, cp, 0)[0] == doctest::Approx(6.0).epsilon(1e-15));
  auto cst = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    return Vec<S>(Vec<S>::Constant(2, S(4.0)));
  };
  for (int i = 0; i < 3; ++i) CHECK(differentiate(cst, cp, i).norm() == 0.0);

  auto f = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    using std::sin;
    Vec<S> out(1);
    out[0] = sin(x[0] * x[1]);
    return out;
  };
  ChartPoint q(box2(), v2(0.5, 0.7));
  DerivativeEngine fd{DiffMode::CentralDifference, 1e-5, 1e-8};
  for (int i = 0; i < 2; ++i) {
    double ad = differentiate(f, q, i)[0];
    double num = differentiate(f, q, i, fd)[0];
    CHECK(std::abs(ad - num) < 1e-9);
  }
  CHECK_THROWS_AS(ChartPoint(box2(), v2(6.0, 0.0)), DomainError);
}

TEST_CASE("lie_bracket: coordinate fields and hand oracle") {
  auto d1 = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    Vec<S> v = Vec<S>::Zero(2);
    v[0] = S(1.0);
    return v;
  };
  auto d2 = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    Vec<S> v = Vec<S>::Zero(2);
    v[1] = S(1.0);
    return v;
  };
  CHECK(lie_bracket(d1, d2, v2(0.3, -0.2)).norm() == 0.0);
  auto X = [](const auto& x) {  // x2 d1
    using S = typename std::decay_t<decltype(x)>::Scalar;
    Vec<S> v = Vec<S>::Zero(2);
    v[0] = x[1];
    return v;
  };
  auto Y = [](const auto& x) {  // x1 d2
    using S = typename std::decay_t<decltype(x)>::Scalar;
    Vec<S> v = Vec<S>::Zero(2);
    v[1] = x[0];
    return v;
  };
  VecX b = lie_bracket(X, Y, v2(1.0, 1.0));
  // Hand oracle: [x2 d1, x1 d2] = x2 d2 - x1 d1.
  CHECK(b[0] == doctest::Approx(-1.0));
  CHECK(b[1] == doctest::Approx(1.0));
  // Finite-difference cross-check of the same bracket.
  MatX DX = jacobian_fd([&](const VecX& z) { return VecX(X(z)); }, v2(1.0, 1.0), 1e-5);
  MatX DY = jacobian_fd([&](const VecX& z) { return VecX(Y(z)); }, v2(1.0, 1.0), 1e-5);
  VecX bfd = DY * X(v2(1.0, 1.0)) - DX * Y(v2(1.0, 1.0));
  CHECK((b - bfd).norm() < 1e-9);
}

TEST_CASE("lie_bracket: Jacobi identity on polynomial fields") {
  auto X = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    Vec<S> v(3);
    v << x[1] * x[2], x[0] * x[0], S(1.0) + x[2];
    return v;
  };
  auto Y = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    using std::sin;
    Vec<S> v(3);
    v << sin(x[0]), x[2], x[0] * x[1];
    return v;
  };
  auto Z = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    Vec<S> v(3);
    v << x[2] * x[2], x[0] - x[1], x[1];
    return v;
  };
  auto br = [](auto A, auto B) { return [A, B](const auto& x) { return lie_bracket(A, B, x); }; };
  VecX p(3);
  p << 0.3, -0.4, 0.8;
  VecX jac = lie_bracket(X, br(Y, Z), p) + lie_bracket(Y, br(Z, X), p) + lie_bracket(Z, br(X, Y), p);
  CHECK(jac.norm() < 1e-12);
}

TEST_CASE("exterior_derivative: textbook values, d^2 = 0, invariant formula") {
  // w = x1 dx2
  auto w = [](const auto& y, const auto& vecs) { return y[0] * vecs[0][1]; };
  std::vector<VecX> e = {v2(1, 0), v2(0, 1)};
  CHECK(exterior_derivative(w, v2(0.2, 0.3), e, 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(exterior_derivative(w, v2(0.2, 0.3), std::vector<VecX>{v2(1, 0)}, 1), ShapeError);

  // df for f = sin(x1) x2^2
  auto df = covector_form([](const auto& y) {
    using S = typename std::decay_t<decltype(y)>::Scalar;
    using std::cos;
    using std::sin;
    Vec<S> c(2);
    c << cos(y[0]) * y[1] * y[1], 2.0 * sin(y[0]) * y[1];
    return c;
  });
  CHECK(std::abs(exterior_derivative(df, v2(0.4, -0.7), {v2(0.3, 1.1), v2(-0.5, 0.2)}, 1)) < 1e-8);

  // dw(X, Y) = X w(Y) - Y w(X) - w([X, Y]) for the 1-form x1 x2 dx1 + x1^2 dx2.
  auto c = [](const auto& y) {
    using S = typename std::decay_t<decltype(y)>::Scalar;
    Vec<S> v(2);
    v << y[0] * y[1], y[0] * y[0];
    return v;
  };
  auto X = [](const auto& y) {
    using S = typename std::decay_t<decltype(y)>::Scalar;
    Vec<S> v(2);
    v << y[1], S(1.0) + y[0] * y[0];
    return v;
  };
  auto Y = [](const auto& y) {
    using S = typename std::decay_t<decltype(y)>::Scalar;
    using std::sin;
    Vec<S> v(2);
    v << sin(y[0]), y[1] * y[0];
    return v;
  };
  VecX p = v2(0.6, -0.3);
  auto wy = [&](const auto& z) {
    using S = typename std::decay_t<decltype(z)>::Scalar;
    Vec<S> o(1);
    o[0] = c(z).dot(Y(z));
    return o;
  };
  auto wx = [&](const auto& z) {
    using S = typename std::decay_t<decltype(z)>::Scalar;
    Vec<S> o(1);
    o[0] = c(z).dot(X(z));
    return o;
  };
  double rhs = directional(wy, p, VecX(X(p)))[0] - directional(wx, p, VecX(Y(p)))[0] - c(p).dot(lie_bracket(X, Y, p));
  double lhs = exterior_derivative(covector_form(c), p, {VecX(X(p)), VecX(Y(p))}, 1);
  CHECK(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("flow: zero field, rotation oracle, group property, escape") {
  auto zero = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    return Vec<S>(Vec<S>::Zero(x.size()));
  };
  FlowResult z = flow(zero, box2(), ChartPoint(box2(), v2(1.0, 2.0)), 0.7);
  CHECK((z.x - v2(1.0, 2.0)).norm() == 0.0);
  CHECK((z.jacobian - MatX::Identity(2, 2)).norm() == 0.0);

  auto rot = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    Vec<S> v(2);
    v << -x[1], x[0];
    return v;
  };
  FlowResult r = flow(rot, box2(), ChartPoint(box2(), v2(1.0, 0.0)), M_PI / 2);
  CHECK((r.x - v2(0.0, 1.0)).norm() < 1e-8);
  MatX Rq(2, 2);
  Rq << 0, -1, 1, 0;
  CHECK((r.jacobian - Rq).norm() < 1e-8);

  // phi_{s+t} = phi_s o phi_t
  auto nonlin = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    using std::sin;
    Vec<S> v(2);
    v << sin(x[1]), x[0] * x[1];
    return v;
  };
  ChartPoint p0(box2(), v2(0.4, 0.5));
  FlowResult a = flow(nonlin, box2(), p0, 0.1);
  FlowResult b = flow(nonlin, box2(), ChartPoint(box2(), a.x), 0.07);
  FlowResult ab = flow(nonlin, box2(), p0, 0.17);
  CHECK((b.x - ab.x).norm() < 1e-7);
  CHECK((b.jacobian * a.jacobian - ab.jacobian).norm() < 1e-7);

  auto out = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    return Vec<S>(Vec<S>::Constant(x.size(), S(1.0)));
  };
  try {
    flow(out, box2(), ChartPoint(box2(), v2(4.0, 0.0)), 3.0);
    FAIL("expected escape");
  } catch (const FlowEscapeError& e) {
    CHECK(e.exit_time == doctest::Approx(1.0).epsilon(2e-3));
  }
}

TEST_CASE("flow: Hopf field z -> z e^{it} with right-multiplication Jacobian") {
  auto m = hopf(1, 2.0, Quat<double>(std::cos(0.3), std::sin(0.3), 0.0, 0.0));
  VecX z(4);
  z << 0.5, -0.3, 0.8, 0.2;
  const double t = 0.4;
  auto X = [&m](const auto& x) { return m->field(x); };
  Quat<double> e(std::cos(t), std::sin(t), 0.0, 0.0);
  VecX expect = qmul<double>(z.head<4>(), e);
  FlowResult numeric = flow(X, m->chart(), ChartPoint(m->chart(), z), t);
  FlowResult exact = flow(X, m->chart(), ChartPoint(m->chart(), z), t, m->exact_flow());
  CHECK((numeric.x - expect).norm() < 1e-10);
  CHECK((exact.x - expect).norm() < 1e-12);
  CHECK((exact.jacobian - MatX(right_mult(e))).norm() < 1e-12);
  CHECK((numeric.jacobian - MatX(right_mult(e))).norm() < 1e-10);
}

TEST_CASE("lie_derivative_tensor and connection") {
  // Constant endomorphism under a translation field.
  auto trans = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    Vec<S> v(2);
    v << S(1.0), S(-2.0);
    return v;
  };
  auto constT = make_tensor_field(1, 1, 2, [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    Vec<S> v(4);
    v << S(1.0), S(2.0), S(3.0), S(4.0);
    return v;
  });
  CHECK(lie_derivative_tensor(trans, constT, v2(0.1, 0.2)).norm() == 0.0);

  // Leibniz against contraction: L_X(A Y) = (L_X A) Y + A [X, Y].
  auto X = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    Vec<S> v(2);
    v << x[0] * x[1], x[1] * x[1] - x[0];
    return v;
  };
  auto Afield = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    Mat<S> A(2, 2);
    A << x[0], x[1] * x[1], S(1.0), x[0] * x[1];
    return A;
  };
  auto Y = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    Vec<S> v(2);
    v << x[1], S(2.0) * x[0];
    return v;
  };
  auto A_t = make_tensor_field(1, 1, 2, [&](const auto& x) { return flatten_rowmajor(Afield(x)); });
  auto AY = [&](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    return Vec<S>(Afield(x) * Y(x));
  };
  VecX p = v2(0.3, 0.7);
  MatX LA = unflatten_rowmajor(lie_derivative_tensor(X, A_t, p), 2, 2);
  VecX lhs = lie_bracket(X, AY, p);
  VecX rhs = LA * Y(p) + Afield(p) * lie_bracket(X, Y, p);
  CHECK((lhs - rhs).norm() < 1e-12);

  auto bad = make_tensor_field(3, 2, 2, [](const auto& x) { return x; });
  CHECK_THROWS_AS(lie_derivative_tensor(X, bad, p), CapabilityError);

  // Rotation field on the flat model preserves the flat connection.
  auto m = flat_hn(1);
  auto rotX = [&m](const auto& x) { return m->field(x); };
  auto gamma = [&m](const auto& x) { return m->christoffel(x); };
  VecX z(4);
  z << 0.2, 0.5, -0.4, 0.9;
  auto L = lie_derivative_connection(rotX, gamma, z);
  double mx = 0.0;
  for (auto& Li : L) mx = std::max(mx, Li.cwiseAbs().maxCoeff());
  CHECK(mx < 1e-7);
}

TEST_CASE("lie_derivative_connection matches finite difference of pulled-back Christoffels") {
  auto m = hpn(1);
  auto Xf = [&m](const auto& x) { return m->field(x); };
  // A non-Killing but smooth field on the chart.
  auto Y = [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::Scalar;
    Vec<S> v(4);
    v << x[1] * x[1], x[0], S(0.3) * x[2] * x[3], S(1.0);
    return v;
  };
  auto gamma = [&m](const auto& x) { return m->christoffel(x); };
  VecX z(4);
  z << 0.2, 0.4, -0.3, 0.1;
  // Killing field: L_X nabla = 0.
  auto LX = lie_derivative_connection(Xf, gamma, z);
  double mx = 0.0;
  for (auto& Li : LX) mx = std::max(mx, Li.cwiseAbs().maxCoeff());
  CHECK(mx < 1e-10);
  // Oracle for a general field: d/dt of the pulled-back connection
  // (phi_t^* Gamma)^k_ij = (J^-1)^k_a [ d_i d_j phi^a + Gamma^a_bc(phi) J^b_i J^c_j ],
  // with phi_t(x) ~ x + t Y(x) to first order, differenced centrally.
  auto pulled = [&](double t) {
    auto phi = [&](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::Scalar;
      return Vec<S>(x + S(t) * Y(x));
    };
    MatX J = jacobian(phi, z);
    auto H = second_derivatives(phi, z);
    Christoffel<double> G = m->christoffel(VecX(phi(z)));
    MatX Jinv = J.inverse();
    Christoffel<double> out(4, MatX::Zero(4, 4));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        VecX v(4);
        for (int a = 0; a < 4; ++a) {
          double s = H[a](i, j);
          for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c) s += G[b](a, c) * J(b, i) * J(c, j);
          v[a] = s;
        }
        out[i].col(j) = Jinv * v;
      }
    return out;
  };
  const double h = 1e-5;
  auto Gp = pulled(h), Gm = pulled(-h);
  auto LY = lie_derivative_connection(Y, gamma, z);
  double err = 0.0;
  for (int i = 0; i < 4; ++i) err = std::max(err, ((Gp[i] - Gm[i]) / (2 * h) - LY[i]).cwiseAbs().maxCoeff());
  CHECK(err < 1e-6);
}
