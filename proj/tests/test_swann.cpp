#include "doctest.h"
#include "hqc/models.hpp"
#include "hqc/swann.hpp"

using namespace hqc;

TEST_CASE("StructureParams and BundlePoint validation") {
  CHECK_THROWS_AS(StructureParams(0.0), ParameterError);
  CHECK_THROWS_AS(StructureParams(1.0, 0.0), ParameterError);
  Mat3d bad = Mat3d::Identity();
  bad(0, 0) = 1.1;
  CHECK_THROWS_AS(BundlePoint(VecX::Ones(4), bad, 0.0), DomainError);
  Mat3d refl = Mat3d::Identity();
  refl(2, 2) = -1.0;
  CHECK_THROWS_AS(BundlePoint(VecX::Ones(4), refl, 0.0), DomainError);
}

TEST_CASE("theta_bar: fundamental fields, horizontal lifts, section pullback, equivariance") {
  auto m = deformed_flat(2);
  Sampler s(21);
  const int d = m->dim();
  for (int k = 0; k < 100; ++k) {
    BundlePoint p = s.bundle_point(*m);
    for (int a = 0; a < 3; ++a) {
      auto [th, th0] = theta_bar(*m, p, fundamental_field(*m, p, 0.0, Vec3d::Unit(a)));
      CHECK((th - Vec3d::Unit(a)).norm() < 1e-14);
      CHECK(std::abs(th0) < 1e-14);
    }
    VecX Y(d);
    for (int i = 0; i < d; ++i) Y[i] = s.uniform(-1, 1);
    auto [th, th0] = theta_bar(*m, p, horizontal_lift_raw(*m, p, Y));
    CHECK(th.norm() < 1e-13);
    CHECK(std::abs(th0) < 1e-13);
  }
  // At g = id a base velocity has theta = (1/2) Theta^U(v) and theta0bar = theta0^U(v).
  BundlePoint p(s.base_point(*m), Mat3d::Identity(), 0.2);
  ConnectionForms<double> cf = local_connection_forms(*m, p.x);
  VecX Y = VecX::LinSpaced(d, -1.0, 0.7);
  VecX raw = VecX::Zero(d + 4);
  raw.head(d) = Y;
  auto [th, th0] = theta_bar(*m, p, raw);
  CHECK((th - 0.5 * cf.Theta * Y).norm() < 1e-14);
  CHECK(std::abs(th0 - cf.theta0.dot(Y)) < 1e-14);

  // Right translation by h maps chart coordinates (x, a, u) -> (x, h^T a, u).
  for (int k = 0; k < 10; ++k) {
    BundlePoint q = s.bundle_point(*m);
    Mat3d h = s.rotation();
    BundlePoint qh(q.x, q.g * h, q.u);
    VecX v(d + 4);
    for (int i = 0; i < d + 4; ++i) v[i] = s.uniform(-1, 1);
    VecX vh = v;
    vh.segment<3>(d) = h.transpose() * v.segment<3>(d);
    CHECK((theta_bar(*m, qh, vh).first - h.transpose() * theta_bar(*m, q, v).first).norm() < 1e-13);
    // Horizontal lifts commute with the right action.
    VecX Yq = v.head(d);
    VecX lq = horizontal_lift_raw(*m, q, Yq);
    lq.segment<3>(d) = h.transpose() * lq.segment<3>(d);
    CHECK((horizontal_lift_raw(*m, qh, Yq) - lq).norm() < 1e-13);
  }
}

TEST_CASE("horizontal_lift: flat has no vertical part, deformed compensation") {
  auto flat = flat_hn(1);
  BundlePoint p(VecX::LinSpaced(4, 0.2, 0.9), Mat3d::Identity(), 0.0);
  VecX Y = VecX::LinSpaced(4, 1.0, -0.5);
  VecX l = horizontal_lift_raw(*flat, p, Y);
  CHECK(l.tail(4).norm() == 0.0);
  CHECK((l.head(4) - Y).norm() == 0.0);

  auto def = deformed_flat(1);
  const double c = 1.5;
  ConnectionForms<double> cf = local_connection_forms(*def, p.x);
  VecX ld = horizontal_lift_raw(*def, p, Y);
  CHECK((ld.segment<3>(4) + 0.5 * cf.Theta * Y).norm() < 1e-14);
  CHECK(std::abs(ld[7] / c + cf.theta0.dot(Y) / c) < 1e-14);

  // Lift difference between flat and deformed connections:
  // X^h1 - X^h2 = -sum xi(I_d Y) Z_d + 4(n+1)/c xi(Y) Z_0^c.
  BundlePoint q(VecX::LinSpaced(4, 0.3, 0.8), Mat3d::Identity(), 0.1);
  VecX xi = def->xi()(q.x);
  Frame<double> I = def->frame(q.x);
  VecX diff = horizontal_lift_raw(*def->base(), q, Y) - horizontal_lift_raw(*def, q, Y);
  TangentHat t = decompose(*def, c, q, diff);
  for (int a = 0; a < 3; ++a) CHECK(std::abs(t.vertical_so3[a] + xi.dot(I[a] * Y)) < 1e-13);
  CHECK(std::abs(t.vertical_scale - 4.0 * 2.0 / c * xi.dot(Y)) < 1e-13);
  CHECK(t.horizontal.norm() < 1e-14);
}

TEST_CASE("fundamental_field: e0, chart convention, bracket relations") {
  auto m = hpn(1);
  BundlePoint p(VecX::LinSpaced(4, 0.1, 0.4), Mat3d::Identity(), 0.3);
  VecX e0 = fundamental_field(*m, p, 1.0, Vec3d::Zero());
  CHECK((e0 - VecX::Unit(8, 7)).norm() == 0.0);
  VecX z1 = fundamental_field(*m, p, 0.0, Vec3d::Unit(0));
  CHECK((z1 - VecX::Unit(8, 4)).norm() == 0.0);

  Sampler s(4);
  BundlePoint q = s.bundle_point(*m);
  const Mat3d g0 = q.g;
  auto Z = [&](int a) {
    return [&m, g0, a](const auto& y) { return make_geom(*m, 1.0, g0, y).fund(a); };
  };
  // Evaluate away from the chart center as well.
  VecX y = q.coords();
  y.segment<3>(4) << 0.2, -0.1, 0.3;
  for (int a = 0; a < 3; ++a) {
    VecX br = lie_bracket(Z(a), Z(cyc1(a)), y);
    CHECK((br - 2.0 * kEps * make_geom(*m, 1.0, g0, y).fund(cyc2(a))).norm() < 1e-12);
  }
}

TEST_CASE("i_hat: action table, relations, horizontal behaviour") {
  auto m = deformed_flat(1);
  Sampler s(9);
  for (double c : {1.0, -8.0, 0.7}) {
    StructureParams prm(c);
    BundlePoint p = s.bundle_point(*m);
    TangentHat Z0{VecX::Zero(4), Vec3d::Zero(), 1.0};
    for (int a = 0; a < 3; ++a) {
      const int b = cyc1(a), g = cyc2(a);
      TangentHat r = i_hat(a + 1, prm, *m, p, Z0);
      CHECK((r.vertical_so3 + Vec3d::Unit(a)).norm() < 1e-13);
      CHECK(std::abs(r.vertical_scale) < 1e-13);
      TangentHat za = i_hat(a + 1, prm, *m, p, TangentHat{VecX::Zero(4), Vec3d::Unit(a), 0.0});
      CHECK(za.vertical_so3.norm() < 1e-13);
      CHECK(std::abs(za.vertical_scale - 1.0) < 1e-13);
      TangentHat zb = i_hat(a + 1, prm, *m, p, TangentHat{VecX::Zero(4), Vec3d::Unit(b), 0.0});
      CHECK((zb.vertical_so3 - Vec3d::Unit(g)).norm() < 1e-13);
      CHECK(zb.horizontal.norm() < 1e-13);
    }
    CHECK(ihat_relation_residual(*m, c, p.g, p.coords()) < 1e-9);
    VecX y = p.coords();
    y.segment<3>(4) << -0.3, 0.2, 0.25;
    CHECK(ihat_relation_residual(*m, c, p.g, y) < 1e-9);
  }
  auto flat = flat_hn(1);
  BundlePoint p(VecX::LinSpaced(4, 0.1, 0.4), Mat3d::Identity(), 0.0);
  VecX Y = VecX::LinSpaced(4, 1.0, 2.0);
  Frame<double> I = flat->frame(p.x);
  for (int a = 0; a < 3; ++a) {
    TangentHat r = i_hat(a + 1, StructureParams(1.0), *flat, p, TangentHat{Y, Vec3d::Zero(), 0.0});
    CHECK((r.horizontal - I[a] * Y).norm() < 1e-14);
    CHECK(r.vertical_so3.norm() + std::abs(r.vertical_scale) < 1e-14);
  }
}

TEST_CASE("connection dependence of I^: invariant at c = -4(n+1), closed-form difference otherwise") {
  for (int n = 1; n <= 2; ++n) {
    auto def = deformed_flat(n);
    const ModelPtr& base = def->base();
    Sampler s(13 + n);
    const int d = 4 * n;
    for (double c : {-4.0 * (n + 1), 1.0}) {
      double max_pred = 0.0, max_diff = 0.0;
      for (int k = 0; k < 100; ++k) {
        BundlePoint p = s.bundle_point(*def);
        VecX y = p.coords();
        VecX v(d + 4);
        for (int i = 0; i < d + 4; ++i) v[i] = s.uniform(-1, 1);
        for (int a = 0; a < 3; ++a) {
          BundleGeom<double> G1(*base, c, p.g, y), G2(*def, c, p.g, y);
          VecX diff = G1.ihat(a, v) - G2.ihat(a, v);
          max_diff = std::max(max_diff, diff.cwiseAbs().maxCoeff());
          // Closed form on the horizontal lift (for nabla^1) of Y.
          VecX Y = v.head(d);
          VecX h1 = G1.hlift(Y);
          VecX dh = G1.ihat(a, h1) - G2.ihat(a, h1);
          VecX xi = def->xi()(p.x);
          double k1 = kEps * (1.0 + 4.0 * (n + 1) / c);
          VecX pred = k1 * (xi.dot(Y) * G1.fund(a) + xi.dot(G1.Ig[a] * Y) * G1.z0c());
          max_pred = std::max(max_pred, (dh - pred).cwiseAbs().maxCoeff());
        }
      }
      if (c < 0) CHECK(max_diff < 1e-8);
      CHECK(max_pred < 1e-7);
    }
  }
}

TEST_CASE("nijenhuis: fiber pairs vanish, vhh and hhh, tensoriality") {
  auto m = deformed_flat(1);
  Sampler s(17);
  const int d = 4, D = 8;
  for (double c : {1.0, -1.0}) {
    BundlePoint p = s.bundle_point(*m);
    CanonicalJet J = canonical_jet(*m, c, p.g, p.coords());
    BundleGeom<double> G(*m, c, p.g, p.coords());
    RicciSplit rs = ricci_split(*m, p.x);
    for (int a = 0; a < 3; ++a) {
      for (int k = d; k < D; ++k)
        for (int l = d; l < D; ++l) CHECK(nijenhuis_canonical(J, a, k, l).norm() < 1e-10);
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          VecX N = nijenhuis_canonical(J, a, k, l);
          CHECK(N.head(d).norm() < 1e-10);
          VecX X = VecX::Unit(d, k), Y = VecX::Unit(d, l);
          const MatX& Ia = G.Ig[a];
          auto ric_pair = [&](const VecX& P, const VecX& Q) {
            return P.dot(rs.antisymmetric * Q) - (Ia * P).dot(rs.antisymmetric * (Ia * Q));
          };
          double coef = (4.0 * kEps * (1 + 1) + kEps * c) / (2.0 * (1 + 1));
          CHECK(std::abs(G.theta0bar(N) - coef * ric_pair(X, Y)) < 1e-9);
          // N anticommutes with I^_a, which swaps Z_0^c and Z_a, so the Z_a part
          // is fixed by the Z_0^c part of N(X, I Y).
          Vec3d th = G.theta(N);
          CHECK(std::abs(th[cyc1(a)]) + std::abs(th[cyc2(a)]) < 1e-10);
          CHECK(std::abs(th[a] + coef / c * ric_pair(X, Ia * Y)) < 1e-9);
        }
    }
  }
  // Tensoriality: N(fU, V) = f N(U, V) for a nonconstant function f.
  BundlePoint p = s.bundle_point(*m);
  const Mat3d g0 = p.g;
  StructureParams prm(1.0);
  auto U = [&](const auto& y) { return make_geom(*m, 1.0, g0, y).hlift(Vec<typename std::decay_t<decltype(y)>::Scalar>::Unit(4, 1)); };
  auto V = [&](const auto& y) { return make_geom(*m, 1.0, g0, y).fund(2); };
  auto fU = [&](const auto& y) {
    using S = typename std::decay_t<decltype(y)>::Scalar;
    using std::sin;
    S f = 1.0 + sin(y[0]) * y[6] + y[7] * y[7];
    return Vec<S>(f * U(y));
  };
  VecX y = p.coords();
  double f0 = 1.0 + std::sin(y[0]) * y[6] + y[7] * y[7];
  for (int a = 0; a < 3; ++a) {
    VecX N1 = nijenhuis_hat(a, prm, *m, g0, fU, V, y);
    VecX N0 = nijenhuis_hat(a, prm, *m, g0, U, V, y);
    CHECK((N1 - f0 * N0).norm() < 1e-10);
    CHECK((nijenhuis_hat(a, prm, *m, g0, V, U, y) + N0).norm() < 1e-12);
  }
}

TEST_CASE("classify_integrability: predicates on small grids") {
  Sampler s(23);
  auto flat = flat_hn(1);
  std::vector<BundlePoint> fp = {s.bundle_point(*flat), s.bundle_point(*flat)};
  for (double c : {-8.0, 1.0, -1.0}) {
    IntegrabilityVerdict v = classify_integrability(*flat, c, fp);
    CHECK(v.integrable);
    CHECK(v.agrees());
  }
  auto def = deformed_flat(2);
  std::vector<BundlePoint> dp = {s.bundle_point(*def)};
  IntegrabilityVerdict ok = classify_integrability(*def, -12.0, dp);
  CHECK(ok.integrable);
  CHECK(ok.agrees());
  IntegrabilityVerdict bad = classify_integrability(*def, 1.0, dp);
  CHECK_FALSE(bad.integrable);
  CHECK(bad.max_residual > 1e-3);
  CHECK(bad.agrees());
}

TEST_CASE("lie_relations_check: flat, Hopf, HP^1") {
  Sampler s(31);
  auto flat = flat_hn(1);
  std::vector<BundlePoint> fp = {s.bundle_point(*flat)};
  CHECK(lie_relations_check(StructureParams(1.0), *flat, fp).max() < 1e-9);
  auto hop = hopf(1, 2.0, Quat<double>(0.6, 0.0, 0.8, 0.0));
  std::vector<BundlePoint> hp;
  for (int k = 0; k < 20; ++k) hp.push_back(s.bundle_point(*hop));
  CHECK(lie_relations_check(StructureParams(-8.0), *hop, hp).max() < 1e-6);
  auto h = hpn(1);
  std::vector<BundlePoint> pp = {s.bundle_point(*h), s.bundle_point(*h)};
  CHECK(lie_relations_check(StructureParams(1.0), *h, pp).max() < 1e-6);
  auto def = deformed_flat(1);
  std::vector<BundlePoint> dp = {s.bundle_point(*def)};
  CHECK(lie_relations_check(StructureParams(1.0), *def, dp).max() < 1e-6);
}
