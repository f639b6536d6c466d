#include "hqc/lift_moment.hpp"

#include <cmath>
#include <limits>

namespace hqc {

namespace {

struct LiftedState {
  VecX x;
  Mat3d g;
  double u;
};

// Image of (x, g, u) under the lifted flow at time t.
LiftedState lifted_flow(const Model& m, const VecX& x, const Mat3d& g, double u, double t) {
  auto X = [&m](const auto& z) { return m.field(z); };
  FlowResult fr = flow(X, m.chart(), ChartPoint(m.chart(), x), t, m.exact_flow());
  const MatX& J = fr.jacobian;
  MatX Jinv = J.inverse();
  Frame<double> I0 = m.frame(x);
  Frame<double> It = m.frame(fr.x);
  Mat3d R;
  for (int a = 0; a < 3; ++a) R.col(a) = q_coefficients(It, MatX(J * I0[a] * Jinv));
  R = polar_rotation(R);
  double du = std::log(std::abs(J.determinant())) + m.log_density(fr.x) - m.log_density(x);
  return {fr.x, R * g, u + du};
}

Vec3d relative_rotation_coords(const Mat3d& g0, const Mat3d& g) { return 0.5 * so3_log(Mat3d(g0.transpose() * g)); }

std::vector<VecX> canonical_basis(const BundleGeom<double>& G) {
  std::vector<VecX> out;
  for (int i = 0; i < G.d; ++i) out.push_back(G.hlift(VecX(VecX::Unit(G.d, i))));
  for (int a = 0; a < 3; ++a) out.push_back(G.fund(a));
  out.push_back(G.z0c());
  return out;
}

double fiber_scale(const StructureParams& prm, double u) { return prm.A * std::exp(2.0 * u / prm.c); }

}  // namespace

VecX natural_lift_flow(const Model& m, const Mat3d& g0, const VecX& y, double h) {
  const int d = m.dim();
  VecX x = y.head(d);
  Mat3d g = g0 * so3_exp(Vec3d(2.0 * y.segment<3>(d)));
  const double u = y[d + 3];
  LiftedState fwd = lifted_flow(m, x, g, u, h);
  LiftedState bwd = lifted_flow(m, x, g, u, -h);
  VecX out(d + 4);
  out.head(d) = (fwd.x - bwd.x) / (2.0 * h);
  out.segment<3>(d) = (relative_rotation_coords(g0, fwd.g) - relative_rotation_coords(g0, bwd.g)) / (2.0 * h);
  out[d + 3] = (fwd.u - bwd.u) / (2.0 * h);
  return out;
}

VecX NaturalLift::raw(const BundlePoint& p) const {
  if (mode == LiftMode::FlowJacobian) return natural_lift_flow(*model, p.g, p.coords());
  return natural_lift_raw(*model, p.g, p.coords());
}

TangentHat NaturalLift::operator()(const BundlePoint& p) const { return decompose(*model, params.c, p, raw(p)); }

TangentHat natural_lift(const Model& m, const StructureParams& prm, const BundlePoint& p, LiftMode mode) {
  auto X = [&m](const auto& z) { return m.field(z); };
  if (quaternionic_field_residual(m, X, p.x) > 1e-8)
    throw PreconditionError("natural_lift: the vector field is not quaternionic");
  return NaturalLift{&m, prm, mode}(p);
}

MomentValue moment(const StructureParams& prm, const Model& m, const BundlePoint& p) {
  return {moment_raw(m, prm, p.g, p.coords())};
}

MomentGeometry moment_geometry(const StructureParams& prm, const Model& m, const BundlePoint& p) {
  return moment_geometry(prm, m, p.g, p.coords());
}

MomentGeometry moment_geometry(const StructureParams& prm, const Model& m, const Mat3d& g0, const VecX& y) {
  MomentGeometry mg;
  mg.d = m.dim();
  mg.D = mg.d + 4;
  mg.n = m.n();
  mg.c = prm.c;
  mg.A = prm.A;
  mg.y = y;
  BundleGeom<double> G(m, prm.c, g0, mg.y);
  mg.f = fiber_scale(prm, y[mg.d + 3]);
  mg.theta = G.theta_matrix();

  auto theta_coeffs = [&](const auto& z) {
    using T = typename std::decay_t<decltype(z)>::Scalar;
    Mat<T> M = BundleGeom<T>(m, prm.c, g0, z).theta_matrix();
    return flatten_rowmajor(M);
  };
  MatX J = jacobian(theta_coeffs, mg.y);  // J(a*D + j, i) = d_i theta(a, j)
  const int D = mg.D;
  for (int a = 0; a < 3; ++a) {
    MatX B = J.middleRows(a * D, D);
    mg.dtheta[a] = B.transpose() - B;
  }
  for (int a = 0; a < 3; ++a) {
    const int b = cyc1(a), c = cyc2(a);
    MatX tb = mg.theta.row(b).transpose(), tc = mg.theta.row(c).transpose();
    mg.omega[a] = mg.dtheta[a] + 2.0 * kEps * (tb * tc.transpose() - tc * tb.transpose());
  }
  VecX du = VecX::Unit(D, mg.d + 3);
  VecX df = (2.0 * mg.f / prm.c) * du;
  for (int a = 0; a < 3; ++a) {
    VecX ta = mg.theta.row(a).transpose();
    mg.dtheta_hat[a] = mg.f * mg.dtheta[a] + df * ta.transpose() - ta * df.transpose();
  }
  for (int a = 0; a < 3; ++a) mg.ihat[a] = ihat_matrix_t(G, a);
  MatX tt = mg.theta.transpose() * mg.theta;
  for (int a = 0; a < 3; ++a)
    mg.G[a] = -mg.f * mg.omega[a] * mg.ihat[a] + 2.0 * kEps * mg.f * tt +
              (2.0 * kEps * mg.f / (prm.c * prm.c)) * (du * du.transpose());
  mg.xhat = natural_lift_raw(m, g0, mg.y);
  auto mu = [&](const auto& z) {
    using T = typename std::decay_t<decltype(z)>::Scalar;
    return Vec<T>(moment_raw(m, prm, g0, z));
  };
  mg.dmu = jacobian(mu, mg.y);
  mg.basis = canonical_basis(G);
  return mg;
}

double theta_hat(int alpha, const StructureParams& prm, const Model& m, const BundlePoint& p, const TangentHat& v) {
  VecX raw = compose(m, prm.c, p, v);
  BundleGeom<double> G(m, prm.c, p.g, p.coords());
  return fiber_scale(prm, p.u) * G.theta(raw)[alpha - 1];
}

double g_form(int alpha, const StructureParams& prm, const Model& m, const BundlePoint& p, const TangentHat& u,
              const TangentHat& v) {
  MomentGeometry mg = moment_geometry(prm, m, p);
  return mg.g_form(alpha - 1, compose(m, prm.c, p, u), compose(m, prm.c, p, v));
}

double check_dtheta_eq_g(int alpha, const StructureParams& prm, const Model& m,
                         const std::vector<BundlePoint>& samples) {
  double r = 0.0;
  const int a = alpha - 1;
  for (const BundlePoint& p : samples) {
    MomentGeometry mg = moment_geometry(prm, m, p);
    for (const VecX& Y : mg.basis)
      for (const VecX& Z : mg.basis) {
        double lhs = Y.dot(mg.dtheta_hat[a] * Z);
        double rhs = mg.g_form(a, Y, mg.ihat[a] * Z);
        r = std::max(r, std::abs(lhs - rhs));
      }
  }
  return r;
}

namespace {

// Unit elements of the twistor sphere used to probe hermitian conditions.
std::vector<MatX> probe_structures(const Frame<double>& I) {
  std::vector<MatX> out = {I[0], I[1], I[2]};
  const double s2 = 1.0 / std::sqrt(2.0), s3 = 1.0 / std::sqrt(3.0);
  out.push_back(s2 * (I[0] + I[1]));
  out.push_back(s2 * (I[1] - I[2]));
  out.push_back(s3 * (I[0] + I[1] + I[2]));
  return out;
}

}  // namespace

CrReport check_cr(const StructureParams& prm, const Model& m, const std::vector<BundlePoint>& samples) {
  CrReport rep{0.0, 0.0, 0.0, true};
  const int d = m.dim();
  for (const BundlePoint& p : samples) {
    MomentGeometry mg = moment_geometry(prm, m, p);
    std::array<MatX, 3> rows;
    for (int a = 0; a < 3; ++a) rows[a] = mg.dmu.row(a) * mg.ihat[a];
    for (const VecX& v : mg.basis) {
      for (int a = 0; a < 3; ++a) {
        const double va = (rows[a] * v)(0, 0);
        for (int b = a + 1; b < 3; ++b) rep.cr_residual = std::max(rep.cr_residual, std::abs(va - (rows[b] * v)(0, 0)));
        const double lemma = mg.dmu.row(a).dot(v) + mg.xhat.dot(mg.dtheta_hat[a] * v);
        rep.lemma_residual = std::max(rep.lemma_residual, std::abs(lemma));
      }
    }
    MatX ric = ricci_split(m, p.x).full;
    VecX X = m.field(p.x);
    for (const MatX& J : probe_structures(m.frame(p.x)))
      for (int i = 0; i < d; ++i) {
        VecX Y = VecX::Unit(d, i);
        double h = X.dot(ric * Y) - (J * X).dot(ric * (J * Y));
        rep.hypothesis_residual = std::max(rep.hypothesis_residual, std::abs(h));
      }
  }
  rep.hypothesis_holds = rep.hypothesis_residual < 1e-8;
  return rep;
}

TransversalityReport check_transversality(const StructureParams& prm, const Model& m,
                                          const std::vector<BundlePoint>& samples) {
  TransversalityReport rep{std::numeric_limits<double>::infinity(), 0.0, {}, {}};
  const int n = m.n();
  for (const BundlePoint& p : samples) {
    MomentGeometry mg = moment_geometry(prm, m, p);
    const VecX& Xh = mg.xhat;
    for (int a = 0; a < 3; ++a) {
      double gxx = mg.g_form(a, Xh, Xh);
      double lhs = mg.dmu.row(a).dot(mg.ihat[a] * Xh);
      rep.min_abs_g = std::min(rep.min_abs_g, std::abs(gxx));
      rep.identity_residual = std::max(rep.identity_residual, std::abs(lhs - gxx));
    }
    MatX ric = ricci_split(m, p.x).full;
    VecX X = m.field(p.x);
    Vec3d th = mg.theta * Xh;
    rep.expression.push_back(X.dot(ric * X) + 4.0 * (n + 2) * th.squaredNorm());
    rep.scaled_g.push_back(2.0 * (n + 2) * kEps * mg.g_form(0, Xh, Xh) / mg.f);
  }
  return rep;
}

OmegaContraction omega_contraction_identity(const StructureParams& prm, const Model& m,
                                            const std::vector<BundlePoint>& samples) {
  OmegaContraction out{0.0, 0.0, 0.0};
  const int n = m.n();
  for (const BundlePoint& p : samples) {
    MomentGeometry mg = moment_geometry(prm, m, p);
    const VecX& Xh = mg.xhat;
    MatX ric = ricci_split(m, p.x).full;
    VecX X = m.field(p.x);
    const double rhs = -kEps / (2.0 * (n + 2)) * X.dot(ric * X);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int a = 0; a < 3; ++a) {
      double v = Xh.dot(mg.omega[a] * (mg.ihat[a] * Xh));
      out.residual = std::max(out.residual, std::abs(v - rhs));
      out.max_value = std::max(out.max_value, std::abs(v));
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    out.alpha_spread = std::max(out.alpha_spread, hi - lo);
  }
  return out;
}

double lift_bracket_residual(const StructureParams& prm, const Model& m, const BundlePoint& p) {
  const Mat3d g0 = p.g;
  const double c = prm.c;
  auto Xh = [&m, g0](const auto& z) { return natural_lift_raw(m, g0, z); };
  VecX y = p.coords();
  double r = 0.0;
  for (int a = 0; a < 4; ++a) {
    auto Z = [&m, g0, c, a](const auto& z) {
      auto G = make_geom(m, c, g0, z);
      return a == 3 ? G.z0c() : G.fund(a);
    };
    r = std::max(r, lie_bracket(Xh, Z, y).cwiseAbs().maxCoeff());
  }
  return r;
}

LiftInvariance lift_invariance(const StructureParams& prm, const Model& m, const BundlePoint& p) {
  const Mat3d g0 = p.g;
  const double c = prm.c;
  const int D = m.dim() + 4;
  auto Xh = [&m, g0](const auto& z) { return natural_lift_raw(m, g0, z); };
  VecX y = p.coords();
  LiftInvariance out{0.0, 0.0, 0.0};
  for (int a = 0; a < 3; ++a) {
    auto tf = make_tensor_field(0, 1, D, [&m, g0, c, a](const auto& z) {
      using T = typename std::decay_t<decltype(z)>::Scalar;
      return Vec<T>(make_geom(m, c, g0, z).theta_matrix().row(a).transpose());
    });
    out.theta = std::max(out.theta, lie_derivative_tensor(Xh, tf, y).cwiseAbs().maxCoeff());
    auto ti = make_tensor_field(1, 1, D, [&m, g0, c, a](const auto& z) {
      return flatten_rowmajor(ihat_matrix_t(make_geom(m, c, g0, z), a));
    });
    out.ihat = std::max(out.ihat, lie_derivative_tensor(Xh, ti, y).cwiseAbs().maxCoeff());
  }
  auto t0 = make_tensor_field(0, 1, D, [&m, g0, c](const auto& z) { return make_geom(m, c, g0, z).theta0_row(); });
  out.theta0bar = lie_derivative_tensor(Xh, t0, y).cwiseAbs().maxCoeff();
  return out;
}

FundamentalLie fundamental_lie_theta(const StructureParams& prm, const Model& m, const BundlePoint& p) {
  const Mat3d g0 = p.g;
  const double c = prm.c, A = prm.A;
  const int D = m.dim() + 4;
  VecX y = p.coords();
  BundleGeom<double> G(m, c, g0, y);
  MatX th = G.theta_matrix();
  const double f = fiber_scale(prm, p.u);
  FundamentalLie out{0.0, 0.0};
  for (int a = 0; a < 3; ++a) {
    auto Z = [&m, g0, c, a](const auto& z) { return make_geom(m, c, g0, z).fund(a); };
    for (int b = 0; b < 3; ++b) {
      VecX expect = VecX::Zero(D);
      if (b == cyc1(a)) expect = 2.0 * kEps * th.row(cyc2(a)).transpose();
      if (b == cyc2(a)) expect = -2.0 * kEps * th.row(cyc1(a)).transpose();
      auto tf = make_tensor_field(0, 1, D, [&m, g0, c, b](const auto& z) {
        using T = typename std::decay_t<decltype(z)>::Scalar;
        return Vec<T>(make_geom(m, c, g0, z).theta_matrix().row(b).transpose());
      });
      auto tfh = make_tensor_field(0, 1, D, [&m, g0, c, b, A](const auto& z) {
        using T = typename std::decay_t<decltype(z)>::Scalar;
        using std::exp;
        auto Gz = make_geom(m, c, g0, z);
        T fz = A * exp(2.0 * Gz.u / c);
        return Vec<T>(fz * Gz.theta_matrix().row(b).transpose());
      });
      out.theta = std::max(out.theta, (lie_derivative_tensor(Z, tf, y) - expect).cwiseAbs().maxCoeff());
      out.theta_hat = std::max(out.theta_hat, (lie_derivative_tensor(Z, tfh, y) - f * expect).cwiseAbs().maxCoeff());
    }
  }
  return out;
}

double lie_dtheta_hat_residual(const StructureParams& prm, const Model& m, const BundlePoint& p) {
  const Mat3d g0 = p.g;
  const int D = m.dim() + 4;
  auto Xh = [&m, g0](const auto& z) { return natural_lift_raw(m, g0, z); };
  VecX y = p.coords();
  double r = 0.0;
  for (int a = 0; a < 3; ++a) {
    auto tf = make_tensor_field(0, 2, D, [&m, &prm, g0, a](const auto& z) {
      return flatten_rowmajor(dtheta_hat_t(m, prm, g0, z)[a]);
    });
    r = std::max(r, lie_derivative_tensor(Xh, tf, y).cwiseAbs().maxCoeff());
  }
  return r;
}

}  // namespace hqc
