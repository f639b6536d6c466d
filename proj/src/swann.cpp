#include "hqc/swann.hpp"

#include <cmath>

namespace hqc {

BundlePoint::BundlePoint(VecX x_, Mat3d g_, double u_) : x(std::move(x_)), g(std::move(g_)), u(u_) {
  if ((g.transpose() * g - Mat3d::Identity()).cwiseAbs().maxCoeff() > 1e-12 || g.determinant() < 0.0)
    throw DomainError("BundlePoint: fiber rotation is not in SO(3)");
  if (!std::isfinite(u)) throw DomainError("BundlePoint: scale must be positive and finite");
}

VecX BundlePoint::coords() const {
  VecX y = VecX::Zero(x.size() + 4);
  y.head(x.size()) = x;
  y[x.size() + 3] = u;
  return y;
}

MatX ihat_matrix(const Model& m, double c, const Mat3d& g0, const VecX& y, int alpha) {
  BundleGeom<double> G(m, c, g0, y);
  const int D = G.dim();
  MatX M(D, D);
  for (int j = 0; j < D; ++j) M.col(j) = G.ihat(alpha, VecX(VecX::Unit(D, j)));
  return M;
}

std::pair<Vec3d, double> theta_bar(const Model& m, const BundlePoint& p, const VecX& v) {
  BundleGeom<double> G(m, 1.0, p.g, p.coords());
  if (v.size() != G.dim()) throw ShapeError("theta_bar: tangent has wrong dimension");
  return {G.theta(v), G.theta0bar(v)};
}

TangentHat decompose(const Model& m, double c, const BundlePoint& p, const VecX& v) {
  BundleGeom<double> G(m, c, p.g, p.coords());
  return {v.head(G.d), G.theta(v), G.theta0bar(v) / c};
}

VecX compose(const Model& m, double c, const BundlePoint& p, const TangentHat& t) {
  BundleGeom<double> G(m, c, p.g, p.coords());
  return G.from_hat(t.horizontal, t.vertical_so3, t.vertical_scale);
}

TangentHat horizontal_lift(const Model& m, const BundlePoint& p, const VecX& Y) {
  return {Y, Vec3d::Zero(), 0.0};
}

VecX horizontal_lift_raw(const Model& m, const BundlePoint& p, const VecX& Y) {
  BundleGeom<double> G(m, 1.0, p.g, p.coords());
  return G.hlift(Y);
}

VecX fundamental_field(const Model& m, const BundlePoint& p, double a0, const Vec3d& a) {
  BundleGeom<double> G(m, 1.0, p.g, p.coords());
  VecX v = G.z0c() * a0;
  for (int k = 0; k < 3; ++k) v += a[k] * G.fund(k);
  return v;
}

TangentHat i_hat(int alpha, const StructureParams& prm, const Model& m, const BundlePoint& p, const TangentHat& v) {
  BundleGeom<double> G(m, prm.c, p.g, p.coords());
  VecX raw = G.from_hat(v.horizontal, v.vertical_so3, v.vertical_scale);
  VecX out = G.ihat(alpha - 1, raw);
  return {out.head(G.d), G.theta(out), G.theta0bar(out) / prm.c};
}

namespace {
template <class S>
Vec<S> canonical_stack(const Model& m, double c, const Mat3d& g0, const Vec<S>& y) {
  BundleGeom<S> G(m, c, g0, y);
  const int D = G.dim(), d = G.d;
  Vec<S> out(4 * D * D);
  for (int k = 0; k < D; ++k) {
    Vec<S> F;
    if (k < d)
      F = G.hlift(Vec<S>(Vec<S>::Unit(d, k)));
    else if (k < d + 3)
      F = G.fund(k - d);
    else
      F = G.z0c();
    out.segment(k * D, D) = F;
    for (int q = 1; q <= 3; ++q) out.segment((k + D * q) * D, D) = G.ihat(q - 1, F);
  }
  return out;
}
}  // namespace

CanonicalJet canonical_jet(const Model& m, double c, const Mat3d& g0, const VecX& y) {
  const int D = m.dim() + 4;
  auto f = [&](const auto& z) { return canonical_stack(m, c, g0, z); };
  VecX val = f(y);
  MatX jac = jacobian(f, y);
  CanonicalJet J;
  J.dim = D;
  for (int s = 0; s < 4 * D; ++s) {
    J.fields.push_back(val.segment(s * D, D));
    J.jac.push_back(jac.middleRows(s * D, D));
  }
  for (int a = 0; a < 3; ++a) J.ihat[a] = ihat_matrix(m, c, g0, y, a);
  return J;
}

VecX nijenhuis_canonical(const CanonicalJet& J, int alpha, int k, int l) {
  const int q = alpha + 1;
  return J.bracket(k, 0, l, 0) + J.ihat[alpha] * (J.bracket(k, q, l, 0) + J.bracket(k, 0, l, q)) -
         J.bracket(k, q, l, q);
}

double nijenhuis_max(const CanonicalJet& J) {
  double r = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int k = 0; k < J.dim; ++k)
      for (int l = k + 1; l < J.dim; ++l) r = std::max(r, nijenhuis_canonical(J, a, k, l).cwiseAbs().maxCoeff());
  return r;
}

double ihat_relation_residual(const Model& m, double c, const Mat3d& g0, const VecX& y) {
  std::array<MatX, 3> I;
  for (int a = 0; a < 3; ++a) I[a] = ihat_matrix(m, c, g0, y, a);
  Frame<double> F{I[0], I[1], I[2]};
  return frame_relation_residual(F);
}

IntegrabilityVerdict classify_integrability(const Model& m, double c, const std::vector<BundlePoint>& samples) {
  IntegrabilityVerdict v{};
  const int n = m.n();
  double herm = 0.0, nij = 0.0;
  for (const BundlePoint& p : samples) {
    if (n == 1 && asd_02_residual(m, p.x) > 1e-6)
      throw UnsupportedModelError("classify_integrability: n = 1 model is not anti-self-dual");
    RicciSplit rs = ricci_split(m, p.x);
    herm = std::max(herm, is_q_hermitian(rs.antisymmetric, m.frame(p.x)).residual);
    nij = std::max(nij, nijenhuis_max(canonical_jet(m, c, p.g, p.coords())));
  }
  v.max_residual = nij;
  v.hermitian_residual = herm;
  v.integrable = nij < 1e-6;
  v.decisive = nij < 1e-6 || nij > 1e-3;
  v.predicted_integrable = std::abs(c + 4.0 * (n + 1)) < 1e-12 || herm < 1e-8;
  return v;
}

LieRelationResiduals lie_relations_check(const StructureParams& prm, const Model& m,
                                         const std::vector<BundlePoint>& samples) {
  LieRelationResiduals r{0, 0, 0, 0};
  const int d = m.dim();
  for (const BundlePoint& p : samples) {
    CanonicalJet J = canonical_jet(m, prm.c, p.g, p.coords());
    const int D = J.dim;
    // (L_Z I^_b)(F_l) = [Z, I^_b F_l] - I^_b [Z, F_l]
    auto lie = [&](int zk, int beta, int l) {
      return VecX(J.bracket(zk, 0, l, beta + 1) - J.ihat[beta] * J.bracket(zk, 0, l, 0));
    };
    for (int l = 0; l < D; ++l) {
      for (int a = 0; a < 3; ++a) {
        const int b = cyc1(a), c = cyc2(a);
        r.z0 = std::max(r.z0, lie(d + 3, a, l).cwiseAbs().maxCoeff());
        r.same = std::max(r.same, lie(d + a, a, l).cwiseAbs().maxCoeff());
        r.next = std::max(r.next, (lie(d + a, b, l) - 2.0 * kEps * J.F(l, c + 1)).cwiseAbs().maxCoeff());
        r.prev = std::max(r.prev, (lie(d + a, c, l) + 2.0 * kEps * J.F(l, b + 1)).cwiseAbs().maxCoeff());
      }
    }
  }
  return r;
}

double Sampler::uniform() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double Sampler::normal() {
  double u1 = uniform(), u2 = uniform();
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Mat3d Sampler::rotation() {
  Quat<double> q(normal(), normal(), normal(), normal());
  return quat_to_rotation(q.normalized());
}

VecX Sampler::base_point(const Model& m, double margin) {
  ChartBox box = m.chart().shrunk(margin);
  for (int tries = 0; tries < 10000; ++tries) {
    VecX x(box.dim());
    for (int i = 0; i < box.dim(); ++i) x[i] = uniform(box.lo[i], box.hi[i]);
    if (m.admissible_sample(x)) return x;
  }
  throw DomainError("Sampler: no admissible base point found");
}

BundlePoint Sampler::bundle_point(const Model& m, double margin) {
  VecX x = base_point(m, margin);
  Mat3d g = rotation();
  double u = uniform(-0.5, 0.5);
  return BundlePoint(x, g, u);
}

}  // namespace hqc
