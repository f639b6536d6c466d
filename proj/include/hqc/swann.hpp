#pragma once

// The Swann bundle over a model in coordinates y = (x, a, u): base point x,
// fiber rotation g = g0 Exp(2a) around a chart center g0, and u = log r.
// The frame at (x, g) is I^g_a = sum_b I_b g(b, a). The so(3) basis e_a acts
// as 2 L_a (L_a the standard generators) so that [e_a, e_b] = 2 e_c.

#include <random>

#include "hqc/quaternionic.hpp"

namespace hqc {

struct StructureParams {
  double c;
  double A = 1.0;
  static constexpr double eps = kEps;

  StructureParams(double c_, double A_ = 1.0) : c(c_), A(A_) {
    if (c == 0.0) throw ParameterError("StructureParams: c must be nonzero");
    if (A == 0.0) throw ParameterError("StructureParams: A must be nonzero");
  }
};

struct BundlePoint {
  VecX x;
  Mat3d g;
  double u;  // log r

  BundlePoint(VecX x_, Mat3d g_, double u_);
  double r() const { return std::exp(u); }
  // Chart coordinates of this point in the chart centered at g: (x, 0, u).
  VecX coords() const;
};

// Tangent vector split along T M^ = V + H: horizontal part (projection to M),
// so(3) coefficients of Z_1..Z_3 and the coefficient of Z_0^c.
struct TangentHat {
  VecX horizontal;
  Vec3d vertical_so3;
  double vertical_scale;
};

// Pointwise bundle geometry at chart coordinates y (any scalar level).
template <class S>
struct BundleGeom {
  int d;        // 4n
  double c;
  Vec<S> x;
  Vec3<S> a;
  S u;
  Mat3<S> g, Jr, Jrinv;
  Frame<S> I;   // reference frame at x
  Frame<S> Ig;  // frame rotated by g
  Mat<S> Theta;
  Vec<S> theta0;

  BundleGeom(const Model& m, double c_, const Mat3d& g0, const Vec<S>& y) : d(m.dim()), c(c_) {
    x = y.head(d);
    a = y.template segment<3>(d);
    u = y[d + 3];
    Vec3<S> phi = 2.0 * a;
    g = lift<S>(g0) * so3_exp(phi);
    Jr = so3_jr(phi);
    Jrinv = so3_jr_inv(phi);
    I = m.frame(x);
    Ig = rotate_frame(I, g);
    ConnectionForms<S> cf = local_connection_forms_t(m, x);
    Theta = cf.Theta;
    theta0 = cf.theta0;
  }

  int dim() const { return d + 4; }

  // so(3) part of the connection form, e-coefficients.
  Vec3<S> theta(const Vec<S>& v) const {
    return Vec3<S>(0.5 * (g.transpose() * (Theta * v.head(d))) + Jr * v.template segment<3>(d));
  }
  // Scale part: theta0bar = du + theta0^U.
  S theta0bar(const Vec<S>& v) const { return v[d + 3] + theta0.dot(v.head(d)); }
  // 3 x dim and dim coefficient arrays of theta and theta0bar.
  Mat<S> theta_matrix() const {
    Mat<S> M = Mat<S>::Zero(3, dim());
    M.leftCols(d) = 0.5 * (g.transpose() * Theta);
    M.block(0, d, 3, 3) = Jr;
    return M;
  }
  Vec<S> theta0_row() const {
    Vec<S> r = Vec<S>::Zero(dim());
    r.head(d) = theta0;
    r[d + 3] = S(1.0);
    return r;
  }

  Vec<S> hlift(const Vec<S>& Y) const {
    Vec<S> v(dim());
    v.head(d) = Y;
    v.template segment<3>(d) = -0.5 * (Jrinv * (g.transpose() * (Theta * Y)));
    v[d + 3] = -theta0.dot(Y);
    return v;
  }
  Vec<S> fund(int alpha) const {
    Vec<S> v = Vec<S>::Zero(dim());
    v.template segment<3>(d) = Jrinv.col(alpha);
    return v;
  }
  // Z_0^c = c e0~, e0~ = d/du.
  Vec<S> z0c() const {
    Vec<S> v = Vec<S>::Zero(dim());
    v[d + 3] = S(c);
    return v;
  }

  // I^_a v = (I^g_a Y)^h + th_a Z0c + th_b Z_c - th_c Z_b - s Z_a with
  // Y = pi_* v, th = theta(v), s = theta0bar(v) / c.
  Vec<S> ihat(int alpha, const Vec<S>& v) const {
    const int b = cyc1(alpha), cc = cyc2(alpha);
    Vec<S> Y = v.head(d);
    Vec3<S> th = theta(v);
    S s = theta0bar(v) / c;
    return Vec<S>(hlift(Vec<S>(Ig[alpha] * Y)) + th[alpha] * z0c() + th[b] * fund(cc) - th[cc] * fund(b) -
                  s * fund(alpha));
  }

  Vec<S> from_hat(const Vec<S>& Y, const Vec3<S>& so3, const S& scale) const {
    Vec<S> v = hlift(Y) + scale * z0c();
    for (int k = 0; k < 3; ++k) v += so3[k] * fund(k);
    return v;
  }
};

template <class S>
BundleGeom<S> make_geom(const Model& m, double c, const Mat3d& g0, const Vec<S>& y) {
  return BundleGeom<S>(m, c, g0, y);
}

// Matrix of I^_a acting on raw chart vectors at y (double).
MatX ihat_matrix(const Model& m, double c, const Mat3d& g0, const VecX& y, int alpha);

// ---------------------------------------------------------------------------
// Operations at a bundle point (chart centered at p.g).

// (theta, theta0bar) of a raw tangent vector.
std::pair<Vec3d, double> theta_bar(const Model& m, const BundlePoint& p, const VecX& v);
TangentHat decompose(const Model& m, double c, const BundlePoint& p, const VecX& v);
VecX compose(const Model& m, double c, const BundlePoint& p, const TangentHat& t);
TangentHat horizontal_lift(const Model& m, const BundlePoint& p, const VecX& Y);
VecX horizontal_lift_raw(const Model& m, const BundlePoint& p, const VecX& Y);
// Fundamental field of a0 e0 + sum a_k e_k (e0 -> d/du).
VecX fundamental_field(const Model& m, const BundlePoint& p, double a0, const Vec3d& a);
TangentHat i_hat(int alpha, const StructureParams& prm, const Model& m, const BundlePoint& p, const TangentHat& v);

// ---------------------------------------------------------------------------
// Canonical field jets: the dim canonical fields (horizontal lifts of d_i,
// Z_1..Z_3, Z_0^c) and their images under I^_1..3, with first derivatives.

struct CanonicalJet {
  int dim;
  // fields[s] for s = k + dim * q: q = 0 plain, q = 1..3 image under I^_q.
  std::vector<VecX> fields;
  std::vector<MatX> jac;
  std::array<MatX, 3> ihat;  // I^_a matrices at the point

  const VecX& F(int k, int q = 0) const { return fields[k + dim * q]; }
  const MatX& DF(int k, int q = 0) const { return jac[k + dim * q]; }
  VecX bracket(int k, int qk, int l, int ql) const {
    return DF(l, ql) * F(k, qk) - DF(k, qk) * F(l, ql);
  }
};

CanonicalJet canonical_jet(const Model& m, double c, const Mat3d& g0, const VecX& y);

// N^a(U, V) = [U,V] + I^[I^U, V] + I^[U, I^V] - [I^U, I^V] for two canonical fields.
VecX nijenhuis_canonical(const CanonicalJet& J, int alpha, int k, int l);
// Max |N^a| over all canonical pairs and alpha.
double nijenhuis_max(const CanonicalJet& J);

// Nijenhuis tensor on arbitrary bundle fields (generic callables on chart coordinates).
template <class FU, class FV>
VecX nijenhuis_hat(int alpha, const StructureParams& prm, const Model& m, const Mat3d& g0, FU&& U, FV&& V,
                   const VecX& y) {
  const double c = prm.c;
  auto IU = [&](const auto& z) {
    using S = typename std::decay_t<decltype(z)>::Scalar;
    return make_geom(m, c, g0, z).ihat(alpha, Vec<S>(U(z)));
  };
  auto IV = [&](const auto& z) {
    using S = typename std::decay_t<decltype(z)>::Scalar;
    return make_geom(m, c, g0, z).ihat(alpha, Vec<S>(V(z)));
  };
  BundleGeom<double> G(m, c, g0, y);
  return lie_bracket(U, V, y) + G.ihat(alpha, lie_bracket(IU, V, y)) + G.ihat(alpha, lie_bracket(U, IV, y)) -
         lie_bracket(IU, IV, y);
}

struct IntegrabilityVerdict {
  bool integrable;            // numerical verdict (max residual < 1e-6)
  bool predicted_integrable;  // c = -4(n+1) or Ric^a Q-hermitian
  bool decisive;              // residual < 1e-6 or > 1e-3
  double max_residual;
  double hermitian_residual;
  bool agrees() const { return decisive && integrable == predicted_integrable; }
};

// Samples: bundle points. For n = 1 the anti-self-duality gate must pass.
IntegrabilityVerdict classify_integrability(const Model& m, double c, const std::vector<BundlePoint>& samples);

struct LieRelationResiduals {
  double z0;         // L_{Z0} I^_a
  double same;       // L_{Z_a} I^_a
  double next;       // L_{Z_a} I^_b - 2 eps I^_c
  double prev;       // L_{Z_a} I^_c + 2 eps I^_b
  double max() const { return std::max(std::max(z0, same), std::max(next, prev)); }
};
LieRelationResiduals lie_relations_check(const StructureParams& prm, const Model& m,
                                         const std::vector<BundlePoint>& samples);

// Quaternionic relations of (I^_1, I^_2, I^_3) at y.
double ihat_relation_residual(const Model& m, double c, const Mat3d& g0, const VecX& y);

// ---------------------------------------------------------------------------
// Sampling.

struct Sampler {
  std::mt19937_64 rng;
  explicit Sampler(uint64_t seed) : rng(seed) {}
  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  Mat3d rotation();
  VecX base_point(const Model& m, double margin = 0.1);
  BundlePoint bundle_point(const Model& m, double margin = 0.1);
};

}  // namespace hqc
