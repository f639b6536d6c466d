#pragma once

// Quaternionic structures and connections on M: the S^xi deformation,
// curvature, Ricci splitting, local connection forms, curvature 2-forms,
// Q-hermitian tests and affine-field criteria.

#include <memory>

#include "hqc/linalg.hpp"
#include "hqc/model.hpp"

namespace hqc {

// ---------------------------------------------------------------------------
// Frame helpers.

// Max-abs residual of I_a^2 = -id and I1 I2 = -I2 I1 = I3.
template <class T>
double frame_relation_residual(const Frame<T>& I) {
  const Eigen::Index d = I[0].rows();
  MatX id = MatX::Identity(d, d);
  double r = 0.0;
  for (int a = 0; a < 3; ++a) r = std::max(r, (values(Mat<T>(I[a] * I[a])) + id).cwiseAbs().maxCoeff());
  r = std::max(r, (values(Mat<T>(I[0] * I[1] - I[2]))).cwiseAbs().maxCoeff());
  r = std::max(r, (values(Mat<T>(I[1] * I[0] + I[2]))).cwiseAbs().maxCoeff());
  return r;
}

// Frame rotated by g: I^g_a = sum_b I_b g(b, a).
template <class T, class G>
Frame<T> rotate_frame(const Frame<T>& I, const G& g) {
  Frame<T> out;
  for (int a = 0; a < 3; ++a) {
    out[a] = Mat<T>::Zero(I[0].rows(), I[0].cols());
    for (int b = 0; b < 3; ++b) out[a] += I[b] * g(b, a);
  }
  return out;
}

// Coefficients of an endomorphism along (I1, I2, I3): c_a = -(1/4n) Tr(I_a E).
template <class T>
Vec3<T> q_coefficients(const Frame<T>& I, const Mat<T>& E) {
  const double inv = 1.0 / static_cast<double>(E.rows());
  Vec3<T> c;
  for (int a = 0; a < 3; ++a) c[a] = -inv * (I[a] * E).trace();
  return c;
}

// ---------------------------------------------------------------------------
// S^xi tensor.

// S^xi_X Y = xi(X)Y + xi(Y)X - sum_a (xi(I_a X) I_a Y + xi(I_a Y) I_a X).
template <class T>
Vec<T> s_xi(const Vec<T>& xi, const Vec<T>& X, const Vec<T>& Y, const Frame<T>& I) {
  Vec<T> out = xi.dot(X) * Y + xi.dot(Y) * X;
  for (int a = 0; a < 3; ++a) {
    Vec<T> IX = I[a] * X, IY = I[a] * Y;
    out -= xi.dot(IX) * IY + xi.dot(IY) * IX;
  }
  return out;
}

// Matrix of Y -> S^xi_X Y.
template <class T>
Mat<T> s_xi_matrix(const Vec<T>& xi, const Vec<T>& X, const Frame<T>& I) {
  const Eigen::Index d = X.size();
  Mat<T> out(d, d);
  for (Eigen::Index j = 0; j < d; ++j) out.col(j) = s_xi(xi, X, Vec<T>(Vec<T>::Unit(d, j)), I);
  return out;
}

// Affine 1-form xi(x) = b + M x (components).
struct AffineOneForm {
  VecX b;
  MatX M;

  static AffineOneForm zero(int d) { return {VecX::Zero(d), MatX::Zero(d, d)}; }
  template <class T>
  Vec<T> operator()(const Vec<T>& x) const {
    return lift<T>(b) + lift<T>(M) * x;
  }
  bool is_zero() const { return b.isZero(0.0) && M.isZero(0.0); }
};

// nabla^2 = nabla^1 + S^xi on top of a base model; frame, field and volume
// density are inherited.
class DeformedModel : public ModelBase<DeformedModel> {
 public:
  DeformedModel(ModelPtr base, AffineOneForm xi, std::string name)
      : ModelBase<DeformedModel>(std::move(name), base->n(), base->chart()), base_(std::move(base)), xi_(std::move(xi)) {}

  const AffineOneForm& xi() const { return xi_; }
  const ModelPtr& base() const { return base_; }

  template <class S>
  Frame<S> frame_t(const Vec<S>& x) const {
    return base_->frame(x);
  }
  template <class S>
  Christoffel<S> christoffel_t(const Vec<S>& x) const {
    Christoffel<S> G = base_->christoffel(x);
    Frame<S> I = base_->frame(x);
    Vec<S> xi = xi_(x);
    for (int i = 0; i < dim(); ++i) G[i] += s_xi_matrix(xi, Vec<S>(Vec<S>::Unit(dim(), i)), I);
    return G;
  }
  template <class S>
  Vec<S> field_t(const Vec<S>& x) const {
    return base_->field(x);
  }
  template <class S>
  S log_density_t(const Vec<S>& x) const {
    return base_->log_density(x);
  }
  std::optional<ClosedFormFlow> exact_flow() const override { return base_->exact_flow(); }
  bool admissible_sample(const VecX& x) const override { return base_->admissible_sample(x); }

 private:
  ModelPtr base_;
  AffineOneForm xi_;
};

// Torsion and Q-preservation residuals of a model's connection at x.
double torsion_residual(const Model& m, const VecX& x);
double q_preservation_residual(const Model& m, const VecX& x);

// Builds nabla + S^xi and re-validates torsion-freeness and Q-preservation at
// the chart center; failure is an internal-consistency error.
std::shared_ptr<DeformedModel> deform_connection(ModelPtr base, AffineOneForm xi, std::string name = "");

// ---------------------------------------------------------------------------
// Curvature and Ricci.

// Lie-algebra-valued connection data along a vector: Gamma(Y) = sum Y^i Gamma_i.
template <class T>
Mat<T> gamma_along(const Christoffel<T>& G, const Vec<T>& Y) {
  Mat<T> out = Mat<T>::Zero(G[0].rows(), G[0].cols());
  for (size_t i = 0; i < G.size(); ++i) out += G[i] * Y[static_cast<Eigen::Index>(i)];
  return out;
}

// R[i][j] = R_{d_i, d_j} = d_i G_j - d_j G_i + [G_i, G_j].
using CurvatureTensor = std::vector<std::vector<MatX>>;
CurvatureTensor curvature(const Model& m, const VecX& x);
MatX curvature(const CurvatureTensor& R, const VecX& X, const VecX& Y);
MatX curvature(const Model& m, const VecX& X, const VecX& Y, const VecX& x);

// Max |R_{X,Y}Z + R_{Y,Z}X + R_{Z,X}Y| over coordinate triples.
double bianchi_residual(const CurvatureTensor& R);

struct RicciSplit {
  MatX full;
  MatX symmetric;
  MatX antisymmetric;
  MatX hermitian_projection;
};

// Ric(X, Y) = Tr(Z -> R_{Z,X} Y).
MatX ricci(const CurvatureTensor& R);
// Pi_h b = (b + sum_a I_a^T b I_a) / 4.
MatX hermitian_projection(const MatX& b, const Frame<double>& I);
RicciSplit ricci_split(const Model& m, const VecX& x);
RicciSplit ricci_split(const CurvatureTensor& R, const Frame<double>& I);

// ---------------------------------------------------------------------------
// Local connection forms. Rows of Theta are theta^U_1..3 as covectors:
//   theta^U_c(Y) = -(1/4n) Tr(I_b nabla_Y I_a)  for cyclic (a, b, c),
// which inverts nabla I_a = theta_c (x) I_b - theta_b (x) I_c. The scale form is
//   theta^U_0(Y) = Tr Gamma(Y) - Y(log f)   for nu = f dx^1..dx^4n.
template <class T>
struct ConnectionForms {
  Mat<T> Theta;   // 3 x 4n
  Vec<T> theta0;  // 4n
};

// nabla_{d_i} I = d_i I + [Gamma_i, I]; frames are constant on every chart.
template <class T>
Mat<T> covariant_derivative_endo(const Christoffel<T>& G, const Mat<T>& E, int i) {
  return G[i] * E - E * G[i];
}

// Gradient of log f via forward mode.
template <class T>
Vec<T> directional_gradient_log_density(const Model& m, const Vec<T>& x) {
  const Eigen::Index d = x.size();
  Vec<T> out(d);
  for (Eigen::Index i = 0; i < d; ++i) out[i] = m.log_density(seed_axis(x, i)).d;
  return out;
}

template <class T>
ConnectionForms<T> local_connection_forms_t(const Model& m, const Vec<T>& x) {
  const int d = m.dim();
  Frame<T> I = m.frame(x);
  Christoffel<T> G = m.christoffel(x);
  Vec<T> dlogf = directional_gradient_log_density(m, x);
  ConnectionForms<T> out{Mat<T>::Zero(3, d), Vec<T>::Zero(d)};
  const double inv = 1.0 / d;
  for (int i = 0; i < d; ++i) {
    for (int a = 0; a < 3; ++a) {
      const int b = cyc1(a), c = cyc2(a);
      Mat<T> nI = covariant_derivative_endo(G, I[a], i);
      out.Theta(c, i) = -inv * (I[b] * nI).trace();
    }
    out.theta0[i] = G[i].trace() - dlogf[i];
  }
  return out;
}

ConnectionForms<double> local_connection_forms(const Model& m, const VecX& x);
// Max-abs residual of nabla_i I_a - (theta_c(d_i) I_b - theta_b(d_i) I_c).
double connection_form_reconstruction_residual(const Model& m, const VecX& x);

// ---------------------------------------------------------------------------
// Curvature 2-forms of Q.

// Omega^U_a(X, Y) = -(1/2n) Tr(I_a R_{X,Y}); returned as three 4n x 4n matrices.
std::array<MatX, 3> omega_from_trace(const Model& m, const VecX& x);
std::array<MatX, 3> omega_from_trace(const CurvatureTensor& R, const Frame<double>& I, int n);
// B = Ric^a/(4(n+1)) + Ric^s/(4n) - Pi_h Ric^s/(2n(n+2));
// Omega^U_a(X, Y) = 2(B(X, I_a Y) - B(Y, I_a X)).
MatX b_tensor(const RicciSplit& rs, int n);
std::array<MatX, 3> omega_from_b(const RicciSplit& rs, const Frame<double>& I, int n);

struct HermitianCheck {
  bool hermitian;
  double residual;
};
// max_a max|b(X,Y) - b(I_a X, I_a Y)| <= tol.
HermitianCheck is_q_hermitian(const MatX& b, const Frame<double>& I, double tol = 1e-8);

// || [R^{(0,2)I}_{X,Y}, I] || with R^{(0,2)I} = (R + I R_{I.,.} + I R_{.,I.} - R_{I.,I.})/4.
double check_asd_02(const CurvatureTensor& R, const MatX& I, const VecX& X, const VecX& Y);
// Max over a grid of frame combinations and coordinate pairs.
double asd_02_residual(const Model& m, const VecX& x);

// ---------------------------------------------------------------------------
// Affine criteria. The vector field is a generic callable (any scalar level).

// (nabla X)(k, i) = d_i X^k + (Gamma_i X)^k
template <class F, class T>
Mat<T> nabla_field(const Model& m, F&& X, const Vec<T>& x) {
  Mat<T> out = jacobian(X, x);
  Christoffel<T> G = m.christoffel(x);
  Vec<T> xv = X(x);
  for (Eigen::Index i = 0; i < x.size(); ++i) out.col(i) += G[i] * xv;
  return out;
}

// H_{Y,Z} X = nabla_Y nabla_Z X - nabla_{nabla_Y Z} X for constant Y, Z.
template <class F>
VecX hessian(const Model& m, F&& X, const VecX& Y, const VecX& Z, const VecX& x) {
  auto nabla_Z_X = [&m, &X, &Z](const auto& z) {
    using S = typename std::decay_t<decltype(z)>::Scalar;
    Mat<S> NX = nabla_field(m, X, z);
    return Vec<S>(NX * lift<S>(Z));
  };
  Christoffel<double> G = m.christoffel(x);
  VecX W = nabla_Z_X(x);
  VecX nYW = directional(nabla_Z_X, x, Y) + gamma_along(G, Y) * W;
  VecX nYZ = gamma_along(G, Y) * Z;
  return nYW - nabla_field(m, X, x) * nYZ;
}

// L_X I_a = d_X I_a - [DX, I_a] (frames are constant in every chart).
template <class F, class T>
Frame<T> lie_derivative_frame(const Model& m, F&& X, const Vec<T>& x) {
  Mat<T> DX = jacobian(X, x);
  Frame<T> I = m.frame(x);
  Frame<T> out;
  for (int a = 0; a < 3; ++a) out[a] = -(DX * I[a] - I[a] * DX);
  return out;
}

// Max-abs distance of L_X I_a from Q.
template <class F>
double quaternionic_field_residual(const Model& m, F&& X, const VecX& x) {
  Frame<double> L = lie_derivative_frame(m, X, x);
  Frame<double> I = m.frame(x);
  double r = 0.0;
  for (int a = 0; a < 3; ++a) {
    Vec3d c = q_coefficients(I, L[a]);
    MatX proj = c[0] * I[0] + c[1] * I[1] + c[2] * I[2];
    r = std::max(r, (L[a] - proj).cwiseAbs().maxCoeff());
  }
  return r;
}

struct AffineReport {
  double lie_der_conn_norm;    // max |(L_X nabla)^k_ij|
  double bianchi_residual;     // max |R_{X,Y}Z + H_{Y,Z}X|
  double trace_criterion;      // max |2 Ric^a(X, .) - d Tr(nabla X)|
};

template <class F>
AffineReport check_affine(const Model& m, F&& X, const VecX& x, double quaternionic_tol = 1e-8) {
  if (quaternionic_field_residual(m, X, x) > quaternionic_tol)
    throw PreconditionError("check_affine: field is not quaternionic");
  const int d = m.dim();
  auto gamma = [&m](const auto& z) { return m.christoffel(z); };
  Christoffel<double> L = lie_derivative_connection(X, gamma, x);
  double lie = 0.0;
  for (const auto& Li : L) lie = std::max(lie, Li.cwiseAbs().maxCoeff());

  CurvatureTensor R = curvature(m, x);
  VecX xv = X(x);
  double bianchi = 0.0;
  for (int j = 0; j < d; ++j)
    for (int k = 0; k < d; ++k) {
      VecX Y = VecX::Unit(d, j), Z = VecX::Unit(d, k);
      VecX lhs = curvature(R, xv, Y) * Z + hessian(m, X, Y, Z, x);
      bianchi = std::max(bianchi, lhs.cwiseAbs().maxCoeff());
    }

  RicciSplit rs = ricci_split(R, m.frame(x));
  auto tr_nabla = [&m, &X](const auto& z) {
    using S = typename std::decay_t<decltype(z)>::Scalar;
    Vec<S> out(1);
    out[0] = nabla_field(m, X, z).trace();
    return out;
  };
  VecX dtr = jacobian(tr_nabla, x).row(0).transpose();
  VecX lhs = 2.0 * (xv.transpose() * rs.antisymmetric).transpose();
  double trace = (lhs - dtr).cwiseAbs().maxCoeff();
  return {lie, bianchi, trace};
}

struct NablaXDecomposition {
  MatX T;   // part in R id + Q
  MatX T0;  // trace-free part commuting with Q
};

// T = (1/4n) sum_{a=0..3} eps_a Tr(nabla X I_a) I_a with I_0 = id, eps_0 = 1,
// eps_{1,2,3} = -1.
template <class F>
NablaXDecomposition decompose_nabla_X(const Model& m, F&& X, const VecX& x, double tol = 1e-8) {
  MatX N = nabla_field(m, X, x);
  Frame<double> I = m.frame(x);
  const int d = m.dim();
  for (int a = 0; a < 3; ++a) {
    MatX C = N * I[a] - I[a] * N;
    Vec3d c = q_coefficients(I, C);
    MatX proj = c[0] * I[0] + c[1] * I[1] + c[2] * I[2];
    if ((C - proj).cwiseAbs().maxCoeff() > tol)
      throw PreconditionError("decompose_nabla_X: nabla X does not normalize Q");
  }
  MatX T = N.trace() / d * MatX::Identity(d, d);
  for (int a = 0; a < 3; ++a) T -= (N * I[a]).trace() / d * I[a];
  return {T, N - T};
}

}  // namespace hqc
