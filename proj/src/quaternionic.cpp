#include "hqc/quaternionic.hpp"

#include <stdexcept>

namespace hqc {

double torsion_residual(const Model& m, const VecX& x) {
  Christoffel<double> G = m.christoffel(x);
  double r = 0.0;
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j < m.dim(); ++j) r = std::max(r, (G[i].col(j) - G[j].col(i)).cwiseAbs().maxCoeff());
  return r;
}

double q_preservation_residual(const Model& m, const VecX& x) {
  Christoffel<double> G = m.christoffel(x);
  Frame<double> I = m.frame(x);
  double r = 0.0;
  for (int i = 0; i < m.dim(); ++i)
    for (int a = 0; a < 3; ++a) {
      MatX nI = covariant_derivative_endo(G, I[a], i);
      Vec3d c = q_coefficients(I, nI);
      // nabla I_a must lie in span(I_b, I_c).
      MatX proj = c[cyc1(a)] * I[cyc1(a)] + c[cyc2(a)] * I[cyc2(a)];
      r = std::max(r, (nI - proj).cwiseAbs().maxCoeff());
    }
  return r;
}

std::shared_ptr<DeformedModel> deform_connection(ModelPtr base, AffineOneForm xi, std::string name) {
  if (name.empty()) name = base->name() + "+S";
  auto m = std::make_shared<DeformedModel>(base, std::move(xi), std::move(name));
  const ChartBox& box = m->chart();
  VecX center = 0.5 * (box.lo + box.hi) + 0.1 * (box.hi - box.lo).cwiseProduct(VecX::LinSpaced(m->dim(), 0.3, 0.9));
  if (torsion_residual(*m, center) > 1e-10 || q_preservation_residual(*m, center) > 1e-10)
    throw std::logic_error("deform_connection: deformed connection failed validation");
  return m;
}

CurvatureTensor curvature(const Model& m, const VecX& x) {
  const int d = m.dim();
  Christoffel<double> G = m.christoffel(x);
  // dG[l][i] = d_l Gamma_i
  std::vector<Christoffel<double>> dG(d);
  for (int l = 0; l < d; ++l) {
    Christoffel<D1> Gd = m.christoffel(seed_axis(x, l));
    dG[l].resize(d);
    for (int i = 0; i < d; ++i) dG[l][i] = tangent(Gd[i]);
  }
  CurvatureTensor R(d, std::vector<MatX>(d));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) R[i][j] = dG[i][j] - dG[j][i] + G[i] * G[j] - G[j] * G[i];
  return R;
}

MatX curvature(const CurvatureTensor& R, const VecX& X, const VecX& Y) {
  const Eigen::Index d = X.size();
  MatX out = MatX::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (X[i] == 0.0) continue;
    for (Eigen::Index j = 0; j < d; ++j)
      if (Y[j] != 0.0) out += X[i] * Y[j] * R[i][j];
  }
  return out;
}

MatX curvature(const Model& m, const VecX& X, const VecX& Y, const VecX& x) {
  return curvature(curvature(m, x), X, Y);
}

double bianchi_residual(const CurvatureTensor& R) {
  const size_t d = R.size();
  double r = 0.0;
  for (size_t i = 0; i < d; ++i)
    for (size_t j = 0; j < d; ++j)
      for (size_t k = 0; k < d; ++k) {
        VecX s = R[i][j].col(k) + R[j][k].col(i) + R[k][i].col(j);
        r = std::max(r, s.cwiseAbs().maxCoeff());
      }
  return r;
}

MatX ricci(const CurvatureTensor& R) {
  const size_t d = R.size();
  MatX ric = MatX::Zero(d, d);
  for (size_t a = 0; a < d; ++a)
    for (size_t b = 0; b < d; ++b) {
      double s = 0.0;
      for (size_t k = 0; k < d; ++k) s += R[k][a](k, b);
      ric(a, b) = s;
    }
  return ric;
}

MatX hermitian_projection(const MatX& b, const Frame<double>& I) {
  MatX out = b;
  for (int a = 0; a < 3; ++a) out += I[a].transpose() * b * I[a];
  return 0.25 * out;
}

RicciSplit ricci_split(const CurvatureTensor& R, const Frame<double>& I) {
  RicciSplit rs;
  rs.full = ricci(R);
  rs.symmetric = 0.5 * (rs.full + rs.full.transpose());
  rs.antisymmetric = 0.5 * (rs.full - rs.full.transpose());
  rs.hermitian_projection = hermitian_projection(rs.symmetric, I);
  return rs;
}

RicciSplit ricci_split(const Model& m, const VecX& x) { return ricci_split(curvature(m, x), m.frame(x)); }

ConnectionForms<double> local_connection_forms(const Model& m, const VecX& x) {
  return local_connection_forms_t(m, x);
}

double connection_form_reconstruction_residual(const Model& m, const VecX& x) {
  ConnectionForms<double> cf = local_connection_forms(m, x);
  Christoffel<double> G = m.christoffel(x);
  Frame<double> I = m.frame(x);
  double r = 0.0;
  for (int i = 0; i < m.dim(); ++i)
    for (int a = 0; a < 3; ++a) {
      const int b = cyc1(a), c = cyc2(a);
      MatX direct = covariant_derivative_endo(G, I[a], i);
      MatX recon = cf.Theta(c, i) * I[b] - cf.Theta(b, i) * I[c];
      r = std::max(r, (direct - recon).cwiseAbs().maxCoeff());
    }
  return r;
}

std::array<MatX, 3> omega_from_trace(const CurvatureTensor& R, const Frame<double>& I, int n) {
  const size_t d = R.size();
  std::array<MatX, 3> out;
  for (int a = 0; a < 3; ++a) {
    out[a] = MatX::Zero(d, d);
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < d; ++j) out[a](i, j) = -(I[a] * R[i][j]).trace() / (2.0 * n);
  }
  return out;
}

std::array<MatX, 3> omega_from_trace(const Model& m, const VecX& x) {
  return omega_from_trace(curvature(m, x), m.frame(x), m.n());
}

MatX b_tensor(const RicciSplit& rs, int n) {
  return rs.antisymmetric / (4.0 * (n + 1)) + rs.symmetric / (4.0 * n) -
         rs.hermitian_projection / (2.0 * n * (n + 2));
}

std::array<MatX, 3> omega_from_b(const RicciSplit& rs, const Frame<double>& I, int n) {
  MatX B = b_tensor(rs, n);
  std::array<MatX, 3> out;
  for (int a = 0; a < 3; ++a) {
    MatX BI = B * I[a];
    out[a] = 2.0 * (BI - BI.transpose());
  }
  return out;
}

HermitianCheck is_q_hermitian(const MatX& b, const Frame<double>& I, double tol) {
  double r = 0.0;
  for (int a = 0; a < 3; ++a) r = std::max(r, (b - I[a].transpose() * b * I[a]).cwiseAbs().maxCoeff());
  return {r <= tol, r};
}

double check_asd_02(const CurvatureTensor& R, const MatX& I, const VecX& X, const VecX& Y) {
  const Eigen::Index d = I.rows();
  if ((I * I + MatX::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-8)
    throw PreconditionError("check_asd_02: I is not almost complex");
  VecX IX = I * X, IY = I * Y;
  MatX R02 = 0.25 * (curvature(R, X, Y) + I * curvature(R, IX, Y) + I * curvature(R, X, IY) - curvature(R, IX, IY));
  return (R02 * I - I * R02).norm();
}

double asd_02_residual(const Model& m, const VecX& x) {
  CurvatureTensor R = curvature(m, x);
  Frame<double> F = m.frame(x);
  const int d = m.dim();
  const std::array<Vec3d, 4> dirs = {Vec3d(1, 0, 0), Vec3d(0, 1, 0), Vec3d(0, 0, 1), Vec3d(0.48, -0.6, 0.64)};
  double r = 0.0;
  for (const Vec3d& u : dirs) {
    Vec3d v = u.normalized();
    MatX I = v[0] * F[0] + v[1] * F[1] + v[2] * F[2];
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) r = std::max(r, check_asd_02(R, I, VecX::Unit(d, i), VecX::Unit(d, j)));
  }
  return r;
}

}  // namespace hqc
