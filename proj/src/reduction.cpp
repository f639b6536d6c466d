#include "hqc/reduction.hpp"

#include <cmath>
#include <limits>

namespace hqc {

namespace {

const Vec3d kE1(1.0, 0.0, 0.0);

double max_abs(const MatX& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

BundlePoint chart_to_point(const Model& m, const Mat3d& g0, const VecX& y) {
  const int d = m.dim();
  Vec3d phi = 2.0 * y.segment<3>(d);
  return BundlePoint(y.head(d), g0 * so3_exp(phi), y[d + 3]);
}

struct LevelData {
  Vec3d mu;
  MatX dmu;  // 3 x D
  VecX xhat;
  MatX K;    // D x 3, I^_a X^
};

Vec3d moment_at(const StructureParams& prm, const Model& m, const Mat3d& g0, const VecX& y) {
  return moment_raw(m, prm, g0, y);
}

MatX moment_jacobian(const StructureParams& prm, const Model& m, const Mat3d& g0, const VecX& y) {
  auto mu = [&](const auto& z) {
    using T = typename std::decay_t<decltype(z)>::Scalar;
    return Vec<T>(moment_raw(m, prm, g0, z));
  };
  return jacobian(mu, y);
}

LevelData level_data(const StructureParams& prm, const Model& m, const Mat3d& g0, const VecX& y) {
  LevelData ld;
  ld.mu = moment_at(prm, m, g0, y);
  ld.dmu = moment_jacobian(prm, m, g0, y);
  ld.xhat = natural_lift_raw(m, g0, y);
  BundleGeom<double> G(m, prm.c, g0, y);
  ld.K.resize(y.size(), 3);
  for (int a = 0; a < 3; ++a) ld.K.col(a) = G.ihat(a, ld.xhat);
  return ld;
}

bool finite(const VecX& v) { return v.allFinite(); }

// pr_V = id - K4 (L K4)^-1 L with L = [d mu; d mu_1 o I^_1], K4 = [X^, I^_a X^].
MatX projector_v(const MomentGeometry& mg) {
  const int D = mg.D;
  MatX L(4, D);
  L.topRows(3) = mg.dmu;
  L.row(3) = mg.dmu.row(0) * mg.ihat[0];
  MatX K4(D, 4);
  K4.col(0) = mg.xhat;
  for (int a = 0; a < 3; ++a) K4.col(a + 1) = mg.ihat[a] * mg.xhat;
  MatX LK = L * K4;
  return MatX::Identity(D, D) - K4 * LK.partialPivLu().solve(L);
}

}  // namespace

namespace {

double level_residual(const StructureParams& prm, const Model& m, const BundlePoint& p) {
  return (moment_at(prm, m, p.g, p.coords()) - kE1).norm();
}

// Damped Newton on |mu - e1| with the chart recentered at every iterate;
// `direction` returns the full Newton step in chart coordinates at p.
template <class StepFn>
LevelSetPoint damped_newton(const StructureParams& prm, const Model& m, const BundlePoint& p0, int max_iter, double tol,
                            const char* who, StepFn&& direction) {
  const int d = m.dim();
  BundlePoint cur = p0;
  double r = level_residual(prm, m, cur);
  double best = std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
  for (int it = 0;; ++it) {
    if (!std::isfinite(r)) throw ProjectionError(std::string(who) + ": non-finite moment value", best);
    if (r < tol) return {cur, r, it};
    if (it == max_iter) break;
    VecX y = cur.coords();
    VecX step = direction(cur);
    if (!finite(step)) throw ProjectionError(std::string(who) + ": degenerate Newton system", best);
    bool accepted = false;
    for (double t = 1.0; t > 1e-6; t *= 0.5) {
      VecX yt = y - t * step;
      if (!finite(yt) || !m.chart().contains(yt.head(d))) continue;
      BundlePoint trial = chart_to_point(m, cur.g, yt);
      double rt = level_residual(prm, m, trial);
      if (std::isfinite(rt) && rt < r) {
        cur = trial;
        r = rt;
        accepted = true;
        break;
      }
    }
    best = std::min(best, r);
    if (!accepted) {
      if (r < 1e3 * tol) return {cur, r, it + 1};
      throw ProjectionError(std::string(who) + ": Newton stagnated", best);
    }
  }
  throw ProjectionError(std::string(who) + ": no convergence", best);
}

}  // namespace

BundlePoint align_fiber(const StructureParams& prm, const Model& m, const BundlePoint& p) {
  Vec3d mu = moment_at(prm, m, p.g, p.coords());
  double nm = mu.norm();
  if (!(nm > 0.0) || !std::isfinite(nm)) throw ProjectionError("align_fiber: moment vanishes", nm);
  Vec3d w = mu / nm;
  Mat3d R = so3_exp(Vec3d(minimal_rotation_vector(w)));
  if (w[0] < -1.0 + 1e-12) R = so3_exp(Vec3d(0.0, 0.0, M_PI));
  return BundlePoint(p.x, p.g * R, p.u - 0.5 * prm.c * std::log(nm));
}

LevelSetPoint project_to_level_set(const StructureParams& prm, const Model& m, const BundlePoint& p, int max_iter,
                                   double tol, bool align) {
  return damped_newton(prm, m, align ? align_fiber(prm, m, p) : p, max_iter, tol, "project_to_level_set", [&](const BundlePoint& q) {
    LevelData ld = level_data(prm, m, q.g, q.coords());
    MatX M = ld.dmu * ld.K;
    Eigen::FullPivLU<MatX> lu(M);
    if (!lu.isInvertible()) return VecX(VecX::Constant(ld.xhat.size(), std::nan("")));
    return VecX(ld.K * lu.solve(VecX(ld.mu - kE1)));
  });
}

LevelSetPoint project_fiber_to_level_set(const StructureParams& prm, const Model& m, const BundlePoint& p,
                                         int max_iter, double tol, bool align) {
  const int d = m.dim();
  return damped_newton(prm, m, align ? align_fiber(prm, m, p) : p, max_iter, tol, "project_fiber_to_level_set", [&](const BundlePoint& q) {
    VecX y = q.coords();
    Vec3d mu = moment_at(prm, m, q.g, y);
    MatX J = moment_jacobian(prm, m, q.g, y).middleCols(d, 4);
    VecX step = VecX::Zero(d + 4);
    step.segment(d, 4) = J.completeOrthogonalDecomposition().solve(VecX(mu - kE1));
    return step;
  });
}

// ---------------------------------------------------------------------------

SliceChart::SliceChart(const StructureParams& prm, const Model& m, const LevelSetPoint& anchor)
    : prm_(prm), m_(&m), center_(anchor), g0_(anchor.bundle_point.g), y0_(anchor.bundle_point.coords()) {
  const int d = m.dim();
  const int D = d + 4;
  MomentGeometry mg = moment_geometry(prm, m, g0_, y0_);
  if (mg.xhat.norm() < 1e-10) throw DegeneratePointError("build_slice: X^ vanishes at the anchor");
  conditions_.resize(6, D);
  conditions_.topRows(3) = mg.dmu;
  for (int a = 0; a < 3; ++a) conditions_.row(3 + a) = mg.dmu.row(a) * mg.ihat[a];
  Eigen::JacobiSVD<MatX> svd(conditions_, Eigen::ComputeFullV);
  const VecX& sv = svd.singularValues();
  int rank = 0;
  for (Eigen::Index k = 0; k < sv.size(); ++k)
    if (sv[k] > 1e-7 * sv[0]) ++rank;
  if (D - rank != d)
    throw DegeneratePointError("build_slice: dim V = " + std::to_string(D - rank) + ", expected " +
                               std::to_string(d));
  MatX N = svd.matrixV().rightCols(D - rank);
  MatX P = N * N.transpose();
  basis_.resize(D, d);
  int found = 0;
  for (int k = 0; k < D && found < d; ++k) {
    VecX w = P.col(k);
    for (int j = 0; j < found; ++j) w -= basis_.col(j).dot(w) * basis_.col(j);
    double nw = w.norm();
    if (nw < 1e-8) continue;
    basis_.col(found++) = w / nw;
  }
  if (found != d) throw DegeneratePointError("build_slice: Gram-Schmidt on V lost rank");
  directions_.resize(D, 3);
  for (int a = 0; a < 3; ++a) directions_.col(a) = mg.ihat[a] * mg.xhat;
}

VecX SliceChart::chart_coords(const VecX& s) const {
  VecX base = y0_ + basis_ * s;
  Vec3d c = Vec3d::Zero();
  double best = std::numeric_limits<double>::infinity();
  double prev = best;
  for (int it = 0; it < 50; ++it) {
    VecX y = base + directions_ * c;
    Vec3d mu = moment_at(prm_, *m_, g0_, y);
    double r = (mu - kE1).norm();
    if (!std::isfinite(r)) break;
    best = std::min(best, r);
    if (r < 1e-14 || (r >= prev && r < 1e-11)) return y;
    prev = r;
    MatX J = moment_jacobian(prm_, *m_, g0_, y) * directions_;
    c -= J.partialPivLu().solve(VecX(mu - kE1));
  }
  throw ProjectionError("SliceChart: slice point did not converge onto P", best);
}

LevelSetPoint SliceChart::identification(const VecX& s) const {
  VecX y = chart_coords(s);
  double r = (moment_at(prm_, *m_, g0_, y) - kE1).norm();
  return {to_bundle_point(y), r, 0};
}

BundlePoint SliceChart::to_bundle_point(const VecX& y) const { return chart_to_point(*m_, g0_, y); }

MatX SliceChart::tangent(const VecX& s) const {
  VecX y = chart_coords(s);
  MatX dmu = moment_jacobian(prm_, *m_, g0_, y);
  MatX Dc = -(dmu * directions_).partialPivLu().solve(MatX(dmu * basis_));
  return basis_ + directions_ * Dc;
}

SliceChart build_slice(const StructureParams& prm, const Model& m, const LevelSetPoint& anchor) {
  return SliceChart(prm, m, anchor);
}

SliceReport slice_report(const SliceChart& slice) {
  SliceReport r;
  r.dim_v = slice.dim();
  r.basis_in_v = max_abs(slice.conditions() * slice.basis());
  MomentGeometry mg =
      moment_geometry(slice.params(), slice.model(), slice.chart_center(), slice.center().bundle_point.coords());
  MatX S(mg.D, slice.dim() + 1);
  S.leftCols(slice.dim()) = slice.basis();
  S.col(slice.dim()) = mg.xhat.normalized();
  Eigen::JacobiSVD<MatX> svd(S);
  r.spans_tp = svd.singularValues().minCoeff();
  MatX P = projector_v(mg);
  for (int a = 0; a < 3; ++a) r.projector_invariance = std::max(r.projector_invariance, max_abs(P * mg.ihat[a] * P - mg.ihat[a] * P));
  return r;
}

// ---------------------------------------------------------------------------

QuotientStructure induced_structure(const SliceChart& slice, const VecX& s) {
  const int q = slice.dim();
  VecX y = slice.chart_coords(s);
  MomentGeometry mg = moment_geometry(slice.params(), slice.model(), slice.chart_center(), y);
  MatX DPhi = slice.tangent(s);
  MatX M(mg.D, q + 1);
  M.leftCols(q) = DPhi;
  M.col(q) = mg.xhat;
  auto qr = M.colPivHouseholderQr();
  MatX P = projector_v(mg);
  QuotientStructure out;
  for (int a = 0; a < 3; ++a) {
    MatX R = P * mg.ihat[a] * DPhi;
    MatX W = qr.solve(R);
    out.lift_residual = std::max(out.lift_residual, max_abs(M * W - R));
    out.I[a] = W.topRows(q);
    out.Theta[a] = DPhi.transpose() * mg.dtheta_hat[a] * DPhi;
  }
  VecX z1 = mg.basis[mg.d];
  VecX wz = qr.solve(z1);
  out.lift_residual = std::max(out.lift_residual, max_abs(M * wz - z1));
  out.Z = wz.head(q);
  out.z_tangency = (mg.dmu * z1).norm();
  return out;
}

QuotientStructure induced_structure(const SliceChart& slice) { return induced_structure(slice, VecX::Zero(slice.dim())); }

QuotientJet induced_jet(const SliceChart& slice, const VecX& s, double h) {
  QuotientJet jet;
  jet.value = induced_structure(slice, s);
  for (int k = 0; k < slice.dim(); ++k) {
    VecX e = VecX::Unit(slice.dim(), k) * h;
    QuotientStructure p = induced_structure(slice, s + e), m = induced_structure(slice, s - e);
    QuotientStructure dk;
    for (int a = 0; a < 3; ++a) {
      dk.I[a] = (p.I[a] - m.I[a]) / (2.0 * h);
      dk.Theta[a] = (p.Theta[a] - m.Theta[a]) / (2.0 * h);
    }
    dk.Z = (p.Z - m.Z) / (2.0 * h);
    jet.partial.push_back(std::move(dk));
  }
  return jet;
}

QuotientReport check_quotient(const QuotientJet& jet) {
  const QuotientStructure& v = jet.value;
  const int q = static_cast<int>(v.Z.size());
  QuotientReport r;
  r.relations = frame_relation_residual(Frame<double>{v.I[0], v.I[1], v.I[2]});

  auto dir_i = [&](int a, const VecX& w) {
    MatX out = MatX::Zero(q, q);
    for (int k = 0; k < q; ++k) out += w[k] * jet.partial[k].I[a];
    return out;
  };
  auto dir_theta = [&](int a, const VecX& w) {
    MatX out = MatX::Zero(q, q);
    for (int k = 0; k < q; ++k) out += w[k] * jet.partial[k].Theta[a];
    return out;
  };
  MatX DZ(q, q);
  for (int k = 0; k < q; ++k) DZ.col(k) = jet.partial[k].Z;

  // N(U, V) = [U, V] + I[IU, V] + I[U, IV] - [IU, IV] for constant U, V.
  for (int a = 0; a < 3; ++a) {
    const MatX& I = v.I[a];
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) {
        VecX U = VecX::Unit(q, i), V = VecX::Unit(q, j);
        VecX IU = I * U, IV = I * V;
        VecX N = I * (dir_i(a, U) * V - dir_i(a, V) * U) - dir_i(a, IU) * V + dir_i(a, IV) * U;
        r.nijenhuis = std::max(r.nijenhuis, N.cwiseAbs().maxCoeff());
      }
  }

  std::array<MatX, 3> LI, LT;
  for (int a = 0; a < 3; ++a) {
    LI[a] = dir_i(a, v.Z) - (DZ * v.I[a] - v.I[a] * DZ);
    LT[a] = dir_theta(a, v.Z) + DZ.transpose() * v.Theta[a] + v.Theta[a] * DZ;
  }
  r.lie_z_i = Vec3d(max_abs(LI[0]), max_abs(LI[1] - 2.0 * kEps * v.I[2]), max_abs(LI[2] + 2.0 * kEps * v.I[1]));
  r.lie_z_theta = Vec3d(max_abs(LT[0]), max_abs(LT[1] - 2.0 * kEps * v.Theta[2]),
                        max_abs(LT[2] + 2.0 * kEps * v.Theta[1]));

  for (int a = 0; a < 3; ++a)
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j)
        for (int k = 0; k < q; ++k) {
          double dt = jet.partial[i].Theta[a](j, k) + jet.partial[j].Theta[a](k, i) + jet.partial[k].Theta[a](i, j);
          r.closedness = std::max(r.closedness, std::abs(dt));
        }

  std::array<MatX, 3> B;
  for (int a = 0; a < 3; ++a) {
    B[a] = v.Theta[a] * v.I[a];
    r.max_abs_theta = std::max(r.max_abs_theta, max_abs(v.Theta[a]));
  }
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) r.invariant_spread = std::max(r.invariant_spread, max_abs(B[a] - B[b]));
  r.symmetric_defect = max_abs(B[0] - B[0].transpose());
  MatX sym = 0.5 * (B[0] + B[0].transpose());
  Eigen::SelfAdjointEigenSolver<MatX> es(sym);
  r.min_eigenvalue = es.eigenvalues().minCoeff();
  return r;
}

QuotientReport check_theta_prime(const SliceChart& slice, const std::vector<VecX>& samples, double h) {
  QuotientReport worst;
  worst.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (const VecX& s : samples) {
    QuotientReport r = check_quotient(induced_jet(slice, s, h));
    worst.relations = std::max(worst.relations, r.relations);
    worst.nijenhuis = std::max(worst.nijenhuis, r.nijenhuis);
    worst.lie_z_i = worst.lie_z_i.cwiseMax(r.lie_z_i);
    worst.lie_z_theta = worst.lie_z_theta.cwiseMax(r.lie_z_theta);
    worst.closedness = std::max(worst.closedness, r.closedness);
    worst.invariant_spread = std::max(worst.invariant_spread, r.invariant_spread);
    worst.symmetric_defect = std::max(worst.symmetric_defect, r.symmetric_defect);
    worst.min_eigenvalue = std::min(worst.min_eigenvalue, r.min_eigenvalue);
    worst.max_abs_theta = std::max(worst.max_abs_theta, r.max_abs_theta);
  }
  return worst;
}

double single_circle_spread(const StructureParams& prm, const Model& m, const std::vector<BundlePoint>& seeds) {
  std::vector<LevelSetPoint> pts;
  for (const BundlePoint& p : seeds) pts.push_back(project_fiber_to_level_set(prm, m, p));
  double spread = 0.0;
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = i + 1; j < pts.size(); ++j) {
      const BundlePoint &a = pts[i].bundle_point, &b = pts[j].bundle_point;
      double dist = (a.g.transpose() * b.g * kE1 - kE1).norm() + std::abs(a.u - b.u) + (a.x - b.x).norm();
      spread = std::max(spread, dist);
    }
  return spread;
}

// ---------------------------------------------------------------------------

TwistData twist_data(const StructureParams& prm, const Model& m, const std::vector<VecX>& base_points) {
  if (prm.A <= 0.0)
    throw ProjectionError("twist_data: the section g e1 = v^, f |v| = 1 requires A > 0",
                          std::numeric_limits<double>::infinity());
  const int d = m.dim();
  const Mat3d id = Mat3d::Identity();
  auto section = [&](const auto& z) { return twist_section(m, prm, z); };
  auto a_of = [&](const auto& z) {
    using T = typename std::decay_t<decltype(z)>::Scalar;
    Vec<T> y = twist_section(m, prm, z);
    BundleGeom<T> G(m, prm.c, id, y);
    Vec<T> out(1);
    out[0] = G.theta(natural_lift_raw(m, id, y))[0];
    return out;
  };
  auto f_of = [&](const auto& z) {
    using T = typename std::decay_t<decltype(z)>::Scalar;
    Vec<T> y = twist_section(m, prm, z);
    Mat<T> Ds = jacobian(section, z);
    Mat<T> W = omega_t<T>(m, prm.c, id, y)[0];
    return flatten_rowmajor(Mat<T>(Ds.transpose() * W * Ds));
  };
  auto X = [&m](const auto& z) { return m.field(z); };

  TwistData out;
  for (const VecX& x : base_points) {
    TwistSample ts;
    ts.x = x;
    VecX y = section(x);
    if (!finite(y)) throw ProjectionError("twist_data: section undefined (theta(X^) = 0)", std::numeric_limits<double>::infinity());
    ts.F = unflatten_rowmajor(VecX(f_of(x)), d, d);
    ts.a = a_of(x)[0];
    VecX da = jacobian(a_of, x).row(0).transpose();
    VecX xv = m.field(x);
    ts.residual = (da + ts.F.transpose() * xv).cwiseAbs().maxCoeff();
    VecX lf = lie_derivative_tensor(X, make_tensor_field(0, 2, d, f_of), x);
    ts.lie_f = lf.cwiseAbs().maxCoeff();
    ts.level_residual = (moment_at(prm, m, id, y) - kE1).norm();
    out.max_residual = std::max(out.max_residual, ts.residual);
    out.max_lie_f = std::max(out.max_lie_f, ts.lie_f);
    out.max_abs_f = std::max(out.max_abs_f, max_abs(ts.F));
    out.max_a_deviation = std::max(out.max_a_deviation, std::abs(ts.a - 1.0));
    out.max_level_residual = std::max(out.max_level_residual, ts.level_residual);
    out.samples.push_back(std::move(ts));
  }
  return out;
}

// ---------------------------------------------------------------------------

CoveringReport covering_consistency(const SliceChart& slice, double h) {
  const Model& m = slice.model();
  const int d = m.dim();
  const Mat3d g0 = slice.chart_center();
  const BundlePoint& c = slice.center().bundle_point;
  // Space-frame rotation rate of the fiber along X^: g' = hat(w) g, w = g0 (2 a').
  VecX xl = natural_lift_raw(m, g0, c.coords());
  Vec3d w = g0 * (2.0 * xl.segment<3>(d));
  const double rate = w[0];
  if (std::abs(rate) < 1e-10) throw DegeneratePointError("covering_consistency: fiber does not rotate about e1");
  auto K = [&](const VecX& s) {
    BundlePoint p = slice.to_bundle_point(slice.chart_coords(s));
    VecX ys = twist_section(m, slice.params(), p.x);
    Mat3d rel = p.g * so3_exp(Vec3d(2.0 * ys.segment<3>(d))).transpose();
    double angle = std::atan2(rel(2, 1), rel(1, 1));
    return flow([&m](const auto& z) { return m.field(z); }, m.chart(), ChartPoint(m.chart(), p.x), -angle / rate,
                m.exact_flow())
        .x;
  };
  const int q = slice.dim();
  MatX DK(d, q);
  for (int k = 0; k < q; ++k) {
    VecX e = VecX::Unit(q, k) * h;
    DK.col(k) = (K(e) - K(-e)) / (2.0 * h);
  }
  CoveringReport r;
  VecX k0 = K(VecX::Zero(q));
  r.base_offset = (k0 - c.x).norm();
  Frame<double> I = m.frame(k0);
  QuotientStructure qs = induced_structure(slice);
  for (int a = 0; a < 3; ++a) r.residual = std::max(r.residual, max_abs(DK * qs.I[a] - I[a] * DK));
  Eigen::JacobiSVD<MatX> svd(DK);
  r.min_singular = svd.singularValues().minCoeff();
  return r;
}

}  // namespace hqc
