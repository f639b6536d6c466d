#include <cmath>

#include "doctest.h"
#include "hqc/models.hpp"
#include "hqc/reduction.hpp"

using namespace hqc;

namespace {

ModelPtr hopf_model(int n) { return hopf(n, 2.0, Quat<double>(0.6, 0.0, 0.8, 0.0)); }

LevelSetPoint sample_level_point(const StructureParams& prm, const Model& m, Sampler& s) {
  return project_to_level_set(prm, m, s.bundle_point(m), 50, 1e-12, true);
}

double mu_residual(const StructureParams& prm, const Model& m, const BundlePoint& p) {
  return (moment(prm, m, p).triple - Vec3d::UnitX()).norm();
}

Mat3d rotation_about_e1(double angle) { return so3_exp(Vec3d(angle, 0.0, 0.0)); }

}  // namespace

TEST_CASE("project_to_level_set: Hopf normalization is already on P") {
  auto m = hopf_model(1);
  for (double c : {1.0, -1.0, -8.0})
    for (double A : {1.0, 2.5}) {
      StructureParams prm(c, A);
      Sampler s(11);
      for (int k = 0; k < 5; ++k) {
        VecX x = s.base_point(*m);
        double u = -0.5 * c * std::log(A);  // r = A^(-c/2)
        LevelSetPoint lp = project_to_level_set(prm, *m, BundlePoint(x, Mat3d::Identity(), u));
        CHECK(lp.iterations == 0);
        CHECK(lp.residual < 1e-12);
        // Rotations about e1 fix the level.
        LevelSetPoint lq = project_to_level_set(prm, *m, BundlePoint(x, rotation_about_e1(0.3 + k), u));
        CHECK(lq.iterations == 0);
        CHECK(lq.residual < 1e-12);
      }
    }
}

TEST_CASE("project_to_level_set: quadratic convergence from nearby starts") {
  std::vector<ModelPtr> models = {flat_hn(1), hopf_model(1), hpn(1), hpn(2)};
  for (const ModelPtr& m : models)
    for (double c : {1.0, -4.0 * (m->n() + 1)}) {
      StructureParams prm(c);
      Sampler s(12);
      for (int k = 0; k < 4; ++k) {
        LevelSetPoint on = sample_level_point(prm, *m, s);
        const BundlePoint& q = on.bundle_point;
        VecX dx(m->dim());
        for (int i = 0; i < m->dim(); ++i) dx[i] = 1e-2 * s.normal();
        Vec3d da(1e-2 * s.normal(), 1e-2 * s.normal(), 1e-2 * s.normal());
        BundlePoint start(q.x + dx, q.g * so3_exp(da), q.u + 1e-2 * s.normal());
        LevelSetPoint lp = project_to_level_set(prm, *m, start);
        CHECK(lp.iterations <= 6);
        CHECK(lp.residual < 1e-12);
        CHECK(mu_residual(prm, *m, lp.bundle_point) < 1e-9);
      }
    }
}

TEST_CASE("project_to_level_set: arbitrary starts with fiber alignment; stagnation error") {
  std::vector<ModelPtr> models = {flat_hn(1), hopf_model(1), hpn(1), deformed_flat(1)};
  for (const ModelPtr& m : models) {
    StructureParams prm(1.0);
    Sampler s(13);
    for (int k = 0; k < 10; ++k) {
      LevelSetPoint lp = project_to_level_set(prm, *m, s.bundle_point(*m), 50, 1e-12, true);
      CHECK(mu_residual(prm, *m, lp.bundle_point) < 1e-9);
    }
  }
  // mu = -e1 admits no local Newton path to e1 without crossing mu = 0.
  auto m = hopf_model(1);
  StructureParams prm(1.0);
  BundlePoint antipodal(Sampler(14).base_point(*m), so3_exp(Vec3d(0.0, 0.0, M_PI)), 0.0);
  CHECK(std::abs(moment(prm, *m, antipodal).triple[0] + 1.0) < 1e-12);
  CHECK_THROWS_AS(project_to_level_set(prm, *m, antipodal), ProjectionError);
  CHECK(project_to_level_set(prm, *m, antipodal, 50, 1e-12, true).residual < 1e-12);
}

TEST_CASE("build_slice: dim V = 4n, basis in V, decomposition invariant under I^") {
  std::vector<ModelPtr> models = {flat_hn(1), flat_hn(2), hopf_model(1), hpn(1), hpn(2)};
  for (const ModelPtr& m : models)
    for (double c : {1.0, -1.0, -4.0 * (m->n() + 1)}) {
      StructureParams prm(c);
      Sampler s(15);
      SliceChart sl = build_slice(prm, *m, sample_level_point(prm, *m, s));
      SliceReport r = slice_report(sl);
      CHECK(r.dim_v == m->dim());
      CHECK(r.basis_in_v < 1e-8);
      CHECK(r.spans_tp > 1e-3);
      CHECK(r.projector_invariance < 1e-8);
      // Rank of the six conditions by an independent decomposition.
      Eigen::FullPivLU<MatX> lu(sl.conditions());
      lu.setThreshold(1e-7);
      CHECK(lu.rank() == 4);
      // Slice points lie on P.
      VecX sv = VecX::Constant(sl.dim(), 0.05);
      LevelSetPoint lp = sl.identification(sv);
      CHECK(lp.residual < 1e-9);
      CHECK(mu_residual(prm, *m, lp.bundle_point) < 1e-9);
      // D Phi is tangent to P and reduces to the basis at the center.
      MomentGeometry mg = moment_geometry(prm, *m, sl.chart_center(), sl.chart_coords(sv));
      CHECK((mg.dmu * sl.tangent(sv)).cwiseAbs().maxCoeff() < 1e-9);
      CHECK((sl.tangent(VecX::Zero(sl.dim())) - sl.basis()).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("build_slice: CR failure on the deformed model leaves V too small") {
  auto m = deformed_flat(1);
  StructureParams prm(1.0);
  Sampler s(16);
  LevelSetPoint lp = sample_level_point(prm, *m, s);
  CHECK_THROWS_AS(build_slice(prm, *m, lp), DegeneratePointError);
}

TEST_CASE("induced_structure: relations, Nijenhuis, Z and Theta' identities") {
  std::vector<ModelPtr> models = {flat_hn(1), hopf_model(1), hpn(1), hpn(2)};
  for (const ModelPtr& m : models)
    for (double c : {1.0, -4.0 * (m->n() + 1)}) {
      StructureParams prm(c);
      Sampler s(17);
      SliceChart sl = build_slice(prm, *m, sample_level_point(prm, *m, s));
      std::vector<VecX> pts = {VecX::Zero(sl.dim()), VecX::Constant(sl.dim(), 0.03)};
      for (const VecX& sv : pts) {
        QuotientJet jet = induced_jet(sl, sv);
        QuotientReport r = check_quotient(jet);
        CHECK(r.relations < 1e-9);
        CHECK(jet.value.lift_residual < 1e-9);
        CHECK(jet.value.z_tangency < 1e-9);
        CHECK(r.nijenhuis < 1e-5);
        CHECK(r.lie_z_i.maxCoeff() < 1e-5);
        CHECK(r.lie_z_theta.maxCoeff() < 1e-5);
        CHECK(r.closedness < 1e-6);
        CHECK(r.invariant_spread < 1e-6);
        CHECK(r.symmetric_defect < 1e-6);
      }
    }
}

TEST_CASE("Theta': vanishes where Omega does; definite on HP^n at c = 1") {
  // Flat connection: Omega = 0, so G restricted to V and Theta' vanish.
  for (const ModelPtr& m : std::vector<ModelPtr>{flat_hn(1), hopf_model(1)}) {
    StructureParams prm(1.0);
    Sampler s(18);
    SliceChart sl = build_slice(prm, *m, sample_level_point(prm, *m, s));
    QuotientStructure q = induced_structure(sl);
    for (int a = 0; a < 3; ++a) CHECK(q.Theta[a].cwiseAbs().maxCoeff() < 1e-12);
  }
  // HP^n, c = 1: Theta'(., I' .) = -G on V with G^1 the Euclidean metric upstairs.
  for (int n : {1, 2}) {
    auto m = hpn(n);
    StructureParams prm(1.0);
    Sampler s(19);
    for (int k = 0; k < 3; ++k) {
      LevelSetPoint lp = sample_level_point(prm, *m, s);
      SliceChart sl = build_slice(prm, *m, lp);
      QuotientStructure q = induced_structure(sl);
      MomentGeometry mg = moment_geometry(prm, *m, sl.chart_center(), lp.bundle_point.coords());
      MatX gv = sl.basis().transpose() * mg.G[0] * sl.basis();
      MatX form = q.Theta[0] * q.I[0];
      CHECK((form + gv).cwiseAbs().maxCoeff() < 1e-9);
      Eigen::SelfAdjointEigenSolver<MatX> es(MatX(-0.5 * (form + form.transpose())));
      CHECK(es.eigenvalues().minCoeff() > 1e-3);
    }
  }
}

TEST_CASE("covering map: induced structure matches the base structure on the Hopf model") {
  for (int n : {1, 2}) {
    auto m = hopf_model(n);
    for (double c : {1.0, -4.0 * (n + 1)}) {
      StructureParams prm(c);
      Sampler s(20);
      for (int k = 0; k < (n == 1 ? 10 : 3); ++k) {
        SliceChart sl = build_slice(prm, *m, sample_level_point(prm, *m, s));
        CoveringReport r = covering_consistency(sl);
        CHECK(sl.dim() == 4 * n);
        CHECK(r.residual < 1e-6);
        CHECK(r.min_singular > 1e-3);
      }
    }
  }
}

TEST_CASE("twist_data: flat and Hopf give F = 0, a = 1; HP^n has F != 0 with da = -iota_X F") {
  for (const ModelPtr& m : std::vector<ModelPtr>{flat_hn(1), flat_hn(2), hopf_model(1)}) {
    StructureParams prm(1.0);
    Sampler s(21);
    std::vector<VecX> xs;
    for (int k = 0; k < 5; ++k) xs.push_back(s.base_point(*m));
    TwistData td = twist_data(prm, *m, xs);
    CHECK(td.max_abs_f < 1e-9);
    CHECK(td.max_a_deviation < 1e-9);
    CHECK(td.max_residual < 1e-9);
    CHECK(td.max_level_residual < 1e-12);
  }
  for (const ModelPtr& m : std::vector<ModelPtr>{hpn(1), hpn(2), deformed_flat(1)})
    for (double c : {1.0, -1.0}) {
      StructureParams prm(c);
      Sampler s(22);
      std::vector<VecX> xs;
      for (int k = 0; k < 4; ++k) xs.push_back(s.base_point(*m));
      TwistData td = twist_data(prm, *m, xs);
      CHECK(td.max_abs_f > 1e-2);
      CHECK(td.max_residual < 1e-6);
      CHECK(td.max_lie_f < 1e-6);
      CHECK(td.max_level_residual < 1e-12);
      // a = theta_1(X^) o s equals 1 / f on the section, i.e. |v| for A = 1.
      for (const TwistSample& t : td.samples) {
        VecX y = twist_section(*m, prm, t.x);
        CHECK(std::abs(t.a - std::exp(-2.0 * y[m->dim() + 3] / c)) < 1e-12);
        // F is a 2-form.
        CHECK((t.F + t.F.transpose()).cwiseAbs().maxCoeff() < 1e-12);
      }
    }
  StructureParams negative(1.0, -1.0);
  CHECK_THROWS_AS(twist_data(negative, *flat_hn(1), {VecX::Constant(4, 0.5)}), ProjectionError);
}

TEST_CASE("level set over a base point is a single U(1)_{Z1} circle") {
  std::vector<ModelPtr> models = {flat_hn(1), hopf_model(1), hpn(1), hpn(2), deformed_flat(1)};
  for (const ModelPtr& m : models)
    for (double c : {1.0, -1.0}) {
      StructureParams prm(c);
      Sampler s(23);
      VecX x = s.base_point(*m);
      std::vector<BundlePoint> seeds;
      for (int k = 0; k < 8; ++k) seeds.emplace_back(x, s.rotation(), s.uniform(-1.0, 1.0));
      CHECK(single_circle_spread(prm, *m, seeds) < 1e-6);
    }
}
