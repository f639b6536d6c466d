#include "hqc/verify.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "hqc/quaternionic.hpp"
#include "hqc/swann.hpp"

namespace hqc {

namespace {

constexpr const char* kSchemaVersion = "1.0";
constexpr const char* kVersion = "1.0.0";
constexpr const char* kEngineMode = "forward-ad (nested dual numbers), closed-form lift";

const std::vector<std::string> kSuites = {"structure", "swann", "moment", "reduction", "twist"};

std::vector<CheckInfo> make_catalog() {
  return {
      {"run.model_build", "run", "plumbing", "model construction and chart validation", 0.0},
      {"structure.frame_relations", "structure",
       "I_alpha^2 = -id and I_1 I_2 = I_3",
       "max |I_a^2 + id|, |I_a I_b - I_c| over sampled base points", 1e-8},
      {"structure.torsion", "structure", "nabla is torsion-free",
       "max |Gamma^k_ij - Gamma^k_ji| over sampled base points", 1e-8},
      {"structure.q_preservation", "structure", "nabla Gamma(Q) is contained in Gamma(Q)",
       "max over a, i of the Q-complement of nabla_i I_a", 1e-8},
      {"structure.sxi_trace", "structure", "Tr S^xi_X = 4(n+1) xi(X)",
       "max |Tr S^xi_X - 4(n+1) xi(X)| over random xi, X", 1e-8},
      {"structure.omega_trace_vs_b", "structure",
       "Omega_alpha = -(1/2n) Tr(I_alpha R) agrees with Omega_alpha(X, Y) = 2(B(X, I_alpha Y) - B(Y, I_alpha X))",
       "max |Omega^trace_a - Omega^B_a|", 1e-7},
      {"structure.omega_ricci", "structure",
       "Omega_alpha(Y, I_alpha Z) = (Ric^a(I_alpha Y, I_alpha Z) - Ric^a(Y, Z))/(2(n+1)) - (Ric^s(I_alpha Y, I_alpha Z) + "
       "Ric^s(Y, Z))/(2n) + 2/(n(n+2)) Pi_h Ric^s(Y, Z)",
       "max |Omega_a I_a - Ricci side|", 1e-6},
      {"structure.affine", "structure", "L_X nabla = 0 iff 2 (Ric)^a(X, .) = d(Tr nabla X)",
       "max(|L_X nabla|, |2 Ric^a(X, .) - d Tr(nabla X)|)", 1e-7},
      {"swann.ihat_relations", "swann", "I^_alpha^2 = -id, I^_1 I^_2 = I^_3",
       "max quaternionic relation residual of I^ at sampled bundle points", 1e-9},
      {"swann.lie_relations", "swann",
       "L_{Z_0} I^_alpha = 0, L_{Z_alpha} I^_alpha = 0, L_{Z_alpha} I^_beta = 2 eps I^_gamma",
       "max residual of the Lie-derivative relations along fundamental fields", 1e-6},
      {"swann.integrability", "swann",
       "I^_alpha integrable iff c = -4(n+1) or (Ric)^a is Q-hermitian",
       "max |N^alpha| over canonical field pairs; verdict (< 1e-6 vs > 1e-3) compared with the predicate", 1e-6},
      {"swann.connection_dependence", "swann",
       "I^ does not depend on the quaternionic connection iff c = -4(n+1); otherwise I^1_alpha Y^h - I^2_alpha Y^h = "
       "eps (1 + 4(n+1)/c)(xi(Y) Z_alpha + xi(I_alpha Y) Z_0^c)",
       "max |I^(nabla) - I^(nabla + S^xi) - closed form| on horizontal lifts; at c = -4(n+1) also max |difference| on "
       "random tangents",
       1e-7},
      {"moment.fiber_normalization", "moment", "mu^c(x, id, r) = A r^(2/c) (1, 0, 0)",
       "max |mu(x, id, r) - A r^(2/c) e_1| (models with X^ rotating about e_1)", 1e-10},
      {"moment.equivariance", "moment", "mu(x, g h, r) = h^T mu(x, g, r)",
       "max |mu(x, g h, r) - h^T mu(x, g, r)| over random h", 1e-8},
      {"moment.cr", "moment", "d mu_1 o I^_1 = d mu_2 o I^_2 = d mu_3 o I^_3 when Ric(X, Y) = Ric(IX, IY)",
       "max |d mu_a o I^_a - d mu_b o I^_b| over the canonical basis; without the Ricci hypothesis the residual "
       "must exceed 1e-3 (EXPECTED-FAIL)",
       1e-6},
      {"moment.dmu_contraction", "moment", "d mu_alpha = -iota_{X^} d theta^_alpha",
       "max |d mu_a + iota_X^ d theta^_a| over the canonical basis", 1e-8},
      {"moment.dtheta_eq_g", "moment", "d theta^_alpha = G_alpha(., I^_alpha .)",
       "max |d theta^_a(Y, Z) - G_a(Y, I^_a Z)| over the canonical field basis", 1e-6},
      {"moment.dtheta_fiber_values", "moment",
       "d theta^_alpha(Z_0^c, Z_alpha) = G_alpha(Z_0^c, I^_alpha Z_alpha) = 2 eps A r^(2/c), G_alpha(Z_alpha, I^_alpha "
       "Z_0^c) = d theta^_alpha(Z_beta, Z_gamma) = G_alpha(Z_beta, I^_alpha Z_gamma) = -2 eps A r^(2/c)",
       "max deviation of the five closed-form fiber values", 1e-10},
      {"moment.transversality", "moment",
       "(d mu_alpha o I^_alpha)(X^) = G_alpha(X^, X^) != 0; Ric(X, X) + 4(n+2) <theta, theta>(X^, X^) = 4(n+2) when "
       "Ric = 0",
       "max of the identity residual and, for flat connections, |expression - 4(n+2)|; fails if min |G(X^, X^)| < 1e-8",
       1e-6},
      {"moment.omega_contraction", "moment", "Omega_alpha(X^, I^_alpha X^) = -eps Ric(X, X)/(2(n+2))",
       "max residual of the contraction identity", 1e-6},
      {"moment.lift_brackets", "moment", "[X^, Z_a] = 0 for the natural lift",
       "max |[X^, Z_a]|, a = 0..3", 1e-6},
      {"moment.lift_invariance", "moment", "L_{X^} theta_alpha = 0, L_{X^} theta0bar = 0, L_{X^} I^_alpha = 0, L_{X^} d theta^_alpha = 0",
       "max of the Lie-derivative residuals along X^", 1e-6},
      {"moment.fundamental_lie", "moment", "L_{Z_alpha} theta_beta = 2 eps theta_gamma (same for theta^)",
       "max residual of the equivariance of theta and theta^", 1e-7},
      {"reduction.level_set", "reduction", "P = (mu^c)^-1((1, 0, 0))",
       "max |mu - e_1| after Newton projection of the anchors", 1e-10},
      {"reduction.slice", "reduction",
       "T M^|P = V + span{X^, I^_1 X^, I^_2 X^, I^_3 X^}, V invariant under I^_alpha",
       "dim V = 4n; max(|conditions on basis|, |pr_V I^_a pr_V - I^_a pr_V|)", 1e-8},
      {"reduction.quotient_relations", "reduction", "I'_alpha satisfy the quaternionic relations",
       "max quaternionic relation residual of I' on slice samples", 1e-8},
      {"reduction.nijenhuis", "reduction", "I'_alpha are integrable",
       "max |N_{I'_a}| on slice basis pairs (central differences)", 1e-5},
      {"reduction.lie_z_structure", "reduction", "L_Z I'_1 = 0, L_Z I'_2 = 2 eps I'_3, L_Z I'_3 = -2 eps I'_2",
       "max of the three residuals", 1e-5},
      {"reduction.theta_closed", "reduction", "d Theta'_alpha = 0", "max |d Theta'_a| on slice samples", 1e-6},
      {"reduction.theta_lie_z", "reduction",
       "L_Z Theta'_1 = 0, L_Z Theta'_2 = 2 eps Theta'_3, L_Z Theta'_3 = -2 eps Theta'_2",
       "max of the three residuals", 1e-5},
      {"reduction.invariant_condition", "reduction",
       "Theta'_alpha(., I'_alpha .) is independent of alpha",
       "max_{a,b} |Theta'_a(., I'_a .) - Theta'_b(., I'_b .)| on slice samples", 1e-6},
      {"reduction.definite", "reduction", "for c = 1 the quotient carries the metric -Theta'_1(., I'_1 .), positive-definite",
       "min eigenvalue of the symmetric part of -Theta'_1 I'_1 at the slice center (c = 1 only); passes if > tolerance",
       1e-8},
      {"reduction.covering", "reduction",
       "the quotient of the Hopf manifold is locally the base: k^* I'_alpha = I_alpha",
       "max |DK I'_a - I_a DK| with K(y) = Fl^X_{-angle/w}(x), at the slice center of each base point", 1e-6},
      {"reduction.twist", "twist", "M' is the twist of M by (X, F, a) with da = -iota_X F",
       "max |da + iota_X F| over base points (F = s^* Omega_1, a = theta_1(X^) o s)", 1e-6},
      {"reduction.twist_lie", "twist", "L_X F = 0", "max |L_X F| over base points", 1e-6},
      {"reduction.twist_trivial", "twist", "for the flat and Hopf models the twist data are (X, F = 0, a = 1)",
       "max(|F|, |a - 1|) over base points", 1e-9},
      {"reduction.single_circle", "twist", "P is a principal U(1)-bundle over M' whose fibers are Z_1-orbits",
       "max distance between level-set points over one base point modulo the Z_1 circle", 1e-8},
  };
}

double max_abs(const MatX& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// FNV-1a, stable across platforms.
uint64_t fnv1a(const std::string& s, uint64_t h = 1469598103934665603ull) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string model_label(const ModelConfig& mc) { return mc.name + "(n=" + std::to_string(mc.n) + ")"; }

struct Outcome {
  double residual = 0.0;
  std::optional<Status> status;  // overrides the comparator
  std::string detail;
};

class Runner {
 public:
  Runner(const RunConfig& cfg, std::vector<CheckEntry>& out) : cfg_(cfg), out_(out) {}

  void run_model(const ModelConfig& mc) {
    ModelPtr m;
    try {
      m = build_model(mc);
    } catch (const std::exception& e) {
      CheckEntry en = blank("run.model_build", mc, std::nullopt);
      en.status = Status::Error;
      en.residual = std::numeric_limits<double>::quiet_NaN();
      en.detail = e.what();
      out_.push_back(en);
      return;
    }
    mc_ = &mc;
    m_ = m.get();
    if (enabled("structure")) structure_suite();
    std::vector<double> cs = cfg_.c_values;
    if (cs.empty()) cs = {-4.0 * (mc.n + 1), 1.0, -1.0};
    for (double c : cs) {
      if (enabled("swann")) swann_suite(c);
      if (enabled("moment")) moment_suite(c);
      if (enabled("reduction")) reduction_suite(c);
      if (enabled("twist")) twist_suite(c);
    }
  }

 private:
  const RunConfig& cfg_;
  std::vector<CheckEntry>& out_;
  const ModelConfig* mc_ = nullptr;
  const Model* m_ = nullptr;

  bool enabled(const std::string& suite) const { return cfg_.suites.count(suite) > 0; }
  bool fiber_aligned() const { return mc_->name == "flat" || mc_->name == "hopf"; }
  int capped(int cap) const { return std::max(1, std::min(cfg_.samples, cap)); }

  double tolerance(const CheckInfo& info) const {
    auto it = cfg_.tolerances.find(info.id);
    return it == cfg_.tolerances.end() ? info.tolerance : it->second;
  }

  Sampler sampler(const std::string& id, std::optional<double> c) const {
    uint64_t h = fnv1a(id, fnv1a(model_label(*mc_)));
    h = fnv1a(c ? format_double(*c) : "-", h);
    return Sampler(cfg_.seed ^ h);
  }

  CheckEntry blank(const std::string& id, const ModelConfig& mc, std::optional<double> c) const {
    const CheckInfo& info = find_check(id);
    CheckEntry e;
    e.id = id;
    e.suite = info.suite;
    e.anchor = info.anchor;
    e.model = mc.name;
    e.n = mc.n;
    e.c = c;
    e.tolerance = tolerance(info);
    e.comparator = id == "reduction.definite" ? ">" : "<=";
    return e;
  }

  void record(const std::string& id, std::optional<double> c, const std::function<Outcome()>& body) {
    CheckEntry e = blank(id, *mc_, c);
    try {
      Outcome o = body();
      e.residual = o.residual;
      e.detail = o.detail;
      if (o.status) {
        e.status = *o.status;
      } else if (!std::isfinite(o.residual)) {
        e.status = Status::Fail;
      } else if (e.comparator == ">") {
        e.status = o.residual > e.tolerance ? Status::Pass : Status::Fail;
      } else {
        e.status = o.residual <= e.tolerance ? Status::Pass : Status::Fail;
      }
    } catch (const std::exception& ex) {
      e.status = Status::Error;
      e.residual = std::numeric_limits<double>::quiet_NaN();
      e.detail = ex.what();
    }
    out_.push_back(e);
  }

  void skip(const std::string& id, std::optional<double> c, const std::string& why) {
    CheckEntry e = blank(id, *mc_, c);
    e.status = Status::Skipped;
    e.residual = std::numeric_limits<double>::quiet_NaN();
    e.detail = why;
    out_.push_back(e);
  }

  std::vector<VecX> base_points(const std::string& id, int count, std::optional<double> c = std::nullopt) const {
    Sampler s = sampler(id, c);
    std::vector<VecX> pts;
    for (int k = 0; k < count; ++k) pts.push_back(s.base_point(*m_));
    return pts;
  }
  std::vector<BundlePoint> bundle_points(const std::string& id, int count, std::optional<double> c) const {
    Sampler s = sampler(id, c);
    std::vector<BundlePoint> pts;
    for (int k = 0; k < count; ++k) pts.push_back(s.bundle_point(*m_));
    return pts;
  }

  // ------------------------------------------------------------------------
  void structure_suite() {
    const Model& m = *m_;
    const int n = m.n(), d = m.dim();
    record("structure.frame_relations", std::nullopt, [&] {
      double r = 0.0;
      for (const VecX& x : base_points("structure.frame_relations", cfg_.samples))
        r = std::max(r, frame_relation_residual(m.frame(x)));
      return Outcome{r, {}, ""};
    });
    record("structure.torsion", std::nullopt, [&] {
      double r = 0.0;
      for (const VecX& x : base_points("structure.torsion", cfg_.samples)) r = std::max(r, torsion_residual(m, x));
      return Outcome{r, {}, ""};
    });
    record("structure.q_preservation", std::nullopt, [&] {
      double r = 0.0;
      for (const VecX& x : base_points("structure.q_preservation", cfg_.samples))
        r = std::max(r, q_preservation_residual(m, x));
      return Outcome{r, {}, ""};
    });
    record("structure.sxi_trace", std::nullopt, [&] {
      Sampler s = sampler("structure.sxi_trace", std::nullopt);
      double r = 0.0;
      for (int k = 0; k < cfg_.samples; ++k) {
        VecX x = s.base_point(m);
        VecX xi(d), X(d);
        for (int i = 0; i < d; ++i) xi[i] = s.uniform(-1, 1);
        for (int i = 0; i < d; ++i) X[i] = s.uniform(-1, 1);
        r = std::max(r, std::abs(s_xi_matrix(xi, X, m.frame(x)).trace() - 4.0 * (n + 1) * xi.dot(X)));
      }
      return Outcome{r, {}, ""};
    });
    std::vector<VecX> curv_pts = base_points("structure.curvature", capped(50));
    std::vector<CurvatureTensor> curv;
    std::string curv_error;
    try {
      for (const VecX& x : curv_pts) curv.push_back(curvature(m, x));
    } catch (const std::exception& e) {
      curv_error = e.what();
    }
    auto need_curvature = [&] {
      if (!curv_error.empty()) throw std::runtime_error(curv_error);
    };
    record("structure.omega_trace_vs_b", std::nullopt, [&] {
      need_curvature();
      double r = 0.0;
      for (size_t k = 0; k < curv.size(); ++k) {
        Frame<double> I = m.frame(curv_pts[k]);
        auto ot = omega_from_trace(curv[k], I, n);
        auto ob = omega_from_b(ricci_split(curv[k], I), I, n);
        for (int a = 0; a < 3; ++a) r = std::max(r, max_abs(ot[a] - ob[a]));
      }
      return Outcome{r, {}, std::to_string(curv.size()) + " points"};
    });
    record("structure.omega_ricci", std::nullopt, [&] {
      need_curvature();
      double r = 0.0;
      for (size_t k = 0; k < curv.size(); ++k) {
        Frame<double> I = m.frame(curv_pts[k]);
        RicciSplit rs = ricci_split(curv[k], I);
        auto ot = omega_from_trace(curv[k], I, n);
        for (int a = 0; a < 3; ++a) {
          MatX full = ot[a] * I[a];
          MatX ricci_side = (I[a].transpose() * rs.antisymmetric * I[a] - rs.antisymmetric) / (2.0 * (n + 1)) -
                            (I[a].transpose() * rs.symmetric * I[a] + rs.symmetric) / (2.0 * n) +
                            2.0 / (n * (n + 2.0)) * rs.hermitian_projection;
          r = std::max(r, max_abs(full - ricci_side));
        }
      }
      return Outcome{r, {}, std::to_string(curv.size()) + " points"};
    });
    record("structure.affine", std::nullopt, [&] {
      double r = 0.0;
      auto X = [&m](const auto& z) { return m.field(z); };
      for (const VecX& x : base_points("structure.affine", capped(20))) {
        AffineReport ar = check_affine(m, X, x);
        r = std::max({r, ar.lie_der_conn_norm, ar.trace_criterion});
      }
      return Outcome{r, {}, ""};
    });
  }

  // ------------------------------------------------------------------------
  void swann_suite(double c) {
    const Model& m = *m_;
    const int n = m.n(), d = m.dim();
    record("swann.ihat_relations", c, [&] {
      double r = 0.0;
      for (const BundlePoint& p : bundle_points("swann.ihat_relations", cfg_.samples, c))
        r = std::max(r, ihat_relation_residual(m, c, p.g, p.coords()));
      return Outcome{r, {}, ""};
    });
    record("swann.lie_relations", c, [&] {
      StructureParams prm(c, cfg_.A);
      double r = lie_relations_check(prm, m, bundle_points("swann.lie_relations", capped(10), c)).max();
      return Outcome{r, {}, ""};
    });
    record("swann.integrability", c, [&] {
      IntegrabilityVerdict v = classify_integrability(m, c, bundle_points("swann.integrability", capped(10), c));
      std::string detail = std::string("predicted ") + (v.predicted_integrable ? "integrable" : "obstructed") +
                           ", observed " + (!v.decisive ? "indecisive" : v.integrable ? "integrable" : "obstructed") +
                           ", (Ric)^a hermitian residual " + format_double(v.hermitian_residual);
      Status st;
      if (!v.agrees())
        st = Status::Fail;
      else
        st = v.predicted_integrable ? Status::Pass : Status::ExpectedFail;
      return Outcome{v.max_residual, st, detail};
    });
    const auto* def = dynamic_cast<const DeformedModel*>(&m);
    if (def) {
      record("swann.connection_dependence", c, [&] {
        const Model& base = *def->base();
        Sampler s = sampler("swann.connection_dependence", c);
        const bool invariant = std::abs(c + 4.0 * (n + 1)) < 1e-12;
        double max_pred = 0.0, max_diff = 0.0;
        for (int k = 0; k < 100; ++k) {
          BundlePoint p = s.bundle_point(m);
          VecX y = p.coords();
          VecX v(d + 4);
          for (int i = 0; i < d + 4; ++i) v[i] = s.uniform(-1, 1);
          BundleGeom<double> G1(base, c, p.g, y), G2(m, c, p.g, y);
          VecX xi = def->xi()(p.x);
          const double k1 = kEps * (1.0 + 4.0 * (n + 1) / c);
          for (int a = 0; a < 3; ++a) {
            max_diff = std::max(max_diff, (G1.ihat(a, v) - G2.ihat(a, v)).cwiseAbs().maxCoeff());
            VecX Y = v.head(d);
            VecX h1 = G1.hlift(Y);
            VecX dh = G1.ihat(a, h1) - G2.ihat(a, h1);
            VecX pred = k1 * (xi.dot(Y) * G1.fund(a) + xi.dot(G1.Ig[a] * Y) * G1.z0c());
            max_pred = std::max(max_pred, (dh - pred).cwiseAbs().maxCoeff());
          }
        }
        double r = invariant ? std::max(max_pred, max_diff) : max_pred;
        return Outcome{r, {}, "closed form " + format_double(max_pred) + ", |difference| " + format_double(max_diff)};
      });
    }
  }

  // ------------------------------------------------------------------------
  void moment_suite(double c) {
    const Model& m = *m_;
    const int n = m.n();
    StructureParams prm(c, cfg_.A);
    if (fiber_aligned()) {
      record("moment.fiber_normalization", c, [&] {
        double r = 0.0;
        for (const BundlePoint& q : bundle_points("moment.fiber_normalization", cfg_.samples, c)) {
          BundlePoint p(q.x, Mat3d::Identity(), q.u);
          const double f = prm.A * std::pow(p.r(), 2.0 / c);
          r = std::max(r, (moment(prm, m, p).triple - f * Vec3d::UnitX()).norm());
        }
        return Outcome{r, {}, ""};
      });
    }
    record("moment.equivariance", c, [&] {
      Sampler s = sampler("moment.equivariance", c);
      double r = 0.0;
      for (int k = 0; k < cfg_.samples; ++k) {
        BundlePoint p = s.bundle_point(m);
        Mat3d h = s.rotation();
        BundlePoint ph(p.x, p.g * h, p.u);
        r = std::max(r, (moment(prm, m, ph).triple - h.transpose() * moment(prm, m, p).triple).norm());
      }
      return Outcome{r, {}, ""};
    });
    std::optional<CrReport> cr;
    std::string cr_error;
    try {
      cr = check_cr(prm, m, bundle_points("moment.cr", capped(10), c));
    } catch (const std::exception& e) {
      cr_error = e.what();
    }
    record("moment.cr", c, [&] {
      if (!cr) throw std::runtime_error(cr_error);
      std::string detail = "Ricci hypothesis residual " + format_double(cr->hypothesis_residual);
      if (cr->hypothesis_holds) return Outcome{cr->cr_residual, {}, detail};
      // Obstruction witness: the residual must exceed 1e-3.
      Status st = cr->cr_residual > 1e-3 ? Status::ExpectedFail : Status::Fail;
      return Outcome{cr->cr_residual, st, detail + "; hypothesis fails, obstruction expected"};
    });
    record("moment.dmu_contraction", c, [&] {
      if (!cr) throw std::runtime_error(cr_error);
      return Outcome{cr->lemma_residual, {}, ""};
    });
    record("moment.dtheta_eq_g", c, [&] {
      auto pts = bundle_points("moment.dtheta_eq_g", capped(10), c);
      double r = 0.0;
      for (int a = 1; a <= 3; ++a) r = std::max(r, check_dtheta_eq_g(a, prm, m, pts));
      return Outcome{r, {}, ""};
    });
    record("moment.dtheta_fiber_values", c, [&] {
      double r = 0.0;
      for (const BundlePoint& p : bundle_points("moment.dtheta_fiber_values", capped(20), c)) {
        MomentGeometry mg = moment_geometry(prm, m, p);
        const double f = prm.A * std::pow(p.r(), 2.0 / c);
        const VecX& z0 = mg.basis[mg.d + 3];
        for (int a = 0; a < 3; ++a) {
          const VecX& za = mg.basis[mg.d + a];
          const VecX& zb = mg.basis[mg.d + cyc1(a)];
          const VecX& zc = mg.basis[mg.d + cyc2(a)];
          r = std::max({r, std::abs(z0.dot(mg.dtheta_hat[a] * za) - 2.0 * kEps * f),
                        std::abs(mg.g_form(a, z0, mg.ihat[a] * za) - 2.0 * kEps * f),
                        std::abs(mg.g_form(a, za, mg.ihat[a] * z0) + 2.0 * kEps * f),
                        std::abs(zb.dot(mg.dtheta_hat[a] * zc) + 2.0 * kEps * f),
                        std::abs(mg.g_form(a, zb, mg.ihat[a] * zc) + 2.0 * kEps * f)});
        }
      }
      return Outcome{r, {}, ""};
    });
    // Transversality and the Omega contraction are derived under the Ricci hypothesis.
    if (cr && !cr->hypothesis_holds) {
      const std::string why = "Ricci hypothesis fails (residual " + format_double(cr->hypothesis_residual) + ")";
      skip("moment.transversality", c, why);
      skip("moment.omega_contraction", c, why);
    } else {
    record("moment.transversality", c, [&] {
      TransversalityReport t = check_transversality(prm, m, bundle_points("moment.transversality", capped(10), c));
      double r = t.identity_residual;
      if (fiber_aligned())
        for (double e : t.expression) r = std::max(r, std::abs(e - 4.0 * (n + 2)));
      std::string detail = "min |G(X^, X^)| = " + format_double(t.min_abs_g);
      if (t.min_abs_g < 1e-8) return Outcome{r, Status::Fail, detail + " (not transversal)"};
      return Outcome{r, {}, detail};
    });
    record("moment.omega_contraction", c, [&] {
      OmegaContraction o = omega_contraction_identity(prm, m, bundle_points("moment.omega_contraction", capped(10), c));
      return Outcome{o.residual, {}, ""};
    });
    }
    auto lift_pts = bundle_points("moment.lift", capped(5), c);
    record("moment.lift_brackets", c, [&] {
      double r = 0.0;
      for (const BundlePoint& p : bundle_points("moment.lift_brackets", capped(20), c))
        r = std::max(r, lift_bracket_residual(prm, m, p));
      return Outcome{r, {}, ""};
    });
    record("moment.lift_invariance", c, [&] {
      double r = 0.0;
      for (const BundlePoint& p : lift_pts) {
        LiftInvariance li = lift_invariance(prm, m, p);
        r = std::max({r, li.theta, li.theta0bar, li.ihat, lie_dtheta_hat_residual(prm, m, p)});
      }
      return Outcome{r, {}, ""};
    });
    record("moment.fundamental_lie", c, [&] {
      double r = 0.0;
      for (const BundlePoint& p : lift_pts) {
        FundamentalLie fl = fundamental_lie_theta(prm, m, p);
        r = std::max({r, fl.theta, fl.theta_hat});
      }
      return Outcome{r, {}, ""};
    });
  }

  // ------------------------------------------------------------------------
  void reduction_suite(double c) {
    const Model& m = *m_;
    const int n = m.n();
    StructureParams prm(c, cfg_.A);
    const std::vector<std::string> ids = {"reduction.level_set",        "reduction.slice",
                                          "reduction.quotient_relations", "reduction.nijenhuis",
                                          "reduction.lie_z_structure",  "reduction.theta_closed",
                                          "reduction.theta_lie_z",      "reduction.invariant_condition"};
    // The quotient needs the CR equations, which need the Ricci hypothesis.
    std::optional<CrReport> hyp;
    try {
      hyp = check_cr(prm, m, bundle_points("reduction.hypothesis", 1, c));
    } catch (const std::exception& e) {
      const std::string what = e.what();
      for (const auto& id : ids) record(id, c, [&]() -> Outcome { throw std::runtime_error(what); });
      return;
    }
    if (!hyp->hypothesis_holds) {
      const std::string why = "Ricci hypothesis fails (residual " + format_double(hyp->hypothesis_residual) +
                              "); the level set has no hypercomplex quotient";
      for (const auto& id : ids) skip(id, c, why);
      if (c == 1.0) skip("reduction.definite", c, why);
      if (fiber_aligned()) skip("reduction.covering", c, why);
      return;
    }
    Sampler s = sampler("reduction.anchors", c);
    std::vector<LevelSetPoint> anchors;
    std::vector<SliceChart> slices;
    std::string error;
    try {
      for (int k = 0; k < std::max(1, cfg_.reduction_anchors); ++k) {
        anchors.push_back(project_to_level_set(prm, m, s.bundle_point(m), 50, 1e-12, true));
        slices.push_back(build_slice(prm, m, anchors.back()));
      }
    } catch (const std::exception& e) {
      error = e.what();
    }
    auto need = [&] {
      if (!error.empty()) throw std::runtime_error(error);
    };
    record("reduction.level_set", c, [&] {
      if (anchors.empty()) need();
      double r = 0.0;
      for (const auto& a : anchors) r = std::max(r, a.residual);
      return Outcome{r, {}, std::to_string(anchors.size()) + " anchors"};
    });
    record("reduction.slice", c, [&] {
      need();
      double r = 0.0;
      int worst_dim = 4 * n;
      for (const auto& sl : slices) {
        SliceReport sr = slice_report(sl);
        r = std::max({r, sr.basis_in_v, sr.projector_invariance});
        if (sr.dim_v != 4 * n) worst_dim = sr.dim_v;
      }
      std::string detail = "dim V = " + std::to_string(worst_dim) + " (expected " + std::to_string(4 * n) + ")";
      if (worst_dim != 4 * n) return Outcome{r, Status::Fail, detail};
      return Outcome{r, {}, detail};
    });
    // Quotient identities at the slice center and one nearby slice point.
    std::vector<QuotientReport> reports;
    std::string qerror = error;
    if (qerror.empty()) {
      try {
        for (const auto& sl : slices) {
          VecX s1(sl.dim());
          for (int i = 0; i < sl.dim(); ++i) s1[i] = s.uniform(-1, 1);
          s1 *= 0.03 / s1.norm();
          reports.push_back(check_theta_prime(sl, {VecX::Zero(sl.dim()), s1}));
        }
      } catch (const std::exception& e) {
        qerror = e.what();
      }
    }
    auto quotient = [&](const std::string& id, const std::function<double(const QuotientReport&)>& pick) {
      record(id, c, [&] {
        if (!qerror.empty()) throw std::runtime_error(qerror);
        double r = 0.0;
        for (const auto& q : reports) r = std::max(r, pick(q));
        return Outcome{r, {}, ""};
      });
    };
    quotient("reduction.quotient_relations", [](const QuotientReport& q) { return q.relations; });
    quotient("reduction.nijenhuis", [](const QuotientReport& q) { return q.nijenhuis; });
    quotient("reduction.lie_z_structure", [](const QuotientReport& q) { return q.lie_z_i.maxCoeff(); });
    quotient("reduction.theta_closed", [](const QuotientReport& q) { return q.closedness; });
    quotient("reduction.theta_lie_z", [](const QuotientReport& q) { return q.lie_z_theta.maxCoeff(); });
    quotient("reduction.invariant_condition", [](const QuotientReport& q) { return q.invariant_spread; });
    if (c == 1.0) {
      record("reduction.definite", c, [&] {
        need();
        double worst = std::numeric_limits<double>::infinity();
        double max_theta = 0.0;
        for (const auto& sl : slices) {
          QuotientStructure qs = induced_structure(sl);
          MatX metric = -(qs.Theta[0] * qs.I[0]);
          MatX sym = 0.5 * (metric + metric.transpose());
          Eigen::SelfAdjointEigenSolver<MatX> es(sym);
          worst = std::min(worst, es.eigenvalues().minCoeff());
          max_theta = std::max(max_theta, max_abs(qs.Theta[0]));
        }
        return Outcome{worst, {}, "max |Theta'_1| = " + format_double(max_theta)};
      });
    }
    if (fiber_aligned()) {
      record("reduction.covering", c, [&] {
        Sampler cs = sampler("reduction.covering", c);
        double r = 0.0, min_sv = std::numeric_limits<double>::infinity();
        // K flows base points back along X; points whose flow leaves the chart box are resampled.
        const int wanted = std::max(1, cfg_.covering_points);
        int done = 0, escaped = 0;
        while (done < wanted) {
          LevelSetPoint lp = project_to_level_set(prm, m, cs.bundle_point(m), 50, 1e-12, true);
          try {
            CoveringReport cr = covering_consistency(build_slice(prm, m, lp));
            r = std::max(r, cr.residual);
            min_sv = std::min(min_sv, cr.min_singular);
            ++done;
          } catch (const FlowEscapeError&) {
            if (++escaped > 10 * wanted) throw;
          }
        }
        std::string detail = std::to_string(done) + " base points (" + std::to_string(escaped) +
                             " resampled after leaving the chart), min singular value of DK " + format_double(min_sv);
        if (!(min_sv > 1e-6)) return Outcome{r, Status::Fail, detail + " (K degenerate)"};
        return Outcome{r, {}, detail};
      });
    }
  }

  // ------------------------------------------------------------------------
  void twist_suite(double c) {
    const Model& m = *m_;
    StructureParams prm(c, cfg_.A);
    std::optional<TwistData> td;
    std::string error;
    try {
      td = twist_data(prm, m, base_points("reduction.twist", std::max(1, cfg_.twist_points), c));
    } catch (const std::exception& e) {
      error = e.what();
    }
    auto need = [&] {
      if (!td) throw std::runtime_error(error);
    };
    record("reduction.twist", c, [&] {
      need();
      return Outcome{std::max(td->max_residual, td->max_level_residual), {},
                     "max |F| = " + format_double(td->max_abs_f) + ", max |a - 1| = " +
                         format_double(td->max_a_deviation)};
    });
    record("reduction.twist_lie", c, [&] {
      need();
      return Outcome{td->max_lie_f, {}, ""};
    });
    if (fiber_aligned()) {
      record("reduction.twist_trivial", c, [&] {
        need();
        return Outcome{std::max(td->max_abs_f, td->max_a_deviation), {}, ""};
      });
    }
    record("reduction.single_circle", c, [&] {
      Sampler s = sampler("reduction.single_circle", c);
      double r = 0.0;
      for (int k = 0; k < capped(3); ++k) {
        VecX x = s.base_point(m);
        std::vector<BundlePoint> seeds;
        for (int j = 0; j < 6; ++j) seeds.emplace_back(x, s.rotation(), s.uniform(-1.0, 1.0));
        r = std::max(r, single_circle_spread(prm, m, seeds));
      }
      return Outcome{r, {}, ""};
    });
  }
};

// ---------------------------------------------------------------------------
// Config parsing.

template <class T>
T get_as(const nlohmann::json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("config: invalid value for '" + key + "': " + e.what());
  }
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ParameterError("config: unknown key '" + it.key() + "' in " + where);
}

ModelConfig parse_model(const nlohmann::json& j) {
  if (!j.is_object()) throw ParameterError("config: model entry must be an object");
  reject_unknown(j, {"name", "n", "lambda", "q"}, "model");
  ModelConfig mc;
  if (!j.contains("name")) throw ParameterError("config: model requires 'name'");
  mc.name = get_as<std::string>(j, "name");
  if (mc.name != "flat" && mc.name != "hopf" && mc.name != "hpn" && mc.name != "deformed-flat")
    throw ParameterError("config: unknown model '" + mc.name + "' (flat, hopf, hpn, deformed-flat)");
  if (j.contains("n")) mc.n = get_as<int>(j, "n");
  if (mc.n < 1 || mc.n > 2) throw ParameterError("config: n must be 1 or 2");
  if (j.contains("lambda") || j.contains("q")) {
    if (mc.name != "hopf") throw ParameterError("config: 'lambda' and 'q' apply to the hopf model only");
  }
  if (j.contains("lambda")) {
    mc.lambda = get_as<double>(j, "lambda");
    if (!(mc.lambda > 1.0)) throw ParameterError("config: lambda must exceed 1");
  }
  if (j.contains("q")) {
    auto q = get_as<std::vector<double>>(j, "q");
    if (q.size() != 4) throw ParameterError("config: q must have 4 components (w, x, y, z)");
    mc.q = std::array<double, 4>{q[0], q[1], q[2], q[3]};
  }
  return mc;
}

}  // namespace

// ---------------------------------------------------------------------------

const std::vector<CheckInfo>& check_catalog() {
  static const std::vector<CheckInfo> catalog = make_catalog();
  return catalog;
}

const CheckInfo& find_check(const std::string& id) {
  for (const auto& c : check_catalog())
    if (c.id == id) return c;
  throw ParameterError("unknown check id: " + id);
}

std::string explain_check(const std::string& id) {
  const CheckInfo& c = find_check(id);
  std::ostringstream os;
  os << c.id << "\n"
     << "  suite:     " << c.suite << "\n"
     << "  anchor:    " << c.anchor << "\n"
     << "  formula:   " << c.formula << "\n"
     << "  tolerance: " << short_double(c.tolerance) << (c.id == "reduction.definite" ? " (lower bound)" : "")
     << "\n";
  return os.str();
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Pass: return "PASS";
    case Status::Fail: return "FAIL";
    case Status::ExpectedFail: return "EXPECTED-FAIL";
    case Status::Skipped: return "SKIPPED";
    case Status::Error: return "ERROR";
  }
  return "ERROR";
}

RunConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ParameterError("config: top level must be an object");
  reject_unknown(j,
                 {"model", "models", "c_values", "A", "samples", "seed", "tolerances", "suites", "out",
                  "reduction_anchors", "twist_points", "covering_points"},
                 "top level");
  RunConfig cfg;
  if (j.contains("model") == j.contains("models"))
    throw ParameterError("config: exactly one of 'model' and 'models' is required");
  if (j.contains("model")) cfg.models.push_back(parse_model(j.at("model")));
  if (j.contains("models")) {
    if (!j.at("models").is_array() || j.at("models").empty())
      throw ParameterError("config: 'models' must be a non-empty array");
    for (const auto& mj : j.at("models")) cfg.models.push_back(parse_model(mj));
  }
  if (j.contains("c_values")) {
    cfg.c_values = get_as<std::vector<double>>(j, "c_values");
    if (cfg.c_values.empty()) throw ParameterError("config: c_values must not be empty");
    for (double c : cfg.c_values)
      if (c == 0.0 || !std::isfinite(c)) throw ParameterError("config: c values must be finite and nonzero");
  }
  if (j.contains("A")) {
    cfg.A = get_as<double>(j, "A");
    if (cfg.A == 0.0 || !std::isfinite(cfg.A)) throw ParameterError("config: A must be finite and nonzero");
  }
  if (j.contains("samples")) {
    cfg.samples = get_as<int>(j, "samples");
    if (cfg.samples < 1) throw ParameterError("config: samples must be >= 1");
  }
  if (j.contains("seed")) cfg.seed = get_as<uint64_t>(j, "seed");
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    if (!t.is_object()) throw ParameterError("config: 'tolerances' must be an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      find_check(it.key());
      double v = 0.0;
      try {
        v = it.value().get<double>();
      } catch (const nlohmann::json::exception&) {
        throw ParameterError("config: tolerance for '" + it.key() + "' must be a number");
      }
      if (!(v > 0.0)) throw ParameterError("config: tolerance for '" + it.key() + "' must be > 0");
      cfg.tolerances[it.key()] = v;
    }
  }
  if (j.contains("suites")) {
    auto suites = get_as<std::vector<std::string>>(j, "suites");
    cfg.suites.clear();
    for (const auto& s : suites) {
      if (std::find(kSuites.begin(), kSuites.end(), s) == kSuites.end())
        throw ParameterError("config: unknown suite '" + s + "'");
      cfg.suites.insert(s);
    }
  }
  if (j.contains("out")) cfg.out = get_as<std::string>(j, "out");
  auto positive = [&](const char* key, int& field) {
    if (!j.contains(key)) return;
    field = get_as<int>(j, key);
    if (field < 1) throw ParameterError(std::string("config: ") + key + " must be >= 1");
  };
  positive("reduction_anchors", cfg.reduction_anchors);
  positive("twist_points", cfg.twist_points);
  positive("covering_points", cfg.covering_points);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParameterError("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError("config: parse error in " + path + ": " + e.what());
  }
  return parse_config(j);
}

ModelPtr build_model(const ModelConfig& mc) {
  if (mc.name == "hopf" && (mc.q || mc.lambda != 2.0)) {
    Quat<double> q = mc.q ? Quat<double>((*mc.q)[0], (*mc.q)[1], (*mc.q)[2], (*mc.q)[3])
                          : Quat<double>(std::cos(0.7), 0.0, std::sin(0.7) * 0.6, std::sin(0.7) * 0.8);
    return hopf(mc.n, mc.lambda, q);
  }
  return build_model(mc.name, mc.n);
}

int VerificationReport::pass_count() const {
  int k = 0;
  for (const auto& e : entries) k += e.pass() ? 1 : 0;
  return k;
}

int VerificationReport::fail_count() const { return static_cast<int>(entries.size()) - pass_count(); }

VerificationReport run(const RunConfig& cfg) {
  VerificationReport r;
  r.config = cfg;
  Runner runner(cfg, r.entries);
  for (const auto& mc : cfg.models) runner.run_model(mc);
  return r;
}

nlohmann::json report_json(const VerificationReport& r) {
  using nlohmann::json;
  auto number = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json models = json::array();
  for (const auto& mc : r.config.models) {
    json m = {{"name", mc.name}, {"n", mc.n}};
    if (mc.name == "hopf") {
      m["lambda"] = mc.lambda;
      if (mc.q) m["q"] = *mc.q;
    }
    models.push_back(m);
  }
  json cfg = {{"models", models},
              {"c_values", r.config.c_values.empty() ? json("default [-4(n+1), 1, -1]") : json(r.config.c_values)},
              {"A", r.config.A},
              {"samples", r.config.samples},
              {"suites", r.config.suites},
              {"reduction_anchors", r.config.reduction_anchors},
              {"twist_points", r.config.twist_points},
              {"covering_points", r.config.covering_points},
              {"tolerance_overrides", r.config.tolerances}};
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"id", e.id},
                       {"suite", e.suite},
                       {"anchor", e.anchor},
                       {"model", e.model},
                       {"n", e.n},
                       {"c", e.c ? json(*e.c) : json(nullptr)},
                       {"residual", number(e.residual)},
                       {"tolerance", e.tolerance},
                       {"comparator", e.comparator},
                       {"status", to_string(e.status)},
                       {"pass", e.pass()},
                       {"detail", e.detail}});
  }
  return {{"schema_version", kSchemaVersion},
          {"environment", {{"seed", r.config.seed}, {"engine_mode", kEngineMode}, {"version", kVersion}}},
          {"config", cfg},
          {"entries", entries},
          {"summary", {{"pass", r.pass_count()}, {"fail", r.fail_count()}, {"total", r.entries.size()}}}};
}

namespace {

void write_json(std::ostream& os, const nlohmann::json& j, int indent) {
  using nlohmann::json;
  const std::string pad(indent * 2, ' '), inner((indent + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << inner << json(it.key()).dump() << ": ";
        write_json(os, it.value(), indent + 1);
      }
      os << "\n" << pad << "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      bool first = true;
      for (const auto& v : j) {
        if (!first) os << ",\n";
        first = false;
        os << inner;
        write_json(os, v, indent + 1);
      }
      os << "\n" << pad << "]";
      return;
    }
    case json::value_t::number_float:
      os << format_double(j.get<double>());
      return;
    default:
      os << j.dump();
  }
}

}  // namespace

std::string dump_json(const nlohmann::json& j) {
  std::ostringstream os;
  write_json(os, j, 0);
  os << "\n";
  return os.str();
}

std::string text_summary(const VerificationReport& r) {
  std::ostringstream os;
  for (const auto& e : r.entries) {
    char line[512];
    std::snprintf(line, sizeof line, "%-14s %-34s %-16s c=%-8s residual=%-12.4g tol=%-8.1e", to_string(e.status).c_str(),
                  e.id.c_str(), (e.model + "(n=" + std::to_string(e.n) + ")").c_str(),
                  e.c ? format_double(*e.c).substr(0, 8).c_str() : "-", e.residual, e.tolerance);
    os << line;
    if (!e.detail.empty()) os << "  " << e.detail;
    os << "\n";
  }
  os << "summary: " << r.pass_count() << " pass, " << r.fail_count() << " fail, " << r.entries.size() << " total\n";
  return os.str();
}

}  // namespace hqc
