#pragma once

// Reduction by the natural lift: the level set P = mu^-1(e1), slice charts of
// the local quotient M' = P / <X^>, the induced hypercomplex structure I', the
// field Z = pi_P*(Z_1), the closed forms Theta'_a and the twist data (F, a).

#include "hqc/lift_moment.hpp"

namespace hqc {

struct LevelSetPoint {
  BundlePoint bundle_point;
  double residual = 0.0;  // |mu - e1|
  int iterations = 0;
};

// Exact fiber move onto P using equivariance: g -> g R with R e1 = mu^ and
// u -> u - (c/2) log|mu|. Local Newton cannot cross |mu| = 0, so starts with
// mu . e1 < 0 need this.
BundlePoint align_fiber(const StructureParams& prm, const Model& m, const BundlePoint& p);

// Damped Newton iteration along span{I^_1 X^, I^_2 X^, I^_3 X^} (recomputed
// each step) until |mu - e1| < tol, optionally after align_fiber. Throws
// ProjectionError with the best residual on stagnation, non-finite values or
// when the iterate leaves the chart.
LevelSetPoint project_to_level_set(const StructureParams& prm, const Model& m, const BundlePoint& p,
                                   int max_iter = 50, double tol = 1e-12, bool align = false);

// Same, moving only in the fiber over x (minimum-norm Newton steps in (a, u)).
LevelSetPoint project_fiber_to_level_set(const StructureParams& prm, const Model& m, const BundlePoint& p,
                                         int max_iter = 50, double tol = 1e-12, bool align = true);

// Slice of P through the anchor: Phi(s) = y0 + B s + K c(s) in the chart
// centered at the anchor's g, where the columns of B span V(anchor), K holds
// I^_a X^ at the anchor and c(s) solves mu(Phi(s)) = e1.
class SliceChart {
 public:
  SliceChart(const StructureParams& prm, const Model& m, const LevelSetPoint& anchor);

  const LevelSetPoint& center() const { return center_; }
  int dim() const { return static_cast<int>(basis_.cols()); }
  const Mat3d& chart_center() const { return g0_; }
  const MatX& basis() const { return basis_; }           // D x 4n, spans V(anchor)
  const MatX& conditions() const { return conditions_; } // 6 x D rows d mu, d mu_a o I^_a
  const StructureParams& params() const { return prm_; }
  const Model& model() const { return *m_; }

  // Chart coordinates of Phi(s) and the level-set point it represents.
  VecX chart_coords(const VecX& s) const;
  LevelSetPoint identification(const VecX& s) const;
  // D Phi at s (D x 4n).
  MatX tangent(const VecX& s) const;
  // Chart coordinates to bundle point for the chart centered at chart_center().
  BundlePoint to_bundle_point(const VecX& y) const;

 private:
  StructureParams prm_;
  const Model* m_;
  LevelSetPoint center_;
  Mat3d g0_;
  VecX y0_;
  MatX basis_;
  MatX directions_;  // D x 3
  MatX conditions_;
};

// Throws DegeneratePointError when V(anchor) does not have dimension 4n.
SliceChart build_slice(const StructureParams& prm, const Model& m, const LevelSetPoint& anchor);

// Residuals of the decomposition T M^|P = V + span{X^, I^_a X^} at the anchor.
struct SliceReport {
  int dim_v = 0;
  double basis_in_v = 0.0;          // max |rows of conditions() applied to basis|
  double spans_tp = 0.0;            // smallest singular value of [basis | X^] (normalized)
  double projector_invariance = 0.0; // max |pr_V I^_a pr_V - I^_a pr_V|
};
SliceReport slice_report(const SliceChart& slice);

struct QuotientStructure {
  std::array<MatX, 3> I;      // I'_a in slice coordinates
  VecX Z;                     // pi_P*(Z_1)
  std::array<MatX, 3> Theta;  // Theta'_a(U, W) = U^T Theta W
  double lift_residual = 0.0; // max least-squares residual of the solves into [D Phi | X^]
  double z_tangency = 0.0;    // |d mu(Z_1)| on P
};

QuotientStructure induced_structure(const SliceChart& slice, const VecX& s);
QuotientStructure induced_structure(const SliceChart& slice);

// Induced structure with central-difference partials in slice coordinates.
struct QuotientJet {
  QuotientStructure value;
  std::vector<QuotientStructure> partial;  // partial[k] = d/ds_k, entries of I, Z, Theta
};
QuotientJet induced_jet(const SliceChart& slice, const VecX& s, double h = 1e-4);

struct QuotientReport {
  double relations = 0.0;       // quaternionic relations of I'
  double nijenhuis = 0.0;       // max_a |N_{I'_a}| over basis pairs
  Vec3d lie_z_i = Vec3d::Zero();     // |L_Z I'_1|, |L_Z I'_2 - 2 eps I'_3|, |L_Z I'_3 + 2 eps I'_2|
  Vec3d lie_z_theta = Vec3d::Zero(); // same pattern for Theta'
  double closedness = 0.0;      // max_a |d Theta'_a|
  double invariant_spread = 0.0; // max_{a,b} |Theta'_a(., I'_a .) - Theta'_b(., I'_b .)|
  double symmetric_defect = 0.0; // asymmetry of Theta'_1(., I'_1 .)
  double min_eigenvalue = 0.0;  // of the symmetric part of Theta'_1(., I'_1 .)
  double max_abs_theta = 0.0;
};
QuotientReport check_quotient(const QuotientJet& jet);

// check_theta_prime over several slice points: the worst entries of the reports.
QuotientReport check_theta_prime(const SliceChart& slice, const std::vector<VecX>& samples, double h = 1e-4);

// Fiber over p.x: projects each seed fiber point onto P and returns the largest
// pairwise distance between the U(1)_{Z1} orbits, |g_a^T g_b e1 - e1| + |u_a - u_b|.
double single_circle_spread(const StructureParams& prm, const Model& m, const std::vector<BundlePoint>& seeds);

// Section of P with g e1 = v^ (minimal rotation) and f |v| = 1, where
// v = theta(X^) at g = id; requires A > 0.
template <class S>
Vec<S> twist_section(const Model& m, const StructureParams& prm, const Vec<S>& x) {
  using std::log;
  using std::sqrt;
  const int d = m.dim();
  Vec<S> y0 = Vec<S>::Zero(d + 4);
  y0.head(d) = x;
  BundleGeom<S> G(m, prm.c, Mat3d::Identity(), y0);
  Vec3<S> v = G.theta(natural_lift_raw(m, Mat3d::Identity(), y0));
  S nv = sqrt(v.squaredNorm());
  Vec3<S> phi = minimal_rotation_vector(Vec3<S>(v / nv));
  Vec<S> y(d + 4);
  y.head(d) = x;
  y.template segment<3>(d) = 0.5 * phi;
  y[d + 3] = -0.5 * prm.c * log(prm.A * nv);
  return y;
}

struct TwistSample {
  VecX x;
  MatX F;          // s^* Omega_1
  double a = 0.0;  // theta_1(X^) o s
  double residual = 0.0;  // |da + iota_X F|
  double lie_f = 0.0;     // |L_X F|
  double level_residual = 0.0; // |mu(s(x)) - e1|
};

struct TwistData {
  std::vector<TwistSample> samples;
  double max_residual = 0.0;
  double max_lie_f = 0.0;
  double max_abs_f = 0.0;
  double max_a_deviation = 0.0;  // max |a - 1|
  double max_level_residual = 0.0;
};

// Throws ProjectionError when the section cannot be formed (A <= 0 or X^ has
// vanishing theta-component).
TwistData twist_data(const StructureParams& prm, const Model& m, const std::vector<VecX>& base_points);

// For models whose lifted field rotates the fiber about e1 at a constant rate
// w (Hopf-type U(1) actions), the map K(y) = Fl^X_{-angle/w}(x) from the slice
// to M inverts the covering identification k; angle is the rotation about e1
// taking the section value s(x) (twist_section) to g. Returns
// max_a |DK I'_a - I_a DK| at the slice center, with DK by central differences.
struct CoveringReport {
  double residual = 0.0;
  double min_singular = 0.0;  // of DK
  double base_offset = 0.0;   // |K(center) - center.x|, nonzero off the section
};
CoveringReport covering_consistency(const SliceChart& slice, double h = 1e-5);

}  // namespace hqc
