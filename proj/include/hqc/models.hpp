#pragma once

// Built-in example manifolds: flat H^n, the quaternionic Hopf cover, the
// affine chart of HP^n and the xi-deformed flat model.

#include <memory>

#include "hqc/linalg.hpp"
#include "hqc/quaternion.hpp"
#include "hqc/quaternionic.hpp"

namespace hqc {

// Affine vector field X(x) = L x + b with its exact flow.
struct AffineField {
  MatX L;
  VecX b;

  template <class T>
  Vec<T> operator()(const Vec<T>& x) const {
    return lift<T>(L) * x + lift<T>(b);
  }
  ClosedFormFlow flow() const;
};

// Right multiplication by i on each quaternion factor: X_z = z i.
AffineField right_i_field(int n);
// Rotation in the (x0, x3) plane of each factor: X = x0 d3 - x3 d0 = (kz + zk)/2.
AffineField x0x3_rotation_field(int n);
// Conjugation field of the left e^{i theta} action on the affine chart of HP^n:
// X_w = i w - w i.
AffineField left_conjugation_field(int n);

// Flat H^n with the standard frame, zero Christoffels, nu = dx and an affine
// quaternionic vector field.
class FlatModel : public ModelBase<FlatModel> {
 public:
  FlatModel(std::string name, int n, AffineField X, double half_width = 2.0, double min_radius = 0.3);

  template <class S>
  Frame<S> frame_t(const Vec<S>&) const {
    return lift_frame<S>(frame_);
  }
  template <class S>
  Christoffel<S> christoffel_t(const Vec<S>&) const {
    return Christoffel<S>(dim(), Mat<S>::Zero(dim(), dim()));
  }
  template <class S>
  Vec<S> field_t(const Vec<S>& x) const {
    return X_(x);
  }
  template <class S>
  S log_density_t(const Vec<S>&) const {
    return S(0.0);
  }
  std::optional<ClosedFormFlow> exact_flow() const override { return X_.flow(); }
  bool admissible_sample(const VecX& x) const override;
  std::optional<DeckData> deck() const override { return deck_; }
  void set_deck(DeckData d) { deck_ = d; }
  const AffineField& vector_field() const { return X_; }

 private:
  Frame<double> frame_;
  AffineField X_;
  double min_radius_;
  std::optional<DeckData> deck_;
};

// Affine chart [1 : w] of HP^n with the quaternion-Kaehler symmetric metric
//   g = ((1 + |w|^2) |dw|^2 - |<w, dw>|^2) / (1 + |w|^2)^2,  <w, v> = sum conj(w_k) v_k,
// its Levi-Civita connection, nu = sqrt(det g) dx, and X_w = i w - w i.
class HPnModel : public ModelBase<HPnModel> {
 public:
  HPnModel(int n, double half_width = 1.2);

  template <class S>
  Mat<S> metric(const Vec<S>& w) const {
    const int d = dim();
    S r2 = w.squaredNorm();
    Mat<S> A(4, d);
    for (int k = 0; k < n(); ++k) {
      Quat<S> wk = w.template segment<4>(4 * k);
      Quat<S> cw = qconj(wk);
      for (int m = 0; m < 4; ++m) A.col(4 * k + m) = qmul<S>(cw, lift<S>(Quat<double>(qunit(m))));
    }
    S one_r2 = 1.0 + r2;
    Mat<S> g = one_r2 * Mat<S>::Identity(d, d) - A.transpose() * A;
    return g / (one_r2 * one_r2);
  }

  template <class S>
  Frame<S> frame_t(const Vec<S>&) const {
    return lift_frame<S>(frame_);
  }
  template <class S>
  Christoffel<S> christoffel_t(const Vec<S>& x) const {
    const int d = dim();
    Mat<S> g = metric(x);
    Mat<S> ginv = inverse(g);
    std::vector<Mat<S>> dg(d);
    for (int l = 0; l < d; ++l) dg[l] = tangent(metric(seed_axis(x, l)));
    Christoffel<S> G(d, Mat<S>::Zero(d, d));
    for (int i = 0; i < d; ++i) {
      Mat<S> lower(d, d);  // lower(l, j) = [ij, l]
      for (int l = 0; l < d; ++l)
        for (int j = 0; j < d; ++j) lower(l, j) = 0.5 * (dg[i](l, j) + dg[j](l, i) - dg[l](i, j));
      G[i] = ginv * lower;
    }
    return G;
  }
  template <class S>
  Vec<S> field_t(const Vec<S>& x) const {
    return X_(x);
  }
  template <class S>
  S log_density_t(const Vec<S>& x) const {
    return 0.5 * log_abs_det(metric(x));
  }
  std::optional<ClosedFormFlow> exact_flow() const override { return X_.flow(); }
  bool admissible_sample(const VecX& x) const override;

 private:
  Frame<double> frame_;
  AffineField X_;
};

std::shared_ptr<FlatModel> flat_hn(int n);
// Hopf cover H^n \ {0} with deck transformation z -> lambda z q. q is
// conjugated onto the e^{i theta} circle and the conjugation recorded.
std::shared_ptr<FlatModel> hopf(int n, double lambda, const Quat<double>& q);
std::shared_ptr<HPnModel> hpn(int n);
// Flat H^n with nabla = flat + S^xi (default xi = x1 dx2 on the first factor)
// and X the (x0, x3)-rotation field, which preserves xi.
std::shared_ptr<DeformedModel> deformed_flat(int n, std::optional<AffineOneForm> xi = std::nullopt);
AffineOneForm default_deformation_form(int n);

// Deck transformation of the Hopf model in coordinates: z -> lambda z q.
VecX hopf_deck_map(const DeckData& d, const VecX& z);
// (t, v) coordinates: t = log|z| / log lambda, v = z / |z|.
std::pair<double, VecX> hopf_tv(const DeckData& d, const VecX& z);

ModelPtr build_model(const std::string& name, int n);

}  // namespace hqc
