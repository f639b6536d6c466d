#include "hqc/models.hpp"

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

namespace hqc {

ClosedFormFlow AffineField::flow() const {
  const MatX L0 = L;
  const VecX b0 = b;
  return [L0, b0](const VecX& x, double t) {
    const Eigen::Index d = x.size();
    MatX aug = MatX::Zero(d + 1, d + 1);
    aug.topLeftCorner(d, d) = t * L0;
    aug.topRightCorner(d, 1) = t * b0;
    MatX E = aug.exp();
    FlowResult r;
    r.jacobian = E.topLeftCorner(d, d);
    r.x = r.jacobian * x + E.topRightCorner(d, 1);
    return r;
  };
}

AffineField right_i_field(int n) {
  return {block_diag(right_mult(qunit(1)), n), VecX::Zero(4 * n)};
}

AffineField x0x3_rotation_field(int n) {
  Eigen::Matrix4d B = Eigen::Matrix4d::Zero();
  B(3, 0) = 1.0;
  B(0, 3) = -1.0;
  return {block_diag(B, n), VecX::Zero(4 * n)};
}

AffineField left_conjugation_field(int n) {
  Eigen::Matrix4d B = left_mult(qunit(1)) - right_mult(qunit(1));
  return {block_diag(B, n), VecX::Zero(4 * n)};
}

namespace {
ChartBox cube(const std::string& id, int d, double h) {
  return ChartBox{id, VecX::Constant(d, -h), VecX::Constant(d, h)};
}
}  // namespace

FlatModel::FlatModel(std::string name, int n, AffineField X, double half_width, double min_radius)
    : ModelBase<FlatModel>(name, n, cube(name, 4 * n, half_width)),
      frame_(standard_frame(n)),
      X_(std::move(X)),
      min_radius_(min_radius) {}

bool FlatModel::admissible_sample(const VecX& x) const {
  return x.norm() > min_radius_ && X_(x).norm() > min_radius_;
}

HPnModel::HPnModel(int n, double half_width)
    : ModelBase<HPnModel>("hpn", n, cube("hpn", 4 * n, half_width)),
      frame_(standard_frame(n)),
      X_(left_conjugation_field(n)) {
  if (n < 1 || n > 2) throw ParameterError("hpn: n must be 1 or 2");
}

bool HPnModel::admissible_sample(const VecX& x) const { return X_(x).norm() > 0.2; }

std::shared_ptr<FlatModel> flat_hn(int n) {
  if (n < 1) throw ParameterError("flat_hn: n must be >= 1");
  return std::make_shared<FlatModel>("flat", n, right_i_field(n));
}

std::shared_ptr<FlatModel> hopf(int n, double lambda, const Quat<double>& q) {
  if (n < 1) throw ParameterError("hopf: n must be >= 1");
  if (!(lambda > 1.0)) throw ParameterError("hopf: lambda must exceed 1");
  if (std::abs(q.norm() - 1.0) > 1e-12) throw ParameterError("hopf: q must be a unit quaternion");
  Eigen::Vector3d u = q.tail<3>();
  if (u.norm() < 1e-12) throw ParameterError("hopf: q must differ from +-1");
  // Rotate the imaginary axis of q onto i: p u p^{-1} = |u| i.
  Eigen::Vector3d axis = u.normalized();
  Eigen::Vector3d target(1.0, 0.0, 0.0);
  Eigen::Vector3d cr = axis.cross(target);
  double cosang = std::clamp(axis.dot(target), -1.0, 1.0);
  Quat<double> p;
  if (cr.norm() < 1e-14) {
    p = cosang > 0 ? Quat<double>(1, 0, 0, 0) : Quat<double>(0, 0, 1, 0);  // rotate by pi about j
  } else {
    double ang = std::acos(cosang);
    Eigen::Vector3d ax = cr.normalized();
    p << std::cos(ang / 2), std::sin(ang / 2) * ax[0], std::sin(ang / 2) * ax[1], std::sin(ang / 2) * ax[2];
  }
  Quat<double> qn = qmul<double>(qmul<double>(p, q), qconj(p));
  auto m = std::make_shared<FlatModel>("hopf", n, right_i_field(n));
  m->set_deck(DeckData{lambda, q, qn, p});
  return m;
}

std::shared_ptr<HPnModel> hpn(int n) { return std::make_shared<HPnModel>(n); }

AffineOneForm default_deformation_form(int n) {
  AffineOneForm xi = AffineOneForm::zero(4 * n);
  xi.M(2, 1) = 1.0;  // xi = x1 dx2
  return xi;
}

std::shared_ptr<DeformedModel> deformed_flat(int n, std::optional<AffineOneForm> xi) {
  auto base = std::make_shared<FlatModel>("flat-rot", n, x0x3_rotation_field(n));
  AffineOneForm form = xi ? *xi : default_deformation_form(n);
  auto m = deform_connection(base, form, "deformed-flat");
  if (!form.is_zero()) {
    VecX x = VecX::Constant(4 * n, 0.37);
    RicciSplit rs = ricci_split(*m, x);
    if (is_q_hermitian(rs.antisymmetric, m->frame(x), 1e-3).hermitian)
      throw ParameterError("deformed_flat: antisymmetric Ricci is Q-hermitian for this xi; choose another form");
  }
  return m;
}

VecX hopf_deck_map(const DeckData& d, const VecX& z) {
  VecX out(z.size());
  for (Eigen::Index k = 0; k < z.size() / 4; ++k)
    out.segment<4>(4 * k) = d.lambda * qmul<double>(z.segment<4>(4 * k), d.q_normalized);
  return out;
}

std::pair<double, VecX> hopf_tv(const DeckData& d, const VecX& z) {
  double r = z.norm();
  return {std::log(r) / std::log(d.lambda), z / r};
}

ModelPtr build_model(const std::string& name, int n) {
  if (name == "flat") return flat_hn(n);
  if (name == "hopf") return hopf(n, 2.0, Quat<double>(std::cos(0.7), 0.0, std::sin(0.7) * 0.6, std::sin(0.7) * 0.8));
  if (name == "hpn") return hpn(n);
  if (name == "deformed-flat") return deformed_flat(n);
  throw ParameterError("unknown model: " + name);
}

}  // namespace hqc
