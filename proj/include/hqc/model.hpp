#pragma once

// Chart description of a quaternionic manifold (M, Q, nabla, X, nu).
// Every evaluator is available for the scalar levels double, D1, D2, D3 so that
// the bundle constructions can be differentiated up to three times.

#include <memory>
#include <optional>
#include <string>

#include "hqc/kernel.hpp"
#include "hqc/quaternion.hpp"

namespace hqc {

// Deck transformation data of the quaternionic Hopf quotient.
struct DeckData {
  double lambda = 2.0;
  Quat<double> q_original;       // generator A = R_q as supplied
  Quat<double> q_normalized;     // conjugate of q lying on the e^{i theta} circle
  Quat<double> conjugator;       // unit p with q_normalized = p q_original p^{-1}
};

#define HQC_MODEL_EVALUATORS(S)                                  \
  virtual Frame<S> frame(const Vec<S>& x) const = 0;             \
  virtual Christoffel<S> christoffel(const Vec<S>& x) const = 0; \
  virtual Vec<S> field(const Vec<S>& x) const = 0;               \
  virtual S log_density(const Vec<S>& x) const = 0;

class Model {
 public:
  Model(std::string name, int n, ChartBox chart) : name_(std::move(name)), n_(n), chart_(std::move(chart)) {}
  virtual ~Model() = default;

  const std::string& name() const { return name_; }
  int n() const { return n_; }
  int dim() const { return 4 * n_; }
  const ChartBox& chart() const { return chart_; }

  // Exact flow of X with its Jacobian, when known in closed form.
  virtual std::optional<ClosedFormFlow> exact_flow() const { return std::nullopt; }
  virtual std::optional<DeckData> deck() const { return std::nullopt; }
  // Samples where X (or the lifted data) degenerates are rejected.
  virtual bool admissible_sample(const VecX&) const { return true; }

  HQC_MODEL_EVALUATORS(double)
  HQC_MODEL_EVALUATORS(D1)
  HQC_MODEL_EVALUATORS(D2)
  HQC_MODEL_EVALUATORS(D3)

 private:
  std::string name_;
  int n_;
  ChartBox chart_;
};

#undef HQC_MODEL_EVALUATORS

// Dispatches the per-scalar virtuals to member templates of Derived:
// frame_t<S>, christoffel_t<S>, field_t<S>, log_density_t<S>.
#define HQC_MODEL_DISPATCH(S)                                                                                  \
  Frame<S> frame(const Vec<S>& x) const override { return self().template frame_t<S>(x); }                   \
  Christoffel<S> christoffel(const Vec<S>& x) const override { return self().template christoffel_t<S>(x); } \
  Vec<S> field(const Vec<S>& x) const override { return self().template field_t<S>(x); }                     \
  S log_density(const Vec<S>& x) const override { return self().template log_density_t<S>(x); }

template <class Derived>
class ModelBase : public Model {
 public:
  using Model::Model;
  HQC_MODEL_DISPATCH(double)
  HQC_MODEL_DISPATCH(D1)
  HQC_MODEL_DISPATCH(D2)
  HQC_MODEL_DISPATCH(D3)

 private:
  const Derived& self() const { return static_cast<const Derived&>(*this); }
};

#undef HQC_MODEL_DISPATCH

using ModelPtr = std::shared_ptr<const Model>;

}  // namespace hqc
