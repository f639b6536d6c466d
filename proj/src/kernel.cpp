#include "hqc/kernel.hpp"

namespace hqc {

bool ChartBox::contains(const VecX& x) const {
  if (x.size() != lo.size()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!(x[i] > lo[i] && x[i] < hi[i])) return false;
  return true;
}

ChartBox ChartBox::shrunk(double margin) const {
  VecX w = hi - lo;
  return ChartBox{id, lo + margin * w, hi - margin * w};
}

ChartPoint::ChartPoint(const ChartBox& box, VecX x) : coords(std::move(x)), chart_id(box.id) {
  if (coords.size() != box.dim()) throw ShapeError("ChartPoint: dimension mismatch");
  if (!box.contains(coords)) throw DomainError("ChartPoint: point outside chart " + box.id);
}

}  // namespace hqc
