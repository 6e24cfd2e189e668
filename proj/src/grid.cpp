#include "pdmp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pdmp {

StateGrid::StateGrid(std::vector<std::vector<double>> axes, std::vector<Vec> boundary_points)
    : axes_(std::move(axes)), boundary_points_(std::move(boundary_points)) {
  if (axes_.empty() || axes_.size() > static_cast<std::size_t>(kMaxStateDim))
    throw ContractViolation("StateGrid: dimension must be in [1, " +
                            std::to_string(kMaxStateDim) + "]");
  for (const auto& axis : axes_) {
    if (axis.empty()) throw ContractViolation("StateGrid: empty axis");
    for (std::size_t i = 1; i < axis.size(); ++i)
      if (!(axis[i] > axis[i - 1]))
        throw ContractViolation("StateGrid: axis coordinates must be strictly increasing");
  }
  strides_.assign(axes_.size(), 1);
  for (std::size_t d = axes_.size(); d-- > 1;)
    strides_[d - 1] = strides_[d] * axes_[d].size();
  size_ = strides_[0] * axes_[0].size();
}

Vec StateGrid::point(std::size_t index) const {
  Vec x(dim());
  for (int d = 0; d < dim(); ++d) {
    std::size_t i = (index / strides_[d]) % axes_[d].size();
    x[d] = axes_[d][i];
  }
  return x;
}

namespace {

// Index of the nearest coordinate on one sorted axis.
std::size_t nearest_on_axis(const std::vector<double>& axis, double v) {
  auto it = std::lower_bound(axis.begin(), axis.end(), v);
  if (it == axis.end()) return axis.size() - 1;
  if (it == axis.begin()) return 0;
  std::size_t hi = static_cast<std::size_t>(it - axis.begin());
  return (v - axis[hi - 1] <= axis[hi] - v) ? hi - 1 : hi;
}

}  // namespace

std::size_t StateGrid::nearest_index(const Vec& x) const {
  std::size_t index = 0;
  for (int d = 0; d < dim(); ++d) index += strides_[d] * nearest_on_axis(axes_[d], x[d]);
  return index;
}

std::size_t StateGrid::nearest_boundary_index(const Vec& z) const {
  if (boundary_points_.empty())
    throw ContractViolation("StateGrid: no boundary points");
  std::size_t best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < boundary_points_.size(); ++i) {
    double dist = (boundary_points_[i] - z).squaredNorm();
    if (dist < best_dist) {
      best_dist = dist;
      best = i;
    }
  }
  return best;
}

std::size_t StateGrid::interpolation_stencil(const Vec& x, std::size_t* indices,
                                             double* weights) const {
  // Per axis: cell index and barycentric weight, clamped to the hull.
  std::size_t lo[kMaxStateDim];
  double t[kMaxStateDim];
  for (int d = 0; d < dim(); ++d) {
    const auto& axis = axes_[d];
    if (axis.size() == 1) {
      lo[d] = 0;
      t[d] = 0.0;
      continue;
    }
    double v = std::clamp(x[d], axis.front(), axis.back());
    auto it = std::upper_bound(axis.begin(), axis.end(), v);
    std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - axis.begin()), 1,
                                             axis.size() - 1);
    lo[d] = hi - 1;
    t[d] = (v - axis[lo[d]]) / (axis[hi] - axis[lo[d]]);
  }
  std::size_t count = std::size_t{1} << dim();
  for (std::size_t corner = 0; corner < count; ++corner) {
    std::size_t index = 0;
    double w = 1.0;
    for (int d = 0; d < dim(); ++d) {
      bool upper = (corner >> d) & 1u;
      if (axes_[d].size() == 1 && upper) {
        w = 0.0;
        break;
      }
      index += strides_[d] * (lo[d] + (upper ? 1 : 0));
      w *= upper ? t[d] : 1.0 - t[d];
    }
    indices[corner] = index;
    weights[corner] = w;
  }
  return count;
}

std::shared_ptr<const StateGrid> StateGrid::uniform_1d(double lo, double hi, std::size_t count,
                                                       std::vector<double> boundary) {
  std::vector<double> axis(count);
  for (std::size_t i = 0; i < count; ++i)
    axis[i] = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / (count - 1);
  std::vector<Vec> bpts;
  bpts.reserve(boundary.size());
  for (double z : boundary) bpts.push_back(vec1(z));
  return std::make_shared<StateGrid>(std::vector<std::vector<double>>{std::move(axis)},
                                     std::move(bpts));
}

GridFunction::GridFunction(std::shared_ptr<const StateGrid> grid, double fill)
    : grid_(std::move(grid)),
      values_(grid_->size(), fill),
      boundary_values_(grid_->boundary_points().size(), fill) {}

GridFunction::GridFunction(std::shared_ptr<const StateGrid> grid, std::vector<double> values,
                           std::vector<double> boundary_values)
    : grid_(std::move(grid)),
      values_(std::move(values)),
      boundary_values_(std::move(boundary_values)) {
  if (values_.size() != grid_->size() ||
      boundary_values_.size() != grid_->boundary_points().size())
    throw ContractViolation("GridFunction: value array sizes do not match grid");
}

double GridFunction::interpolate(const Vec& x) const {
  std::size_t indices[StateGrid::kMaxStencil];
  double weights[StateGrid::kMaxStencil];
  std::size_t n = grid_->interpolation_stencil(x, indices, weights);
  double out = 0.0;
  for (std::size_t i = 0; i < n; ++i) out += weights[i] * values_[indices[i]];
  return out;
}

double GridFunction::boundary_value(const Vec& z) const {
  return boundary_values_[grid_->nearest_boundary_index(z)];
}

bool GridFunction::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  for (double v : boundary_values_)
    if (!std::isfinite(v)) return false;
  return true;
}

double g_norm(const GridFunction& v, const GridFunction& g) {
  double out = 0.0;
  for (std::size_t i = 0; i < v.values().size(); ++i)
    out = std::max(out, std::abs(v.values()[i]) / g.values()[i]);
  for (std::size_t i = 0; i < v.boundary_values().size(); ++i)
    out = std::max(out, std::abs(v.boundary_values()[i]) / g.boundary_values()[i]);
  return out;
}

double sup_norm(const GridFunction& v) {
  double out = 0.0;
  for (double x : v.values()) out = std::max(out, std::abs(x));
  for (double x : v.boundary_values()) out = std::max(out, std::abs(x));
  return out;
}

double g_norm_difference(const GridFunction& a, const GridFunction& b, const GridFunction& g) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i)
    out = std::max(out, std::abs(a.values()[i] - b.values()[i]) / g.values()[i]);
  for (std::size_t i = 0; i < a.boundary_values().size(); ++i)
    out = std::max(out,
                   std::abs(a.boundary_values()[i] - b.boundary_values()[i]) /
                       g.boundary_values()[i]);
  return out;
}

double max_abs_difference(const GridFunction& a, const GridFunction& b) {
  double out = 0.0;
  for (std::size_t i = 0; i < a.values().size(); ++i)
    out = std::max(out, std::abs(a.values()[i] - b.values()[i]));
  for (std::size_t i = 0; i < a.boundary_values().size(); ++i)
    out = std::max(out, std::abs(a.boundary_values()[i] - b.boundary_values()[i]));
  return out;
}

}  // namespace pdmp
