#pragma once

#include "pdmp/types.hpp"

#include <cstddef>
#include <memory>
#include <vector>

namespace pdmp {

// Rectilinear grid over the interior of the state space plus the list of
// reachable boundary points (flow images of grid points with a finite hit
// time). Interior points form the tensor product of the per-axis coordinates,
// indexed row-major with the last axis fastest.
class StateGrid {
 public:
  StateGrid(std::vector<std::vector<double>> axes, std::vector<Vec> boundary_points);

  int dim() const { return static_cast<int>(axes_.size()); }
  std::size_t size() const { return size_; }
  const std::vector<std::vector<double>>& axes() const { return axes_; }
  const std::vector<Vec>& boundary_points() const { return boundary_points_; }

  Vec point(std::size_t index) const;
  std::size_t nearest_index(const Vec& x) const;
  std::size_t nearest_boundary_index(const Vec& z) const;

  // Multilinear interpolation stencil at x, clamped to the grid hull.
  // Writes up to 2^dim (index, weight) pairs; returns the count.
  std::size_t interpolation_stencil(const Vec& x, std::size_t* indices, double* weights) const;

  static constexpr std::size_t kMaxStencil = std::size_t{1} << kMaxStateDim;

  // Convenience for 1-D grids.
  static std::shared_ptr<const StateGrid> uniform_1d(double lo, double hi, std::size_t count,
                                                     std::vector<double> boundary = {});

 private:
  std::vector<std::vector<double>> axes_;
  std::vector<Vec> boundary_points_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
};

// A real-valued function represented by its values on a StateGrid: multilinear
// interpolation on the interior, nearest-point lookup on the boundary set.
class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(std::shared_ptr<const StateGrid> grid, double fill = 0.0);
  GridFunction(std::shared_ptr<const StateGrid> grid, std::vector<double> values,
               std::vector<double> boundary_values);

  const std::shared_ptr<const StateGrid>& grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& boundary_values() const { return boundary_values_; }
  std::vector<double>& boundary_values() { return boundary_values_; }

  double operator[](std::size_t index) const { return values_[index]; }
  double& operator[](std::size_t index) { return values_[index]; }

  double interpolate(const Vec& x) const;
  double boundary_value(const Vec& z) const;

  bool all_finite() const;

  // Builds values by evaluating fn at every interior and boundary point.
  template <typename Fn>
  static GridFunction tabulate(std::shared_ptr<const StateGrid> grid, Fn&& fn) {
    GridFunction out(grid);
    for (std::size_t i = 0; i < grid->size(); ++i) out.values_[i] = fn(grid->point(i));
    for (std::size_t i = 0; i < grid->boundary_points().size(); ++i)
      out.boundary_values_[i] = fn(grid->boundary_points()[i]);
    return out;
  }

 private:
  std::shared_ptr<const StateGrid> grid_;
  std::vector<double> values_;
  std::vector<double> boundary_values_;
};

// Weighted supremum norm max |v| / g over all interior and boundary points.
double g_norm(const GridFunction& v, const GridFunction& g);

// Plain sup norm over interior and boundary values.
double sup_norm(const GridFunction& v);

// Weighted norm of the difference a - b.
double g_norm_difference(const GridFunction& a, const GridFunction& b, const GridFunction& g);

double max_abs_difference(const GridFunction& a, const GridFunction& b);

}  // namespace pdmp
