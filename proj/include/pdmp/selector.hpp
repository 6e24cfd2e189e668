#pragma once

#include "pdmp/grid.hpp"
#include "pdmp/model.hpp"

#include <cstdint>
#include <vector>

namespace pdmp {

// Feedback policy as action-index tables on the grid: one entry per interior
// grid point and one per boundary point. Indices refer to the model's feasible
// action list at the point, which makes tie-breaking and serialization
// deterministic.
struct FeedbackSelector {
  std::vector<std::int32_t> interior;
  std::vector<std::int32_t> boundary;

  Action interior_action(const ModelSpec& model, const StateGrid& grid, const Vec& x) const {
    std::size_t i = grid.nearest_index(x);
    return model.action_set(grid.point(i), false)[static_cast<std::size_t>(interior[i])];
  }

  Action boundary_action(const ModelSpec& model, const StateGrid& grid, const Vec& z) const {
    std::size_t i = grid.nearest_boundary_index(z);
    return model.action_set(grid.boundary_points()[i], true)[static_cast<std::size_t>(boundary[i])];
  }
};

inline FeedbackSelector constant_selector(const StateGrid& grid, std::int32_t action_index) {
  FeedbackSelector out;
  out.interior.assign(grid.size(), action_index);
  out.boundary.assign(grid.boundary_points().size(), action_index);
  return out;
}

}  // namespace pdmp
