#pragma once

#include "pdmp/model.hpp"
#include "pdmp/operators.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace pdmp {

// A fully assembled problem instance: the model, its grid, the declared
// witnesses, and the numeric configuration. Immutable after construction.
struct ModelBundle {
  std::string id;
  ModelSpec model;
  std::shared_ptr<const StateGrid> grid;
  GrowthWitness growth;
  IntegrabilityWitness integrability;
  QuadratureConfig quad;
  std::uint64_t seed = 1;
  std::uint64_t config_hash = 0;
};

}  // namespace pdmp
