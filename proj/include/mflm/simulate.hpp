#pragma once

// Synthetic designs with p = 7 heterogeneous covariates: a Brownian motion,
// a random smooth curve and its square, a linearly mixed uniform 4-vector,
// a Gaussian scalar and two scalar summaries of the curves.

#include <cstdint>
#include <vector>

#include "mflm/hilbert.hpp"

namespace mflm {

struct SimConfig {
  int example = 1;  // 1: J* = {1}; 2: J* = {1, 4, 7}
  Index n = 1000;
  double sigma = 0.01;
  Index grid_size = 100;  // uniform on [0, 1]
  std::uint64_t seed = 0;
  /// beta* = 0 regardless of `example`.
  bool null_model = false;
};

struct Simulation {
  Dataset data;  // uncentered
  Coefficient beta_star;
  std::vector<std::size_t> support;  // zero-based block indices
};

Simulation simulate(const SimConfig& config);

/// Block space of the simulated design for a given grid size.
SpacePtr simulation_space(Index grid_size);

/// beta* of an example on the simulation space.
Coefficient true_coefficient(const SpacePtr& space, int example);

}  // namespace mflm
