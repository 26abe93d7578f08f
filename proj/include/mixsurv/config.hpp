#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "mixsurv/experiment.hpp"

namespace mixsurv {

// Settings for Gaussian-limit sampling from the command line.
struct GpConfig {
  std::size_t grid_size = 257;
  // The direct method runs on every `direct_stride`-th point of the grid.
  std::size_t direct_stride = 8;
  double tau_epsilon = 0.05;
};

/// Parsed configuration file. Sections: `model`, `experiment`, `gp`; absent
/// sections keep defaults. Unknown keys raise ConfigError naming their path.
struct RunConfig {
  ExperimentConfig experiment;
  GpConfig gp;
  bool has_model = false;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

}  // namespace mixsurv
