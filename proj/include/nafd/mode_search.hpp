#pragma once

#include <stdexcept>
#include <vector>

#include "nafd/baselines.hpp"

namespace nafd {

struct InstanceTooLarge : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Outcome of one fixed mode assignment inside the exhaustive search.
struct ModeSearchEntry {
  Eigen::VectorXd a;
  bool feasible = false;
  double objective = 0;  // sum SE or EE of the repaired design
};

struct ModeSearchResult {
  SchemeResult best;
  Eigen::VectorXd best_a;
  std::vector<ModeSearchEntry> entries;  // all 2^M assignments
};

// Optimizes the continuous controls for every one of the 2^M assignments
// and keeps the best feasible outcome. Throws InstanceTooLarge beyond
// M = 8 access points.
ModeSearchResult exhaustive_mode_search(const SystemConfig& cfg,
                                        const LargeScaleChannels& ch,
                                        const PowerParams& pp, Objective obj,
                                        const ScaConfig& sca);

}  // namespace nafd
