#pragma once

#include <cstdint>
#include <vector>

#include "nafd/channels.hpp"
#include "nafd/design_vars.hpp"
#include "nafd/sca.hpp"
#include "nafd/system_config.hpp"

namespace nafd {

// Working state of the greedy mode assignment: a partition of the AP
// indices into uplink, downlink, and not-yet-assigned.
struct ApSets {
  std::vector<int> a_ul, a_dl, a_unassigned;
};

// Independent fair-coin mode draw per AP; only a and b are populated.
DesignVariables random_modes(int num_aps, std::uint64_t seed);

// Greedy assignment: repeatedly gives one unassigned AP the mode whose
// candidate sum SE (fixed full-power controls, unassigned APs absent from
// both service and interference) is largest; equal candidates prefer UL.
ApSets greedy_modes(const SystemConfig& cfg, const LargeScaleChannels& ch);

// Full-power controls used by the greedy search and the GvFD evaluation:
// theta spreads each DL AP's power evenly over DL UEs, varsigma = 1,
// alpha = 1 on UL APs.
DesignVariables fixed_controls(const SystemConfig& cfg,
                               const LargeScaleChannels& ch,
                               const Eigen::VectorXd& a,
                               const Eigen::VectorXd& b);

// Comparison schemes. Each returns a SchemeResult re-evaluated through the
// closed forms; a QoS shortfall zeroes SE and EE and clears `feasible`.
SchemeResult optimize_rvfd(const SystemConfig& cfg,
                           const LargeScaleChannels& ch, const PowerParams& pp,
                           Objective obj, const ScaConfig& sca);
SchemeResult evaluate_gvfd(const SystemConfig& cfg,
                           const LargeScaleChannels& ch,
                           const PowerParams& pp);
SchemeResult optimize_hd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                         const PowerParams& pp, Objective obj,
                         const ScaConfig& sca);
SchemeResult optimize_fd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                         const PowerParams& pp, Objective obj,
                         const ScaConfig& sca);
// Joint optimization entry point used by the harness.
SchemeResult optimize_nafd(const SystemConfig& cfg,
                           const LargeScaleChannels& ch, const PowerParams& pp,
                           Objective obj, const ScaConfig& sca);

}  // namespace nafd
