#pragma once

#include <cstdint>
#include <vector>

#include "nafd/channels.hpp"
#include "nafd/design_vars.hpp"
#include "nafd/lifted.hpp"
#include "nafd/system_config.hpp"

namespace nafd {

// One Monte-Carlo SE estimate with a 3-sigma half-width from batch means.
struct McEstimate {
  double se = 0;
  double half_width = 0;
};

// Small-scale-fading simulation of the achievable-SE bounds: channel
// estimates, estimation errors, UE-to-UE fades, receiver noise, and
// AP-to-AP leakage are sampled from their distributions and the bound is
// evaluated from the sample moments. Agreement with the closed forms is
// the correctness check for both sides.
std::vector<McEstimate> mc_dl_se(const SystemConfig& cfg,
                                 const LargeScaleChannels& ch,
                                 const DesignVariables& v,
                                 const SchemeModel& model, long n_samples,
                                 std::uint64_t seed);
std::vector<McEstimate> mc_ul_se(const SystemConfig& cfg,
                                 const LargeScaleChannels& ch,
                                 const DesignVariables& v,
                                 const SchemeModel& model, long n_samples,
                                 std::uint64_t seed);

// Mode-division defaults.
std::vector<McEstimate> mc_dl_se(const SystemConfig& cfg,
                                 const LargeScaleChannels& ch,
                                 const DesignVariables& v, long n_samples,
                                 std::uint64_t seed);
std::vector<McEstimate> mc_ul_se(const SystemConfig& cfg,
                                 const LargeScaleChannels& ch,
                                 const DesignVariables& v, long n_samples,
                                 std::uint64_t seed);

// Sample mean of the squared norm-square of a CN(0, gamma I_n) vector.
// Its closed form n(n+1)gamma^2 anchors the estimator distributions.
double mc_fourth_moment(int n_antennas, double gamma, long n_samples,
                        std::uint64_t seed);

}  // namespace nafd
