#pragma once

#include <Eigen/Dense>

#include "nafd/channels.hpp"
#include "nafd/design_vars.hpp"
#include "nafd/system_config.hpp"

namespace nafd {

// Closed-form per-UE spectral efficiencies (bit/s/Hz) under statistical-CSI
// maximum-ratio processing. A receive combination with all-zero effective
// weights yields SE 0 (no signal, no information), not an error.

Eigen::VectorXd dl_se_nafd(const SystemConfig& cfg,
                           const LargeScaleChannels& ch,
                           const DesignVariables& v);
Eigen::VectorXd ul_se_nafd(const SystemConfig& cfg,
                           const LargeScaleChannels& ch,
                           const DesignVariables& v);

// Half-duplex reference: every AP serves both directions on orthogonal
// halves of the payload, so cross-direction interference disappears and
// the prelog halves. Mode variables are ignored (all APs active).
Eigen::VectorXd dl_se_hd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                         const DesignVariables& v);
Eigen::VectorXd ul_se_hd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                         const DesignVariables& v);

// Full-duplex reference: every AP splits its array into tx_antennas_fd
// transmit and rx_antennas_fd receive chains; residual self-interference
// enters the AP-to-AP term through si_over_noise.
Eigen::VectorXd dl_se_fd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                         const DesignVariables& v);
Eigen::VectorXd ul_se_fd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                         const DesignVariables& v);

// Per-AP fronthaul rate in bit/s for the mode-division operation.
Eigen::VectorXd backhaul_rates(const SystemConfig& cfg,
                               const DesignVariables& v,
                               const Eigen::VectorXd& se_dl,
                               const Eigen::VectorXd& se_ul);

PowerBreakdown power_nafd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                          const DesignVariables& v, const PowerParams& pp,
                          const Eigen::VectorXd& se_dl,
                          const Eigen::VectorXd& se_ul);
// Variant with every AP forwarding all streams (upper-bounds the traffic
// term; used for the fronthaul-budget comparison).
PowerBreakdown power_nafd_full_backhaul(const SystemConfig& cfg,
                                        const LargeScaleChannels& ch,
                                        const DesignVariables& v,
                                        const PowerParams& pp,
                                        const Eigen::VectorXd& se_dl,
                                        const Eigen::VectorXd& se_ul);
PowerBreakdown power_hd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                        const DesignVariables& v, const PowerParams& pp,
                        const Eigen::VectorXd& se_dl,
                        const Eigen::VectorXd& se_ul);
PowerBreakdown power_fd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                        const DesignVariables& v, const PowerParams& pp,
                        const Eigen::VectorXd& se_dl,
                        const Eigen::VectorXd& se_ul);

// bit/J; sum SE in bit/s/Hz, power in watts.
double energy_efficiency(const SystemConfig& cfg, double sum_se,
                         double power_total_w);

// Evaluates SE, power, and EE for the given controls through the closed
// forms of the requested scheme. Single source of truth for reported
// numbers: optimizers re-verify their output through this call.
SchemeResult evaluate_scheme(Scheme scheme, const SystemConfig& cfg,
                             const LargeScaleChannels& ch,
                             const DesignVariables& v, const PowerParams& pp);

namespace detail {
// Parameterized SINR cores shared by all schemes; the optimizer evaluates
// its relaxed iterates through these with scheme-model coefficients.
Eigen::VectorXd dl_se_core(const SystemConfig& cfg,
                           const LargeScaleChannels& ch,
                           const DesignVariables& v, double gain_antennas,
                           bool with_ue_cross, double prelog);
Eigen::VectorXd ul_se_core(const SystemConfig& cfg,
                           const LargeScaleChannels& ch,
                           const DesignVariables& v,
                           const Eigen::VectorXd& mode, double gain_antennas,
                           double ap_cross_antennas, double si_diag,
                           double prelog);
}  // namespace detail

}  // namespace nafd
