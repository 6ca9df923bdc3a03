#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace nafd {

// Physical and protocol constants for one scenario. Transmit powers are
// stored in watts; SINR formulas use the noise-normalized ratios below.
struct SystemConfig {
  int num_aps = 40;          // access points, half-duplex, N antennas each
  int antennas_per_ap = 2;   // N
  int tx_antennas_fd = 1;    // Nt, full-duplex baseline split
  int rx_antennas_fd = 1;    // Nr, with Nt + Nr = N
  int num_dl_ues = 2;
  int num_ul_ues = 2;
  int coherence_len = 200;   // symbols per coherence block
  int pilot_len = 4;         // training symbols per block
  double bandwidth_hz = 50e6;
  double noise_figure_db = 9.0;
  double noise_temp_k = 290.0;
  double ap_power_w = 1.0;      // max DL transmit power per AP
  double ue_power_w = 0.1;      // max UL transmit power per UE
  double pilot_power_w = 0.1;   // training power per UE
  double qos_dl = 0.2;          // per-UE DL SE floor, bit/s/Hz
  double qos_ul = 0.2;          // per-UE UL SE floor, bit/s/Hz
  double si_over_noise_db = 50.0;  // residual self-interference (FD only)
  double area_side_m = 500.0;
  double min_ap_spacing_m = 50.0;

  static constexpr double kBoltzmann = 1.381e-23;

  double noise_power_w() const {
    return kBoltzmann * noise_temp_k * bandwidth_hz *
           std::pow(10.0, noise_figure_db / 10.0);
  }
  double rho_dl() const { return ap_power_w / noise_power_w(); }
  double rho_ul() const { return ue_power_w / noise_power_w(); }
  double rho_pilot() const { return pilot_power_w / noise_power_w(); }
  double si_over_noise() const {
    return std::pow(10.0, si_over_noise_db / 10.0);
  }
  // Payload fraction of the coherence block.
  double prelog() const {
    return static_cast<double>(coherence_len - pilot_len) / coherence_len;
  }

  void validate() const {
    auto fail = [](const std::string& msg) {
      throw std::invalid_argument("SystemConfig: " + msg);
    };
    if (num_aps < 1) fail("need at least one AP");
    if (antennas_per_ap < 1) fail("antennas_per_ap must be positive");
    if (tx_antennas_fd < 0 || rx_antennas_fd < 0 ||
        tx_antennas_fd + rx_antennas_fd != antennas_per_ap)
      fail("full-duplex antenna split must sum to antennas_per_ap");
    if (num_dl_ues < 0 || num_ul_ues < 0) fail("negative UE count");
    if (pilot_len < 1 || pilot_len >= coherence_len)
      fail("pilot_len must lie in [1, coherence_len)");
    if (bandwidth_hz <= 0 || noise_temp_k <= 0) fail("bad noise parameters");
    if (ap_power_w <= 0 || ue_power_w <= 0 || pilot_power_w <= 0)
      fail("transmit powers must be positive");
    if (qos_dl < 0 || qos_ul < 0) fail("negative QoS target");
    if (area_side_m <= 0) fail("area side must be positive");
    if (min_ap_spacing_m < 0) fail("negative AP spacing");
  }
};

// Power-consumption model parameters (watts unless noted).
struct PowerParams {
  double pa_eff_dl = 0.4;       // AP power-amplifier efficiency
  double pa_eff_ul = 0.3;       // UE power-amplifier efficiency
  double circuit_dl_w = 0.2;    // per DL antenna chain
  double circuit_ul_w = 0.2;    // per UL antenna chain
  double fixed_dl_w = 0.825;    // per AP in DL mode (backhaul link etc.)
  double fixed_ul_w = 0.825;    // per AP in UL mode
  double ue_fixed_dl_w = 0.1;   // per DL UE
  double ue_fixed_ul_w = 0.1;   // per UL UE
  double backhaul_w_per_bps = 0.25e-9;  // traffic-dependent backhaul
  double si_cancel_w = 0.0;     // per receive antenna (FD only)

  void validate() const {
    if (pa_eff_dl <= 0 || pa_eff_ul <= 0)
      throw std::invalid_argument("PowerParams: amplifier efficiency <= 0");
    if (circuit_dl_w < 0 || circuit_ul_w < 0 || fixed_dl_w < 0 ||
        fixed_ul_w < 0 || ue_fixed_dl_w < 0 || ue_fixed_ul_w < 0 ||
        backhaul_w_per_bps < 0 || si_cancel_w < 0)
      throw std::invalid_argument("PowerParams: negative power term");
  }
};

}  // namespace nafd
