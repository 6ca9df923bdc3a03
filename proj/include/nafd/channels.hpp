#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>

#include "nafd/geometry.hpp"
#include "nafd/system_config.hpp"

namespace nafd {

// Shadowing covariance could not be factorized even after jitter;
// usually means duplicated UE positions in a hand-built geometry.
struct CovarianceNotPSD : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Large-scale propagation state for one realization. All gains are
// normalized by the noise power, so SINR formulas use them directly.
struct LargeScaleChannels {
  Eigen::MatrixXd beta_dl;   // num_aps x num_dl_ues
  Eigen::MatrixXd beta_ul;   // num_aps x num_ul_ues
  Eigen::MatrixXd beta_du;   // num_dl_ues x num_ul_ues (UE-to-UE)
  Eigen::MatrixXd beta_ap;   // num_aps x num_aps, zero diagonal
  double si_over_noise = 0;  // replaces beta_ap diagonal for full duplex
  Eigen::MatrixXd gamma_dl;  // channel-estimate variance per element
  Eigen::MatrixXd gamma_ul;
};

// Distance-dependent path gain (linear scale, before shadowing and noise
// normalization): -30.5 - 36.7 log10(d / 1 m) in dB.
double path_gain(double dist_m);

// MMSE estimate variance per element from the (normalized) link gain.
double estimation_variance(double beta, int pilot_len, double rho_pilot);
Eigen::MatrixXd estimation_variances(const Eigen::MatrixXd& beta,
                                     int pilot_len, double rho_pilot);

// Draws shadowing and assembles all normalized gains for one geometry.
// AP-to-UE shadowing is correlated across UEs seen from the same AP
// (variance 16 dB^2, halving distance 9 m) and independent across APs;
// UE-to-UE and AP-to-AP links use independent shadowing per directed pair.
LargeScaleChannels large_scale_fading(const NetworkGeometry& geo,
                                      const SystemConfig& cfg,
                                      std::uint64_t seed);

namespace detail {
// Lower-triangular factor of a symmetric PSD matrix; adds 1e-10 jitter on
// the diagonal once if the plain factorization fails, then throws.
Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& cov);
}  // namespace detail

}  // namespace nafd
