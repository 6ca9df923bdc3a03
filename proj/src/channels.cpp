#include "nafd/channels.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "nafd/rng.hpp"

namespace nafd {

double path_gain(double dist_m) {
  double pl_db = -30.5 - 36.7 * std::log10(dist_m);
  return std::pow(10.0, pl_db / 10.0);
}

double estimation_variance(double beta, int pilot_len, double rho_pilot) {
  double tp = pilot_len * rho_pilot;
  return tp * beta * beta / (tp * beta + 1.0);
}

Eigen::MatrixXd estimation_variances(const Eigen::MatrixXd& beta,
                                     int pilot_len, double rho_pilot) {
  return beta.unaryExpr([&](double b) {
    return estimation_variance(b, pilot_len, rho_pilot);
  });
}

namespace detail {

Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::MatrixXd jittered = cov;
  jittered.diagonal().array() += 1e-10;
  llt.compute(jittered);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  throw CovarianceNotPSD(
      "shadowing covariance not factorizable (duplicate UE positions?)");
}

}  // namespace detail

namespace {

constexpr double kShadowStdDb = 4.0;
constexpr double kShadowHalvingM = 9.0;

// Linear gain with shadowing, normalized by noise power.
double link_gain(double dist_m, double shadow_db, double noise_w) {
  return path_gain(dist_m) * std::pow(10.0, shadow_db / 10.0) / noise_w;
}

}  // namespace

LargeScaleChannels large_scale_fading(const NetworkGeometry& geo,
                                      const SystemConfig& cfg,
                                      std::uint64_t seed) {
  const int m_aps = static_cast<int>(geo.ap_pos.size());
  const int kd = static_cast<int>(geo.dl_ue_pos.size());
  const int ku = static_cast<int>(geo.ul_ue_pos.size());
  const double side = geo.area_side_m;
  const double noise = cfg.noise_power_w();

  std::vector<Eigen::Vector2d> ues(geo.dl_ue_pos);
  ues.insert(ues.end(), geo.ul_ue_pos.begin(), geo.ul_ue_pos.end());
  const int k_all = kd + ku;

  // UE-side shadowing covariance, shared by every AP row.
  Eigen::MatrixXd cov(k_all, k_all);
  for (int i = 0; i < k_all; ++i)
    for (int j = 0; j < k_all; ++j) {
      double d = torus_distance(ues[i], ues[j], side);
      cov(i, j) = kShadowStdDb * kShadowStdDb *
                  std::pow(2.0, -d / kShadowHalvingM);
    }
  Eigen::MatrixXd chol = k_all > 0 ? detail::cholesky_with_jitter(cov)
                                   : Eigen::MatrixXd(0, 0);

  Rng rng(derive_seed(seed, /*tag=*/0x66616465));  // fading stream

  LargeScaleChannels ch;
  ch.beta_dl.resize(m_aps, kd);
  ch.beta_ul.resize(m_aps, ku);
  ch.beta_du.resize(kd, ku);
  ch.beta_ap = Eigen::MatrixXd::Zero(m_aps, m_aps);
  ch.si_over_noise = cfg.si_over_noise();

  Eigen::VectorXd raw(k_all);
  for (int m = 0; m < m_aps; ++m) {
    for (int i = 0; i < k_all; ++i) raw(i) = rng.normal();
    Eigen::VectorXd shadow = chol * raw;
    for (int k = 0; k < kd; ++k)
      ch.beta_dl(m, k) = link_gain(
          torus_distance(geo.ap_pos[m], geo.dl_ue_pos[k], side), shadow(k),
          noise);
    for (int l = 0; l < ku; ++l)
      ch.beta_ul(m, l) = link_gain(
          torus_distance(geo.ap_pos[m], geo.ul_ue_pos[l], side),
          shadow(kd + l), noise);
  }

  for (int k = 0; k < kd; ++k)
    for (int l = 0; l < ku; ++l)
      ch.beta_du(k, l) = link_gain(
          torus_distance(geo.dl_ue_pos[k], geo.ul_ue_pos[l], side),
          rng.normal(0.0, kShadowStdDb), noise);

  for (int m = 0; m < m_aps; ++m)
    for (int i = 0; i < m_aps; ++i) {
      if (i == m) continue;  // diagonal handled via si_over_noise
      ch.beta_ap(m, i) = link_gain(
          torus_distance(geo.ap_pos[m], geo.ap_pos[i], side),
          rng.normal(0.0, kShadowStdDb), noise);
    }

  ch.gamma_dl = estimation_variances(ch.beta_dl, cfg.pilot_len,
                                     cfg.rho_pilot());
  ch.gamma_ul = estimation_variances(ch.beta_ul, cfg.pilot_len,
                                     cfg.rho_pilot());
  return ch;
}

}  // namespace nafd
