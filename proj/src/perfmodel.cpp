#include "nafd/perfmodel.hpp"

#include <cmath>

namespace nafd {

std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::kNafd: return "nafd";
    case Scheme::kRvfd: return "rvfd";
    case Scheme::kGvfd: return "gvfd";
    case Scheme::kHd: return "hd";
    case Scheme::kFd: return "fd";
  }
  return "?";
}

std::string to_string(Objective o) {
  return o == Objective::kSumSe ? "se" : "ee";
}

namespace {

double log2_1p(double sinr) { return std::log2(1.0 + sinr); }

}  // namespace

namespace detail {

// Shared DL SINR core. gain_antennas is the coherent-combining antenna
// count on the transmit side; with_ue_cross includes UL-UE leakage.
Eigen::VectorXd dl_se_core(const SystemConfig& cfg,
                           const LargeScaleChannels& ch,
                           const DesignVariables& v, double gain_antennas,
                           bool with_ue_cross, double prelog) {
  const int kd = static_cast<int>(ch.beta_dl.cols());
  const int ku = static_cast<int>(ch.beta_ul.cols());
  const double rho_d = cfg.rho_dl();
  const double rho_u = cfg.rho_ul();
  Eigen::VectorXd se(kd);
  for (int k = 0; k < kd; ++k) {
    double desired = (v.theta.col(k).array() * ch.gamma_dl.col(k).array()).sum();
    double xi = gain_antennas * std::sqrt(rho_d) * desired;
    double bu_di = 0;
    for (int kp = 0; kp < kd; ++kp)
      bu_di += (v.theta.col(kp).array().square() * ch.beta_dl.col(k).array() *
                ch.gamma_dl.col(kp).array())
                   .sum();
    double omega = rho_d * gain_antennas * bu_di + 1.0;
    if (with_ue_cross && ku > 0)
      omega += rho_u *
               (v.varsigma.array() * ch.beta_du.row(k).transpose().array()).sum();
    se(k) = prelog * log2_1p(xi * xi / omega);
  }
  return se;
}

// Shared UL SINR core. mode is the per-AP receive gate (b for the
// mode-division scheme, all-ones otherwise); ap_cross_antennas scales the
// AP-to-AP leakage term (0 disables it); si_diag is the residual
// self-interference added on the AP-to-AP diagonal.
Eigen::VectorXd ul_se_core(const SystemConfig& cfg,
                           const LargeScaleChannels& ch,
                           const DesignVariables& v,
                           const Eigen::VectorXd& mode, double gain_antennas,
                           double ap_cross_antennas, double si_diag,
                           double prelog) {
  const int m_aps = static_cast<int>(ch.beta_ul.rows());
  const int kd = static_cast<int>(ch.beta_dl.cols());
  const int ku = static_cast<int>(ch.beta_ul.cols());
  const double rho_d = cfg.rho_dl();
  const double rho_u = cfg.rho_ul();
  Eigen::VectorXd se(ku);
  for (int l = 0; l < ku; ++l) {
    double coh = 0;
    for (int m = 0; m < m_aps; ++m)
      coh += std::sqrt(mode(m) * v.varsigma(l)) * v.alpha(m, l) *
             ch.gamma_ul(m, l);
    double num = gain_antennas * rho_u * coh * coh;

    double den = 0;
    for (int m = 0; m < m_aps; ++m) {
      double w2 = mode(m) * v.alpha(m, l) * v.alpha(m, l) * ch.gamma_ul(m, l);
      if (w2 == 0.0) continue;
      double ue_int = 0;
      for (int q = 0; q < ku; ++q)
        ue_int += v.varsigma(q) * ch.beta_ul(m, q);
      den += rho_u * w2 * ue_int;
      if (ap_cross_antennas > 0) {
        double ap_int = 0;
        for (int i = 0; i < m_aps; ++i) {
          double b_ap = (i == m) ? si_diag : ch.beta_ap(m, i);
          if (b_ap == 0.0) continue;
          double tx = 0;
          for (int k = 0; k < kd; ++k)
            tx += v.theta(i, k) * v.theta(i, k) * ch.gamma_dl(i, k);
          ap_int += b_ap * tx;
        }
        den += rho_d * ap_cross_antennas * w2 * ap_int;
      }
      den += w2;  // combined noise
    }
    se(l) = den > 0 ? prelog * log2_1p(num / den) : 0.0;
  }
  return se;
}

}  // namespace detail

using detail::dl_se_core;
using detail::ul_se_core;

Eigen::VectorXd dl_se_nafd(const SystemConfig& cfg,
                           const LargeScaleChannels& ch,
                           const DesignVariables& v) {
  return dl_se_core(cfg, ch, v, cfg.antennas_per_ap, /*with_ue_cross=*/true,
                    cfg.prelog());
}

Eigen::VectorXd ul_se_nafd(const SystemConfig& cfg,
                           const LargeScaleChannels& ch,
                           const DesignVariables& v) {
  return ul_se_core(cfg, ch, v, v.b, cfg.antennas_per_ap, cfg.antennas_per_ap,
                    /*si_diag=*/0.0, cfg.prelog());
}

Eigen::VectorXd dl_se_hd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                         const DesignVariables& v) {
  return dl_se_core(cfg, ch, v, cfg.antennas_per_ap, /*with_ue_cross=*/false,
                    0.5 * cfg.prelog());
}

Eigen::VectorXd ul_se_hd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                         const DesignVariables& v) {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(ch.beta_ul.rows());
  return ul_se_core(cfg, ch, v, ones, cfg.antennas_per_ap,
                    /*ap_cross_antennas=*/0.0, /*si_diag=*/0.0,
                    0.5 * cfg.prelog());
}

Eigen::VectorXd dl_se_fd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                         const DesignVariables& v) {
  return dl_se_core(cfg, ch, v, cfg.tx_antennas_fd, /*with_ue_cross=*/true,
                    cfg.prelog());
}

Eigen::VectorXd ul_se_fd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                         const DesignVariables& v) {
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(ch.beta_ul.rows());
  return ul_se_core(cfg, ch, v, ones, cfg.rx_antennas_fd, cfg.rx_antennas_fd,
                    ch.si_over_noise, cfg.prelog());
}

Eigen::VectorXd backhaul_rates(const SystemConfig& cfg,
                               const DesignVariables& v,
                               const Eigen::VectorXd& se_dl,
                               const Eigen::VectorXd& se_ul) {
  const int m_aps = static_cast<int>(v.a.size());
  double sum_dl = se_dl.sum();
  double sum_ul = se_ul.sum();
  Eigen::VectorXd r(m_aps);
  for (int m = 0; m < m_aps; ++m)
    r(m) = cfg.bandwidth_hz * (v.a(m) * sum_ul + v.b(m) * sum_dl);
  return r;
}

namespace {

// Mode-independent power pieces shared by all schemes.
void fill_transmit_terms(const SystemConfig& cfg, const LargeScaleChannels& ch,
                         const DesignVariables& v, const PowerParams& pp,
                         double dl_antennas, PowerBreakdown* out) {
  const double noise = cfg.noise_power_w();
  double dl_sum = 0;
  for (int m = 0; m < ch.beta_dl.rows(); ++m)
    dl_sum +=
        (ch.gamma_dl.row(m).array() * v.theta.row(m).array().square()).sum();
  out->transmit_ap = dl_antennas * cfg.rho_dl() * noise / pp.pa_eff_dl * dl_sum;
  out->transmit_ue = cfg.rho_ul() * noise / pp.pa_eff_ul * v.varsigma.sum();
  out->ue_fixed = ch.beta_dl.cols() * pp.ue_fixed_dl_w +
                  ch.beta_ul.cols() * pp.ue_fixed_ul_w;
}

}  // namespace

PowerBreakdown power_nafd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                          const DesignVariables& v, const PowerParams& pp,
                          const Eigen::VectorXd& se_dl,
                          const Eigen::VectorXd& se_ul) {
  PowerBreakdown p;
  fill_transmit_terms(cfg, ch, v, pp, cfg.antennas_per_ap, &p);
  const int m_aps = static_cast<int>(v.a.size());
  const int n = cfg.antennas_per_ap;
  double sum_dl = se_dl.sum();
  double sum_ul = se_ul.sum();
  for (int m = 0; m < m_aps; ++m) {
    p.circuit += v.a(m) * n * pp.circuit_dl_w + v.b(m) * n * pp.circuit_ul_w;
    p.fixed_backhaul += v.a(m) * pp.fixed_dl_w + v.b(m) * pp.fixed_ul_w;
    // A receive-mode AP forwards UL pilots/data, a transmit-mode AP
    // receives DL payload from the CPU.
    p.traffic_backhaul += cfg.bandwidth_hz *
                          (v.b(m) * sum_ul + v.a(m) * sum_dl) *
                          pp.backhaul_w_per_bps;
  }
  return p;
}

PowerBreakdown power_nafd_full_backhaul(const SystemConfig& cfg,
                                        const LargeScaleChannels& ch,
                                        const DesignVariables& v,
                                        const PowerParams& pp,
                                        const Eigen::VectorXd& se_dl,
                                        const Eigen::VectorXd& se_ul) {
  PowerBreakdown p = power_nafd(cfg, ch, v, pp, se_dl, se_ul);
  p.traffic_backhaul = cfg.bandwidth_hz * (se_dl.sum() + se_ul.sum()) *
                       v.a.size() * pp.backhaul_w_per_bps;
  return p;
}

PowerBreakdown power_hd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                        const DesignVariables& v, const PowerParams& pp,
                        const Eigen::VectorXd& se_dl,
                        const Eigen::VectorXd& se_ul) {
  PowerBreakdown p;
  fill_transmit_terms(cfg, ch, v, pp, cfg.antennas_per_ap, &p);
  const int m_aps = static_cast<int>(ch.beta_dl.rows());
  const int n = cfg.antennas_per_ap;
  // Every AP keeps both chains; each direction is active half the time.
  p.circuit = m_aps * n * (pp.circuit_dl_w + pp.circuit_ul_w);
  p.fixed_backhaul = m_aps * (pp.fixed_dl_w + pp.fixed_ul_w);
  p.traffic_backhaul = cfg.bandwidth_hz * (se_dl.sum() + se_ul.sum()) * m_aps *
                       pp.backhaul_w_per_bps;
  p.transmit_ap *= 0.5;
  p.transmit_ue *= 0.5;
  p.ue_fixed *= 0.5;
  p.circuit *= 0.5;
  p.fixed_backhaul *= 0.5;
  p.traffic_backhaul *= 0.5;
  return p;
}

PowerBreakdown power_fd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                        const DesignVariables& v, const PowerParams& pp,
                        const Eigen::VectorXd& se_dl,
                        const Eigen::VectorXd& se_ul) {
  PowerBreakdown p;
  fill_transmit_terms(cfg, ch, v, pp, cfg.tx_antennas_fd, &p);
  const int m_aps = static_cast<int>(ch.beta_dl.rows());
  p.circuit = m_aps * (cfg.tx_antennas_fd * pp.circuit_dl_w +
                       cfg.rx_antennas_fd * pp.circuit_ul_w);
  p.fixed_backhaul = m_aps * (pp.fixed_dl_w + pp.fixed_ul_w);
  p.traffic_backhaul = cfg.bandwidth_hz * (se_dl.sum() + se_ul.sum()) * m_aps *
                       pp.backhaul_w_per_bps;
  p.si_cancellation = m_aps * cfg.rx_antennas_fd * pp.si_cancel_w;
  return p;
}

double energy_efficiency(const SystemConfig& cfg, double sum_se,
                         double power_total_w) {
  if (power_total_w <= 0) return 0.0;
  return cfg.bandwidth_hz * sum_se / (cfg.prelog() * power_total_w);
}

SchemeResult evaluate_scheme(Scheme scheme, const SystemConfig& cfg,
                             const LargeScaleChannels& ch,
                             const DesignVariables& v, const PowerParams& pp) {
  SchemeResult r;
  r.scheme = scheme;
  r.vars = v;
  switch (scheme) {
    case Scheme::kNafd:
    case Scheme::kRvfd:
    case Scheme::kGvfd:
      r.se_dl = dl_se_nafd(cfg, ch, v);
      r.se_ul = ul_se_nafd(cfg, ch, v);
      r.power = power_nafd(cfg, ch, v, pp, r.se_dl, r.se_ul);
      break;
    case Scheme::kHd:
      r.se_dl = dl_se_hd(cfg, ch, v);
      r.se_ul = ul_se_hd(cfg, ch, v);
      r.power = power_hd(cfg, ch, v, pp, r.se_dl, r.se_ul);
      break;
    case Scheme::kFd:
      r.se_dl = dl_se_fd(cfg, ch, v);
      r.se_ul = ul_se_fd(cfg, ch, v);
      r.power = power_fd(cfg, ch, v, pp, r.se_dl, r.se_ul);
      break;
  }
  r.sum_se = r.se_dl.sum() + r.se_ul.sum();
  r.power_total_w = r.power.total();
  r.energy_eff = energy_efficiency(cfg, r.sum_se, r.power_total_w);
  r.feasible = true;
  return r;
}

}  // namespace nafd
