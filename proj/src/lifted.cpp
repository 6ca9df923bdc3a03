#include "nafd/lifted.hpp"

#include <algorithm>
#include <cmath>

#include "nafd/perfmodel.hpp"
#include "nafd/rng.hpp"

namespace nafd {

SchemeModel make_scheme_model(Scheme s, const SystemConfig& cfg,
                              const LargeScaleChannels& ch) {
  SchemeModel m;
  m.scheme = s;
  const double n = cfg.antennas_per_ap;
  switch (s) {
    case Scheme::kNafd:
    case Scheme::kRvfd:
    case Scheme::kGvfd:
      m.modes_free = true;
      m.dl_antennas = n;
      m.ul_antennas = n;
      m.dl_ue_cross = true;
      m.ap_cross_antennas = n;
      m.si_diag = 0;
      m.prelog = cfg.prelog();
      break;
    case Scheme::kHd:
      m.modes_free = false;
      m.fixed_a = Eigen::VectorXd::Ones(cfg.num_aps);
      m.fixed_b = Eigen::VectorXd::Ones(cfg.num_aps);
      m.dl_antennas = n;
      m.ul_antennas = n;
      m.dl_ue_cross = false;
      m.ap_cross_antennas = 0;
      m.si_diag = 0;
      m.prelog = 0.5 * cfg.prelog();
      m.half_power = true;
      break;
    case Scheme::kFd:
      m.modes_free = false;
      m.fixed_a = Eigen::VectorXd::Ones(cfg.num_aps);
      m.fixed_b = Eigen::VectorXd::Ones(cfg.num_aps);
      m.dl_antennas = cfg.tx_antennas_fd;
      m.ul_antennas = cfg.rx_antennas_fd;
      m.dl_ue_cross = true;
      m.ap_cross_antennas = cfg.rx_antennas_fd;
      m.si_diag = ch.si_over_noise;
      m.prelog = cfg.prelog();
      break;
  }
  return m;
}

SchemeModel make_fixed_mode_model(const SystemConfig& cfg,
                                  const LargeScaleChannels& ch,
                                  const Eigen::VectorXd& a_fixed) {
  SchemeModel m = make_scheme_model(Scheme::kNafd, cfg, ch);
  m.modes_free = false;
  m.fixed_a = a_fixed;
  m.fixed_b = Eigen::VectorXd::Ones(a_fixed.size()) - a_fixed;
  return m;
}

LiftedCardinality lifted_problem_cardinality(int m_aps, int kd, int ku) {
  const long m = m_aps, d = kd, u = ku;
  LiftedCardinality c;
  // a, b; varsigma, q; theta, eta_bar; alpha + five per-(m,l) auxiliaries;
  // omega_hat; eta_hat.
  c.vars = 2 * m + (d + 2 * u) + 2 * m * d + 6 * m * u + m * u * u +
           m * m * u * d;
  // Boxes on a, b and the mode-sum rows; varsigma box and the QoS rows;
  // nonnegativity of theta, eta_bar, the alpha box, and the five per-(m,l)
  // auxiliaries; omega_hat and eta_hat nonnegativity.
  c.linear = 5 * m + (d + 3 * u) + 2 * m * d + 7 * m * u + m * u * u +
             m * m * u * d;
  // Per-AP power, the two SE surrogates, coupling and eta_bar rows, the
  // five per-(m,l) product bounds, omega_hat and eta_hat product bounds.
  c.quadratic = m + (d + u) + 2 * m * d + 5 * m * u + m * u * u +
                m * m * u * d;
  return c;
}

Eigen::VectorXd model_se_dl(const SystemConfig& cfg,
                            const LargeScaleChannels& ch,
                            const SchemeModel& model,
                            const DesignVariables& v) {
  return detail::dl_se_core(cfg, ch, v, model.dl_antennas, model.dl_ue_cross,
                            model.prelog);
}

Eigen::VectorXd model_se_ul(const SystemConfig& cfg,
                            const LargeScaleChannels& ch,
                            const SchemeModel& model,
                            const DesignVariables& v) {
  return detail::ul_se_core(cfg, ch, v, v.b, model.ul_antennas,
                            model.ap_cross_antennas, model.si_diag,
                            model.prelog);
}

LiftedPoint initial_point(const SystemConfig& cfg, const LargeScaleChannels& ch,
                          const SchemeModel& model, const PowerParams& pp,
                          std::uint64_t seed) {
  const int m_aps = cfg.num_aps;
  const int kd = cfg.num_dl_ues;
  const int ku = cfg.num_ul_ues;
  LiftedPoint p;
  p.v = DesignVariables::zeros(m_aps, kd, ku);

  Rng rng(derive_seed(seed, 0x696e6974));
  if (model.modes_free) {
    for (int m = 0; m < m_aps; ++m) p.v.a(m) = rng.uniform();
    p.v.b = Eigen::VectorXd::Ones(m_aps) - p.v.a;
  } else {
    p.v.a = model.fixed_a;
    p.v.b = model.fixed_b;
  }
  p.v.varsigma = Eigen::VectorXd::Ones(ku);
  p.v.alpha = Eigen::MatrixXd::Ones(m_aps, ku);

  // Full per-AP power split evenly over DL UEs, capped by the coupling
  // constraint when the mode leans toward uplink.
  const double n_dl = model.dl_antennas;
  for (int m = 0; m < m_aps; ++m) {
    double budget = model.modes_free ? std::min(1.0, p.v.a(m) * kd)
                                     : (p.v.a(m) > 0 ? 1.0 : 0.0);
    for (int k = 0; k < kd; ++k) {
      double g = ch.gamma_dl(m, k);
      p.v.theta(m, k) = g > 0 ? std::sqrt(budget / (n_dl * kd * g)) : 0.0;
    }
  }

  p.omega.resize(m_aps, ku);
  p.omega_bar.resize(m_aps, ku);
  p.omega_tilde.resize(m_aps, ku);
  p.alpha_tilde.resize(m_aps, ku);
  p.alpha_hat.resize(m_aps, ku);
  p.eta_bar.resize(m_aps, kd);
  p.omega_hat.assign(static_cast<size_t>(m_aps) * ku * ku, 0.0);
  p.eta_hat.assign(static_cast<size_t>(m_aps) * m_aps * ku * kd, 0.0);
  for (int m = 0; m < m_aps; ++m) {
    for (int l = 0; l < ku; ++l) {
      double root = std::sqrt(p.v.b(m) * p.v.varsigma(l));
      p.omega(m, l) = root;
      p.omega_bar(m, l) = root;
      p.omega_tilde(m, l) = root * p.v.alpha(m, l);
      p.alpha_tilde(m, l) = p.v.alpha(m, l) * p.v.alpha(m, l);
      p.alpha_hat(m, l) = p.v.b(m) * p.alpha_tilde(m, l);
    }
    for (int k = 0; k < kd; ++k)
      p.eta_bar(m, k) = p.v.theta(m, k) * p.v.theta(m, k);
  }
  for (int m = 0; m < m_aps; ++m)
    for (int l = 0; l < ku; ++l)
      for (int q = 0; q < ku; ++q)
        p.omega_hat[(m * ku + l) * ku + q] =
            p.omega_bar(m, q) * p.v.alpha(m, l);
  for (int m = 0; m < m_aps; ++m)
    for (int i = 0; i < m_aps; ++i)
      for (int l = 0; l < ku; ++l)
        for (int k = 0; k < kd; ++k)
          p.eta_hat[((static_cast<size_t>(m) * m_aps + i) * ku + l) * kd + k] =
              p.alpha_hat(m, l) * p.eta_bar(i, k);

  p.q_dl = model_se_dl(cfg, ch, model, p.v);
  p.q_ul = model_se_ul(cfg, ch, model, p.v);
  p.slack_dl = Eigen::VectorXd::Zero(kd);
  p.slack_ul = Eigen::VectorXd::Zero(ku);
  for (int k = 0; k < kd; ++k)
    p.slack_dl(k) = std::max(0.0, cfg.qos_dl - p.q_dl(k));
  for (int l = 0; l < ku; ++l)
    p.slack_ul(l) = std::max(0.0, cfg.qos_ul - p.q_ul(l));

  p.p_hat = rate_independent_power(cfg, ch, model, pp, p);
  p.t = p.p_hat > 0
            ? cfg.bandwidth_hz * (p.q_dl.sum() + p.q_ul.sum()) / p.p_hat
            : 0.0;
  return p;
}

double penalty_value(const DesignVariables& v) {
  double c = 0;
  for (int m = 0; m < v.a.size(); ++m) {
    c += v.a(m) - v.a(m) * v.a(m);
    c += v.b(m) - v.b(m) * v.b(m);
  }
  return c;
}

double binary_gap(const DesignVariables& v) {
  double g = 0;
  for (int m = 0; m < v.a.size(); ++m)
    g = std::max(g, std::min(v.a(m), 1.0 - v.a(m)));
  return g;
}

Eigen::VectorXd lifted_ul_se(const SystemConfig& cfg,
                             const LargeScaleChannels& ch,
                             const SchemeModel& model, const LiftedPoint& p) {
  const int m_aps = cfg.num_aps;
  const int kd = cfg.num_dl_ues;
  const int ku = cfg.num_ul_ues;
  const double rho_u = cfg.rho_ul();
  const double rho_d = cfg.rho_dl();
  Eigen::VectorXd se(ku);
  for (int l = 0; l < ku; ++l) {
    double psi = 0;
    double phi = 0;
    for (int m = 0; m < m_aps; ++m) {
      double g = ch.gamma_ul(m, l);
      psi += p.omega_tilde(m, l) * g;
      for (int q = 0; q < ku; ++q) {
        double w = p.omega_hat[(m * ku + l) * ku + q];
        phi += rho_u * w * w * ch.beta_ul(m, q) * g;
      }
      if (model.ap_cross()) {
        for (int i = 0; i < m_aps; ++i) {
          double b_ap = (i == m) ? model.si_diag : ch.beta_ap(m, i);
          if (b_ap == 0.0) continue;
          for (int k = 0; k < kd; ++k)
            phi += rho_d * model.ap_cross_antennas *
                   p.eta_hat[((static_cast<size_t>(m) * m_aps + i) * ku + l) *
                                 kd +
                             k] *
                   b_ap * g * ch.gamma_dl(i, k);
        }
      }
      phi += p.alpha_hat(m, l) * g;
    }
    psi *= std::sqrt(model.ul_antennas * rho_u);
    se(l) = phi > 0 ? model.prelog * std::log2(1.0 + psi * psi / phi) : 0.0;
  }
  return se;
}

double rate_independent_power(const SystemConfig& cfg,
                              const LargeScaleChannels& ch,
                              const SchemeModel& model, const PowerParams& pp,
                              const LiftedPoint& p) {
  const int m_aps = cfg.num_aps;
  const int kd = cfg.num_dl_ues;
  const int ku = cfg.num_ul_ues;
  double tx_ap = 0;
  for (int m = 0; m < m_aps; ++m)
    for (int k = 0; k < kd; ++k)
      tx_ap += model.dl_antennas * ch.gamma_dl(m, k) * p.v.theta(m, k) *
               p.v.theta(m, k);
  tx_ap *= cfg.ap_power_w / pp.pa_eff_dl;
  double tx_ue = (cfg.ue_power_w / pp.pa_eff_ul) * p.v.varsigma.sum();
  double ue_fixed = kd * pp.ue_fixed_dl_w + ku * pp.ue_fixed_ul_w;
  double circuit = 0;
  double fixed_bh = 0;
  for (int m = 0; m < m_aps; ++m) {
    circuit += p.v.a(m) * model.dl_antennas * pp.circuit_dl_w +
               p.v.b(m) * model.ul_antennas * pp.circuit_ul_w;
    fixed_bh += p.v.a(m) * pp.fixed_dl_w + p.v.b(m) * pp.fixed_ul_w;
  }
  double si = model.scheme == Scheme::kFd
                  ? m_aps * model.ul_antennas * pp.si_cancel_w
                  : 0.0;
  double total = tx_ap + tx_ue + ue_fixed + circuit + fixed_bh + si;
  return model.half_power ? 0.5 * total : total;
}

double lifted_violation(const SystemConfig& cfg, const LargeScaleChannels& ch,
                        const SchemeModel& model, const LiftedPoint& p) {
  const int m_aps = cfg.num_aps;
  const int kd = cfg.num_dl_ues;
  const int ku = cfg.num_ul_ues;
  double viol = 0;
  auto chk = [&viol](double f) { viol = std::max(viol, f); };

  for (int m = 0; m < m_aps; ++m) {
    chk(std::abs(p.v.a(m) + p.v.b(m) - 1.0));
    chk(-p.v.a(m));
    chk(p.v.a(m) - 1.0);
    double pow_row = 0;
    for (int k = 0; k < kd; ++k) {
      double th = p.v.theta(m, k);
      chk(-th);
      double tp = model.dl_antennas * ch.gamma_dl(m, k) * th * th;
      pow_row += tp;
      chk(tp - p.v.a(m));                      // mode coupling
      chk(th * th - p.eta_bar(m, k));          // eta_bar lifting
      chk(-p.eta_bar(m, k));
    }
    chk(pow_row - 1.0);
    for (int l = 0; l < ku; ++l) {
      double al = p.v.alpha(m, l);
      chk(-al);
      chk(al - 1.0);
      double b = p.v.b(m);
      chk(p.omega(m, l) * p.omega(m, l) - b * p.v.varsigma(l));
      chk(b * p.v.varsigma(l) - p.omega_bar(m, l) * p.omega_bar(m, l));
      chk(p.omega_tilde(m, l) - p.omega(m, l) * al);
      chk(al * al - p.alpha_tilde(m, l));
      chk(b * p.alpha_tilde(m, l) - p.alpha_hat(m, l));
      chk(-p.omega(m, l));
      chk(-p.omega_bar(m, l));
      chk(-p.omega_tilde(m, l));
      chk(-p.alpha_tilde(m, l));
      chk(-p.alpha_hat(m, l));
      for (int q = 0; q < ku; ++q) {
        double w = p.omega_hat[(m * ku + l) * ku + q];
        chk(p.omega_bar(m, q) * al - w);
        chk(-w);
      }
      for (int i = 0; i < m_aps; ++i)
        for (int k = 0; k < kd; ++k) {
          double e =
              p.eta_hat[((static_cast<size_t>(m) * m_aps + i) * ku + l) * kd +
                        k];
          chk(p.alpha_hat(m, l) * p.eta_bar(i, k) - e);
          chk(-e);
        }
    }
  }
  for (int l = 0; l < ku; ++l) {
    chk(-p.v.varsigma(l));
    chk(p.v.varsigma(l) - 1.0);
  }
  Eigen::VectorXd se_dl = model_se_dl(cfg, ch, model, p.v);
  Eigen::VectorXd se_ul = lifted_ul_se(cfg, ch, model, p);
  for (int k = 0; k < kd; ++k) chk(p.q_dl(k) - se_dl(k));
  for (int l = 0; l < ku; ++l) chk(p.q_ul(l) - se_ul(l));
  return viol;
}

}  // namespace nafd
