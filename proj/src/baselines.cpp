#include "nafd/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "nafd/perfmodel.hpp"
#include "nafd/rng.hpp"

namespace nafd {

DesignVariables random_modes(int num_aps, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x6d6f6465));
  DesignVariables v = DesignVariables::zeros(num_aps, 0, 0);
  for (int m = 0; m < num_aps; ++m) {
    v.a(m) = rng.uniform() < 0.5 ? 0.0 : 1.0;
    v.b(m) = 1.0 - v.a(m);
  }
  return v;
}

DesignVariables fixed_controls(const SystemConfig& cfg,
                               const LargeScaleChannels& ch,
                               const Eigen::VectorXd& a,
                               const Eigen::VectorXd& b) {
  const int m_aps = cfg.num_aps;
  const int kd = cfg.num_dl_ues;
  const int ku = cfg.num_ul_ues;
  const double n = cfg.antennas_per_ap;
  DesignVariables v = DesignVariables::zeros(m_aps, kd, ku);
  v.a = a;
  v.b = b;
  v.varsigma = Eigen::VectorXd::Ones(ku);
  for (int m = 0; m < m_aps; ++m) {
    for (int k = 0; k < kd; ++k) {
      double g = ch.gamma_dl(m, k);
      v.theta(m, k) = (a(m) > 0 && g > 0 && kd > 0)
                          ? a(m) / std::sqrt(n * kd * g)
                          : 0.0;
    }
    for (int l = 0; l < ku; ++l) v.alpha(m, l) = b(m) > 0 ? 1.0 : 0.0;
  }
  return v;
}

namespace {

double greedy_sum_se(const SystemConfig& cfg, const LargeScaleChannels& ch,
                     const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  DesignVariables v = fixed_controls(cfg, ch, a, b);
  return dl_se_nafd(cfg, ch, v).sum() + ul_se_nafd(cfg, ch, v).sum();
}

}  // namespace

ApSets greedy_modes(const SystemConfig& cfg, const LargeScaleChannels& ch) {
  const int m_aps = cfg.num_aps;
  ApSets sets;
  for (int m = 0; m < m_aps; ++m) sets.a_unassigned.push_back(m);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(m_aps);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(m_aps);

  while (!sets.a_unassigned.empty()) {
    int best_ap = -1;
    bool best_is_ul = true;
    double best_se = -1.0;
    for (int m : sets.a_unassigned) {
      b(m) = 1.0;
      double se_ul = greedy_sum_se(cfg, ch, a, b);
      b(m) = 0.0;
      a(m) = 1.0;
      double se_dl = greedy_sum_se(cfg, ch, a, b);
      a(m) = 0.0;
      // UL wins exact ties (both within one AP and across APs).
      if (se_ul >= se_dl) {
        if (se_ul > best_se) {
          best_se = se_ul;
          best_ap = m;
          best_is_ul = true;
        }
      } else if (se_dl > best_se) {
        best_se = se_dl;
        best_ap = m;
        best_is_ul = false;
      }
    }
    if (best_is_ul) {
      b(best_ap) = 1.0;
      sets.a_ul.push_back(best_ap);
    } else {
      a(best_ap) = 1.0;
      sets.a_dl.push_back(best_ap);
    }
    sets.a_unassigned.erase(std::find(sets.a_unassigned.begin(),
                                      sets.a_unassigned.end(), best_ap));
  }
  return sets;
}

namespace {

// Applies the infeasibility rule shared by the fixed-control schemes.
void apply_qos_rule(const SystemConfig& cfg, double slack_threshold,
                    SchemeResult* res) {
  double shortfall = 0;
  for (int k = 0; k < res->se_dl.size(); ++k)
    shortfall += std::max(0.0, cfg.qos_dl - res->se_dl(k));
  for (int l = 0; l < res->se_ul.size(); ++l)
    shortfall += std::max(0.0, cfg.qos_ul - res->se_ul(l));
  res->feasible = shortfall <= slack_threshold;
  if (!res->feasible) {
    res->se_dl.setZero();
    res->se_ul.setZero();
    res->sum_se = 0;
    res->energy_eff = 0;
    res->energy_eff_fullbh = 0;
    res->note += "qos_infeasible;";
  }
}

}  // namespace

SchemeResult evaluate_gvfd(const SystemConfig& cfg,
                           const LargeScaleChannels& ch,
                           const PowerParams& pp) {
  ApSets sets = greedy_modes(cfg, ch);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(cfg.num_aps);
  for (int m : sets.a_dl) a(m) = 1.0;
  Eigen::VectorXd b = Eigen::VectorXd::Ones(cfg.num_aps) - a;
  DesignVariables v = fixed_controls(cfg, ch, a, b);
  SchemeResult res = evaluate_scheme(Scheme::kGvfd, cfg, ch, v, pp);
  PowerBreakdown full =
      power_nafd_full_backhaul(cfg, ch, v, pp, res.se_dl, res.se_ul);
  res.energy_eff_fullbh = energy_efficiency(cfg, res.sum_se, full.total());
  apply_qos_rule(cfg, ScaConfig{}.slack_threshold, &res);
  return res;
}

SchemeResult optimize_rvfd(const SystemConfig& cfg,
                           const LargeScaleChannels& ch, const PowerParams& pp,
                           Objective obj, const ScaConfig& sca) {
  DesignVariables modes = random_modes(cfg.num_aps, sca.seed);
  SchemeModel model = make_fixed_mode_model(cfg, ch, modes.a);
  model.scheme = Scheme::kRvfd;
  return run_sca(cfg, ch, pp, model, obj, sca);
}

SchemeResult optimize_hd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                         const PowerParams& pp, Objective obj,
                         const ScaConfig& sca) {
  return run_sca(cfg, ch, pp, make_scheme_model(Scheme::kHd, cfg, ch), obj,
                 sca);
}

SchemeResult optimize_fd(const SystemConfig& cfg, const LargeScaleChannels& ch,
                         const PowerParams& pp, Objective obj,
                         const ScaConfig& sca) {
  return run_sca(cfg, ch, pp, make_scheme_model(Scheme::kFd, cfg, ch), obj,
                 sca);
}

SchemeResult optimize_nafd(const SystemConfig& cfg,
                           const LargeScaleChannels& ch, const PowerParams& pp,
                           Objective obj, const ScaConfig& sca) {
  return run_sca(cfg, ch, pp, make_scheme_model(Scheme::kNafd, cfg, ch), obj,
                 sca);
}

}  // namespace nafd
