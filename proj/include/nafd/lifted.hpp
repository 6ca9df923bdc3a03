#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nafd/channels.hpp"
#include "nafd/design_vars.hpp"
#include "nafd/system_config.hpp"

namespace nafd {

// Iterate of the lifted SE/EE maximization problems: design variables plus
// the auxiliary product bounds and epigraph variables.
struct LiftedPoint {
  DesignVariables v;
  Eigen::VectorXd q_dl, q_ul;    // per-UE SE epigraph values
  Eigen::MatrixXd omega;         // M x Ku, omega^2 <= b*varsigma
  Eigen::MatrixXd omega_bar;     // M x Ku, omega_bar^2 >= b*varsigma_q
  Eigen::MatrixXd omega_tilde;   // M x Ku, omega_tilde <= omega*alpha
  Eigen::MatrixXd alpha_tilde;   // M x Ku, alpha_tilde >= alpha^2
  Eigen::MatrixXd alpha_hat;     // M x Ku, alpha_hat >= b*alpha_tilde
  Eigen::MatrixXd eta_bar;       // M x Kd, eta_bar >= theta^2
  // omega_hat[m](l,q) >= omega_bar(m,q)*alpha(m,l), stored (m*Ku+l)*Ku+q.
  std::vector<double> omega_hat;
  // eta_hat[((m*M+i)*Ku+l)*Kd+k] >= alpha_hat(m,l)*eta_bar(i,k).
  std::vector<double> eta_hat;
  double t = 0;       // EE epigraph: t * p_hat <= B * sum(q)
  double p_hat = 0;   // upper bound on the rate-independent power
  Eigen::VectorXd slack_dl, slack_ul;  // QoS slacks (restoration)

  int omega_hat_idx(int m, int l, int q) const {
    return (m * static_cast<int>(v.alpha.cols()) + l) *
               static_cast<int>(v.alpha.cols()) + q;
  }
};

struct ScaConfig {
  double lambda = 1.0;        // binary-penalty multiplier
  double phi = 0;             // slack penalty; 0 -> 100*(Kd+Ku) default
  double eps_binary = 5e-5;   // accepted mean binary violation
  double rel_obj_tol = 1e-4;
  int max_outer_iters = 50;
  bool restoration = true;    // QoS via slacks, then slack-free polish
  double slack_threshold = 1e-3;   // total slack accepted as feasible
  double binary_gap_tol = 1e-3;    // rounding flagged above this
  double momentum = 0.9;           // extrapolation ramp cap; 0 disables
  int max_lambda_escalations = 25;
  int max_repair_flips = -1;  // mode flips while restoring QoS; -1 -> num_aps
  std::uint64_t seed = 1;
  bool certify_subproblems = false;  // debug: KKT-check every SCA solve

  void validate() const {
    if (lambda < 1.0)
      throw std::invalid_argument("ScaConfig: lambda must be >= 1");
    if (phi < 0) throw std::invalid_argument("ScaConfig: negative phi");
    if (rel_obj_tol <= 0 || slack_threshold <= 0 || eps_binary <= 0 ||
        binary_gap_tol <= 0)
      throw std::invalid_argument("ScaConfig: tolerances must be positive");
    if (momentum < 0 || momentum >= 1)
      throw std::invalid_argument("ScaConfig: momentum must be in [0,1)");
    if (max_outer_iters < 1)
      throw std::invalid_argument("ScaConfig: max_outer_iters < 1");
  }
};

inline ScaConfig default_sca_config(Objective obj) {
  ScaConfig c;
  c.lambda = obj == Objective::kSumSe ? 1.0 : 10.0;
  return c;
}

// Which SE/power formula family an optimization run uses, with the mode
// vector either free (joint assignment) or pinned.
struct SchemeModel {
  Scheme scheme = Scheme::kNafd;
  bool modes_free = true;
  Eigen::VectorXd fixed_a, fixed_b;  // used when !modes_free
  double dl_antennas = 2;            // coherent gain on the transmit side
  double ul_antennas = 2;            // coherent gain on the receive side
  bool dl_ue_cross = true;           // UL-UE leakage into DL SINR
  double ap_cross_antennas = 2;      // AP-to-AP leakage scale (0 disables)
  double si_diag = 0;                // AP-to-AP diagonal (FD residual SI)
  double prelog = 0.99;
  bool half_power = false;           // HD: both directions half-time

  bool ap_cross() const { return ap_cross_antennas > 0; }
};

SchemeModel make_scheme_model(Scheme s, const SystemConfig& cfg,
                              const LargeScaleChannels& ch);
// Mode-division formulas with a pinned binary assignment (random baseline,
// rounding repair, exhaustive search).
SchemeModel make_fixed_mode_model(const SystemConfig& cfg,
                                  const LargeScaleChannels& ch,
                                  const Eigen::VectorXd& a_fixed);

struct LiftedCardinality {
  long vars = 0;
  long linear = 0;
  long quadratic = 0;
};
// Size of the full lifted SE problem description (joint assignment, no
// eliminations), used to cross-check the complexity accounting.
LiftedCardinality lifted_problem_cardinality(int m_aps, int kd, int ku);

// Random relaxed start: a ~ U(0,1), full-power controls, auxiliaries tight.
LiftedPoint initial_point(const SystemConfig& cfg, const LargeScaleChannels& ch,
                          const SchemeModel& model, const PowerParams& pp,
                          std::uint64_t seed);

// Max violation of the lifted constraint set (product bounds, power caps,
// coupling, boxes) at a point; <= tol for any accepted iterate.
double lifted_violation(const SystemConfig& cfg, const LargeScaleChannels& ch,
                        const SchemeModel& model, const LiftedPoint& p);

// Binary-penalty value sum(a - a^2) + sum(b - b^2) and its mean gap.
double penalty_value(const DesignVariables& v);
double binary_gap(const DesignVariables& v);

// Per-UE SE implied by the lifted auxiliaries (UL uses the lifted SINR
// form; equals the true SE when the liftings hold with equality).
Eigen::VectorXd lifted_ul_se(const SystemConfig& cfg,
                             const LargeScaleChannels& ch,
                             const SchemeModel& model, const LiftedPoint& p);

// Closed-form SE with the scheme model's coefficients; accepts relaxed
// (fractional) mode vectors.
Eigen::VectorXd model_se_dl(const SystemConfig& cfg,
                            const LargeScaleChannels& ch,
                            const SchemeModel& model,
                            const DesignVariables& v);
Eigen::VectorXd model_se_ul(const SystemConfig& cfg,
                            const LargeScaleChannels& ch,
                            const SchemeModel& model,
                            const DesignVariables& v);

// Rate-independent power bound used by the EE epigraph (watts).
double rate_independent_power(const SystemConfig& cfg,
                              const LargeScaleChannels& ch,
                              const SchemeModel& model, const PowerParams& pp,
                              const LiftedPoint& p);

}  // namespace nafd
