#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nafd/lifted.hpp"
#include "nafd/qcqp.hpp"

namespace nafd {

// Expansion point has a zero SINR denominator (or zero power budget), so
// the concave minorant of log(1 + x^2/y) does not exist there.
struct ExpansionSingular : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Index map from lifted-point coordinates to QCQP variables. Entries are -1
// for coordinates fixed to a constant by the scheme model (e.g. theta of an
// AP pinned to uplink). Internally every variable is nondimensionalized;
// `scale[j]` converts solver units back to model units.
struct VarMap {
  int M = 0, Kd = 0, Ku = 0;
  std::vector<int> a;            // M
  std::vector<int> q_dl, q_ul;   // Kd, Ku
  std::vector<int> theta;        // M*Kd
  std::vector<int> varsigma;     // Ku
  std::vector<int> alpha;        // M*Ku
  std::vector<int> omega, omega_bar, omega_tilde, alpha_tilde,
      alpha_hat;                 // M*Ku
  std::vector<int> eta_bar;      // M*Kd
  std::vector<int> omega_hat;    // M*Ku*Ku
  int t = -1, p_hat = -1;
  std::vector<int> slack_dl, slack_ul;
  std::vector<double> scale;

  int th(int m, int k) const { return theta[m * Kd + k]; }
  int al(int m, int l) const { return alpha[m * Ku + l]; }
  int ml(const std::vector<int>& blk, int m, int l) const {
    return blk[m * Ku + l];
  }
  int oh(int m, int l, int q) const {
    return omega_hat[(m * Ku + l) * Ku + q];
  }
};

// Convex restriction of the lifted problem around `at`.
std::pair<ConvexQCQP, VarMap> convexify_at(
    const SystemConfig& cfg, const LargeScaleChannels& ch,
    const PowerParams& pp, const SchemeModel& model, Objective obj,
    double lambda, double phi, bool with_slacks, const LiftedPoint& at);

Eigen::VectorXd flatten(const LiftedPoint& p, const VarMap& map);
// Rebuilds a lifted point from a subproblem solution; coordinates without a
// variable are reconstructed from their defining equalities.
LiftedPoint unflatten(const Eigen::VectorXd& x, const VarMap& map,
                      const SystemConfig& cfg, const LargeScaleChannels& ch,
                      const SchemeModel& model, const LiftedPoint& ref);

// Penalized merit value the outer loop monotonically decreases:
//   SE:  -sum(q) + lambda*C(a,b) + phi*sum(slack)
//   EE:  -t/B    + lambda*C(a,b) + phi*sum(slack)
double merit_value(const SystemConfig& cfg, Objective obj, double lambda,
                   double phi, const LiftedPoint& p);

// Rounds the relaxed mode vector at 0.5; exact ties go to downlink iff the
// best downlink-UE channel estimate beats the best uplink-UE one.
Eigen::VectorXd round_modes(const LargeScaleChannels& ch,
                            const Eigen::VectorXd& a_relaxed);

// Full optimization pipeline for one scheme and objective:
// penalized relaxation (joint schemes), rounding + repair, fixed-mode
// polish, slack-free polish, and closed-form re-evaluation of the result.
SchemeResult run_sca(const SystemConfig& cfg, const LargeScaleChannels& ch,
                     const PowerParams& pp, const SchemeModel& model,
                     Objective obj, const ScaConfig& sca);

// The subproblem solver returned a non-optimal status twice in a row.
struct Stalled : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Joint mode/power optimization from a caller-supplied start: sum-SE
// objective (throws Stalled when the relaxation cannot make progress).
SchemeResult run_algorithm1(const SystemConfig& cfg,
                            const LargeScaleChannels& ch,
                            const PowerParams& pp, const ScaConfig& sca,
                            const LiftedPoint& init);
// Same pipeline with the energy-efficiency epigraph objective.
SchemeResult run_algorithm2(const SystemConfig& cfg,
                            const LargeScaleChannels& ch,
                            const PowerParams& pp, const ScaConfig& sca,
                            const LiftedPoint& init);

// Binarizes the relaxed modes of `relaxed` and re-optimizes the continuous
// variables with the modes pinned; returns the repaired design.
DesignVariables round_and_repair(const SystemConfig& cfg,
                                 const LargeScaleChannels& ch,
                                 const PowerParams& pp, Objective obj,
                                 const ScaConfig& sca,
                                 const LiftedPoint& relaxed);

}  // namespace nafd
