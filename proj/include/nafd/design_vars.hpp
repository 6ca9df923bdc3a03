#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace nafd {

enum class Scheme { kNafd, kRvfd, kGvfd, kHd, kFd };
enum class Objective { kSumSe, kEnergyEff };

std::string to_string(Scheme s);
std::string to_string(Objective o);

// Mode assignment and transmission controls for one realization.
// a(m) = 1: AP m transmits (DL mode); b(m) = 1: AP m receives (UL mode).
// Relaxed intermediates may hold fractional a, b in [0, 1].
struct DesignVariables {
  Eigen::VectorXd a;         // num_aps
  Eigen::VectorXd b;         // num_aps
  Eigen::MatrixXd theta;     // num_aps x num_dl_ues, precoder scale >= 0
  Eigen::VectorXd varsigma;  // num_ul_ues, UL power fraction in [0, 1]
  Eigen::MatrixXd alpha;     // num_aps x num_ul_ues, receive weights [0, 1]

  static DesignVariables zeros(int m, int kd, int ku) {
    DesignVariables v;
    v.a = Eigen::VectorXd::Zero(m);
    v.b = Eigen::VectorXd::Zero(m);
    v.theta = Eigen::MatrixXd::Zero(m, kd);
    v.varsigma = Eigen::VectorXd::Zero(ku);
    v.alpha = Eigen::MatrixXd::Zero(m, ku);
    return v;
  }
};

struct PowerBreakdown {
  double transmit_ap = 0;       // amplifier power for DL payload
  double transmit_ue = 0;       // amplifier power for UL payload
  double ue_fixed = 0;          // per-UE static consumption
  double circuit = 0;           // per-antenna chains on active APs
  double fixed_backhaul = 0;    // per-AP mode-dependent constants
  double traffic_backhaul = 0;  // rate-dependent fronthaul transfer
  double si_cancellation = 0;   // full duplex only

  double total() const {
    return transmit_ap + transmit_ue + ue_fixed + circuit + fixed_backhaul +
           traffic_backhaul + si_cancellation;
  }
};

// One SCA iteration of the record kept for diagnostics.
struct IterationRecord {
  int iter = 0;
  double objective = 0;       // penalized surrogate objective (minimized)
  double binary_violation = 0;
  double slack_total = 0;
  std::string status;
};

struct SchemeResult {
  Scheme scheme = Scheme::kNafd;
  bool feasible = false;
  Eigen::VectorXd se_dl;  // per-UE, bit/s/Hz
  Eigen::VectorXd se_ul;
  double sum_se = 0;
  PowerBreakdown power;
  double power_total_w = 0;
  double energy_eff = 0;          // bit/J, traffic billed per actual streams
  double energy_eff_fullbh = 0;   // bit/J with every AP forwarding all streams
  DesignVariables vars;
  std::vector<IterationRecord> trace;
  int relax_iters = 0;          // outer iterations of the relaxation phase
  bool relax_converged = false;  // relative-change tolerance met in budget
  double solve_seconds = 0;
  double binary_gap = 0;       // mean mode-relaxation gap before rounding
  bool rounding_flagged = false;  // relaxation was not near-binary
  std::string note;            // optimizer exit condition
};

}  // namespace nafd
