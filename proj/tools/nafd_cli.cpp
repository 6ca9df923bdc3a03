#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nafd/baselines.hpp"
#include "nafd/channels.hpp"
#include "nafd/experiment.hpp"
#include "nafd/geometry.hpp"
#include "nafd/mc_oracle.hpp"
#include "nafd/perfmodel.hpp"

namespace {

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    if (comma > pos) out.push_back(s.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return out;
}

int cmd_run(const std::string& config_path, const std::string& objective,
            const std::string& schemes, int realizations, long long seed,
            const std::string& out_dir, int workers) {
  nafd::ExperimentPlan plan = config_path.empty()
                                  ? nafd::ExperimentPlan{}
                                  : nafd::load_plan(config_path);
  if (!objective.empty())
    plan.objective = nafd::objective_from_string(objective);
  if (!schemes.empty()) {
    plan.schemes.clear();
    for (const std::string& s : split_csv(schemes))
      plan.schemes.push_back(nafd::scheme_from_string(s));
  }
  if (realizations > 0) plan.realizations = realizations;
  if (seed >= 0) plan.master_seed = static_cast<std::uint64_t>(seed);
  if (!out_dir.empty()) plan.out_dir = out_dir;
  if (plan.values.empty())
    plan.values = {static_cast<double>(plan.base.num_aps)};
  plan.validate();

  nafd::ExperimentResults results = nafd::run_experiment(plan, workers);
  nafd::emit(results);
  std::fputs(nafd::results_to_csv(results).c_str(), stdout);
  std::printf("wrote %s/summary.csv and %s/detail.json\n",
              plan.out_dir.c_str(), plan.out_dir.c_str());
  return 0;
}

bool report(const char* name, bool ok) {
  std::printf("%-44s %s\n", name, ok ? "PASS" : "FAIL");
  return ok;
}

// Closed forms against the sampling oracle and the scheme reduction
// identities, on one realization drawn from the configured scenario.
int cmd_verify(const std::string& config_path) {
  nafd::ExperimentPlan plan = config_path.empty()
                                  ? nafd::ExperimentPlan{}
                                  : nafd::load_plan(config_path);
  nafd::SystemConfig cfg = plan.base;
  cfg.num_aps = std::min(cfg.num_aps, 4);  // oracle cost grows fast with M
  cfg.validate();

  nafd::NetworkGeometry geo = nafd::place_network(cfg, plan.master_seed);
  nafd::LargeScaleChannels ch =
      nafd::large_scale_fading(geo, cfg, plan.master_seed);

  Eigen::VectorXd a(cfg.num_aps);
  for (int m = 0; m < cfg.num_aps; ++m) a(m) = m % 2 == 0 ? 1.0 : 0.0;
  Eigen::VectorXd b = Eigen::VectorXd::Ones(cfg.num_aps) - a;
  nafd::DesignVariables v = nafd::fixed_controls(cfg, ch, a, b);

  bool all = true;
  const long n = 100000;

  {
    Eigen::VectorXd closed = nafd::dl_se_nafd(cfg, ch, v);
    auto mc = nafd::mc_dl_se(cfg, ch, v, n, plan.master_seed);
    bool ok = true;
    for (int k = 0; k < cfg.num_dl_ues; ++k)
      ok = ok && std::abs(mc[k].se - closed(k)) <=
                     std::max(mc[k].half_width, 0.02 * closed(k));
    all &= report("downlink SE vs sampling oracle", ok);
  }
  {
    Eigen::VectorXd closed = nafd::ul_se_nafd(cfg, ch, v);
    auto mc = nafd::mc_ul_se(cfg, ch, v, n, plan.master_seed);
    bool ok = true;
    for (int l = 0; l < cfg.num_ul_ues; ++l)
      ok = ok && std::abs(mc[l].se - closed(l)) <=
                     std::max(mc[l].half_width, 0.02 * closed(l));
    all &= report("uplink SE vs sampling oracle", ok);
  }
  {
    double m4 = nafd::mc_fourth_moment(cfg.antennas_per_ap, 0.7, 1000000, 7);
    double n_ant = cfg.antennas_per_ap;
    double exact = n_ant * (n_ant + 1) * 0.49;
    all &= report("fourth-moment identity", std::abs(m4 - exact) <=
                                                0.01 * exact);
  }
  {
    // All-receive mode division equals the full-duplex formula with the
    // whole array receiving and no residual self-interference.
    nafd::SystemConfig fd_cfg = cfg;
    fd_cfg.tx_antennas_fd = 0;
    fd_cfg.rx_antennas_fd = cfg.antennas_per_ap;
    fd_cfg.si_over_noise_db = -300;
    nafd::LargeScaleChannels ch_fd = ch;
    ch_fd.si_over_noise = 0;
    nafd::DesignVariables u = v;
    u.a.setZero();
    u.b.setOnes();
    u.theta.setZero();
    u.alpha.setOnes();
    Eigen::VectorXd lhs = nafd::ul_se_nafd(cfg, ch, u);
    Eigen::VectorXd rhs = nafd::ul_se_fd(fd_cfg, ch_fd, u);
    bool ok = ((lhs - rhs).cwiseAbs().array() <=
               1e-12 * rhs.cwiseAbs().array().max(1e-300))
                  .all();
    all &= report("mode-division to full-duplex reduction", ok);
  }
  {
    nafd::SystemConfig hd_cfg = cfg;
    nafd::DesignVariables u = v;
    u.a.setOnes();
    u.b.setOnes();
    for (int m = 0; m < cfg.num_aps; ++m) {
      for (int k = 0; k < cfg.num_dl_ues; ++k)
        u.theta(m, k) = 1.0 / std::sqrt(cfg.antennas_per_ap *
                                        std::max(1, cfg.num_dl_ues) *
                                        std::max(ch.gamma_dl(m, k), 1e-300));
      for (int l = 0; l < cfg.num_ul_ues; ++l) u.alpha(m, l) = 1.0;
    }
    // Half-duplex equals half of the cross-link-free mode division.
    nafd::LargeScaleChannels ch_nc = ch;
    ch_nc.beta_ap.setZero();
    ch_nc.beta_du.setZero();
    Eigen::VectorXd dl_hd = nafd::dl_se_hd(hd_cfg, ch, u);
    Eigen::VectorXd dl_nc = nafd::detail::dl_se_core(
        hd_cfg, ch_nc, u, hd_cfg.antennas_per_ap, false, hd_cfg.prelog());
    Eigen::VectorXd ul_hd = nafd::ul_se_hd(hd_cfg, ch, u);
    Eigen::VectorXd ul_nc = nafd::detail::ul_se_core(
        hd_cfg, ch_nc, u, u.b, hd_cfg.antennas_per_ap, 0.0, 0.0,
        hd_cfg.prelog());
    bool ok = (dl_hd - 0.5 * dl_nc).cwiseAbs().maxCoeff() == 0 &&
              (ul_hd - 0.5 * ul_nc).cwiseAbs().maxCoeff() == 0;
    all &= report("half-duplex halving identity", ok);
  }

  std::printf("%s\n", all ? "verify: all checks passed"
                          : "verify: FAILURES present");
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"network-assisted full-duplex cell-free simulator"};
  app.require_subcommand(1);

  std::string config_path, objective, schemes, out_dir;
  int realizations = 0, workers = 0;
  long long seed = -1;

  CLI::App* run = app.add_subcommand("run", "run an experiment plan");
  run->add_option("--config", config_path, "plan JSON file");
  run->add_option("--objective", objective, "se or ee");
  run->add_option("--schemes", schemes, "comma list: nafd,rvfd,gvfd,hd,fd");
  run->add_option("--realizations", realizations, "channel realizations");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--workers", workers,
                  "worker threads (0: NAFD_WORKERS env or 1)");

  CLI::App* verify = app.add_subcommand("verify", "run the oracle suite");
  verify->add_option("--config", config_path, "plan JSON file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(config_path, objective, schemes, realizations, seed,
                     out_dir, workers);
    return cmd_verify(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
