#include "nafd/mode_search.hpp"

#include "nafd/sca.hpp"

namespace nafd {

ModeSearchResult exhaustive_mode_search(const SystemConfig& cfg,
                                        const LargeScaleChannels& ch,
                                        const PowerParams& pp, Objective obj,
                                        const ScaConfig& sca) {
  if (cfg.num_aps > 8)
    throw InstanceTooLarge("exhaustive_mode_search: more than 8 access points");
  const int m_aps = cfg.num_aps;
  ModeSearchResult out;
  out.best.feasible = false;
  double best_val = -1.0;
  for (unsigned mask = 0; mask < (1u << m_aps); ++mask) {
    Eigen::VectorXd a(m_aps);
    for (int m = 0; m < m_aps; ++m) a(m) = (mask >> m) & 1u ? 1.0 : 0.0;
    SchemeModel model = make_fixed_mode_model(cfg, ch, a);
    SchemeResult res = run_sca(cfg, ch, pp, model, obj, sca);
    ModeSearchEntry entry;
    entry.a = a;
    entry.feasible = res.feasible;
    entry.objective =
        obj == Objective::kSumSe ? res.sum_se : res.energy_eff;
    out.entries.push_back(entry);
    if (res.feasible && entry.objective > best_val) {
      best_val = entry.objective;
      out.best = res;
      out.best_a = a;
    }
  }
  return out;
}

}  // namespace nafd
