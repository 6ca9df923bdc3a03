#include "nafd/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "nafd/baselines.hpp"
#include "nafd/channels.hpp"
#include "nafd/geometry.hpp"
#include "nafd/rng.hpp"

namespace nafd {

using nlohmann::json;

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kNumAps: return "num_aps";
    case SweepAxis::kNumUes: return "num_ues";
    case SweepAxis::kAntennas: return "antennas";
    case SweepAxis::kSiDb: return "si_db";
    case SweepAxis::kQos: return "qos";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "num_aps") return SweepAxis::kNumAps;
  if (s == "num_ues") return SweepAxis::kNumUes;
  if (s == "antennas") return SweepAxis::kAntennas;
  if (s == "si_db") return SweepAxis::kSiDb;
  if (s == "qos") return SweepAxis::kQos;
  throw std::runtime_error("unknown sweep axis: " + s);
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "nafd") return Scheme::kNafd;
  if (s == "rvfd") return Scheme::kRvfd;
  if (s == "gvfd") return Scheme::kGvfd;
  if (s == "hd") return Scheme::kHd;
  if (s == "fd") return Scheme::kFd;
  throw std::runtime_error("unknown scheme: " + s);
}

Objective objective_from_string(const std::string& s) {
  if (s == "se") return Objective::kSumSe;
  if (s == "ee") return Objective::kEnergyEff;
  throw std::runtime_error("unknown objective: " + s);
}

void ExperimentPlan::validate() const {
  base.validate();
  power.validate();
  if (values.empty())
    throw std::invalid_argument("ExperimentPlan: no sweep values");
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] <= values[i - 1])
      throw std::invalid_argument(
          "ExperimentPlan: sweep values must be strictly increasing");
  if (schemes.empty())
    throw std::invalid_argument("ExperimentPlan: no schemes selected");
  if (realizations < 1)
    throw std::invalid_argument("ExperimentPlan: realizations must be >= 1");
}

SystemConfig apply_sweep(const SystemConfig& base, SweepAxis axis,
                         double value) {
  SystemConfig cfg = base;
  switch (axis) {
    case SweepAxis::kNumAps:
      cfg.num_aps = static_cast<int>(std::lround(value));
      break;
    case SweepAxis::kNumUes: {
      int k = static_cast<int>(std::lround(value));
      cfg.num_dl_ues = k;
      cfg.num_ul_ues = k;
      cfg.pilot_len = 2 * k;
      break;
    }
    case SweepAxis::kAntennas: {
      int n = static_cast<int>(std::lround(value));
      long total = static_cast<long>(base.num_aps) * base.antennas_per_ap;
      cfg.antennas_per_ap = n;
      cfg.num_aps = static_cast<int>(
          std::max<long>(1, std::lround(static_cast<double>(total) / n)));
      cfg.tx_antennas_fd = n / 2;
      cfg.rx_antennas_fd = n - n / 2;
      break;
    }
    case SweepAxis::kSiDb:
      cfg.si_over_noise_db = value;
      break;
    case SweepAxis::kQos:
      cfg.qos_dl = value;
      cfg.qos_ul = value;
      break;
  }
  return cfg;
}

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

json config_to_json(const SystemConfig& c) {
  return json{{"num_aps", c.num_aps},
              {"antennas_per_ap", c.antennas_per_ap},
              {"tx_antennas_fd", c.tx_antennas_fd},
              {"rx_antennas_fd", c.rx_antennas_fd},
              {"num_dl_ues", c.num_dl_ues},
              {"num_ul_ues", c.num_ul_ues},
              {"coherence_len", c.coherence_len},
              {"pilot_len", c.pilot_len},
              {"bandwidth_hz", c.bandwidth_hz},
              {"noise_figure_db", c.noise_figure_db},
              {"noise_temp_k", c.noise_temp_k},
              {"ap_power_w", c.ap_power_w},
              {"ue_power_w", c.ue_power_w},
              {"pilot_power_w", c.pilot_power_w},
              {"qos_dl", c.qos_dl},
              {"qos_ul", c.qos_ul},
              {"si_over_noise_db", c.si_over_noise_db},
              {"area_side_m", c.area_side_m},
              {"min_ap_spacing_m", c.min_ap_spacing_m}};
}

void config_from_json(const json& j, SystemConfig* c) {
  c->num_aps = j.value("num_aps", c->num_aps);
  c->antennas_per_ap = j.value("antennas_per_ap", c->antennas_per_ap);
  c->tx_antennas_fd = j.value("tx_antennas_fd", c->tx_antennas_fd);
  c->rx_antennas_fd = j.value("rx_antennas_fd", c->rx_antennas_fd);
  c->num_dl_ues = j.value("num_dl_ues", c->num_dl_ues);
  c->num_ul_ues = j.value("num_ul_ues", c->num_ul_ues);
  c->coherence_len = j.value("coherence_len", c->coherence_len);
  c->pilot_len = j.value("pilot_len", c->pilot_len);
  c->bandwidth_hz = j.value("bandwidth_hz", c->bandwidth_hz);
  c->noise_figure_db = j.value("noise_figure_db", c->noise_figure_db);
  c->noise_temp_k = j.value("noise_temp_k", c->noise_temp_k);
  c->ap_power_w = j.value("ap_power_w", c->ap_power_w);
  c->ue_power_w = j.value("ue_power_w", c->ue_power_w);
  c->pilot_power_w = j.value("pilot_power_w", c->pilot_power_w);
  c->qos_dl = j.value("qos_dl", c->qos_dl);
  c->qos_ul = j.value("qos_ul", c->qos_ul);
  c->si_over_noise_db = j.value("si_over_noise_db", c->si_over_noise_db);
  c->area_side_m = j.value("area_side_m", c->area_side_m);
  c->min_ap_spacing_m = j.value("min_ap_spacing_m", c->min_ap_spacing_m);
}

json power_to_json(const PowerParams& p) {
  return json{{"pa_eff_dl", p.pa_eff_dl},
              {"pa_eff_ul", p.pa_eff_ul},
              {"circuit_dl_w", p.circuit_dl_w},
              {"circuit_ul_w", p.circuit_ul_w},
              {"fixed_dl_w", p.fixed_dl_w},
              {"fixed_ul_w", p.fixed_ul_w},
              {"ue_fixed_dl_w", p.ue_fixed_dl_w},
              {"ue_fixed_ul_w", p.ue_fixed_ul_w},
              {"backhaul_w_per_bps", p.backhaul_w_per_bps},
              {"si_cancel_w", p.si_cancel_w}};
}

void power_from_json(const json& j, PowerParams* p) {
  p->pa_eff_dl = j.value("pa_eff_dl", p->pa_eff_dl);
  p->pa_eff_ul = j.value("pa_eff_ul", p->pa_eff_ul);
  p->circuit_dl_w = j.value("circuit_dl_w", p->circuit_dl_w);
  p->circuit_ul_w = j.value("circuit_ul_w", p->circuit_ul_w);
  p->fixed_dl_w = j.value("fixed_dl_w", p->fixed_dl_w);
  p->fixed_ul_w = j.value("fixed_ul_w", p->fixed_ul_w);
  p->ue_fixed_dl_w = j.value("ue_fixed_dl_w", p->ue_fixed_dl_w);
  p->ue_fixed_ul_w = j.value("ue_fixed_ul_w", p->ue_fixed_ul_w);
  p->backhaul_w_per_bps = j.value("backhaul_w_per_bps", p->backhaul_w_per_bps);
  p->si_cancel_w = j.value("si_cancel_w", p->si_cancel_w);
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json result_to_json(const SchemeResult& r) {
  json trace = json::array();
  for (const auto& it : r.trace)
    trace.push_back(json{{"iter", it.iter},
                         {"objective", it.objective},
                         {"binary_violation", it.binary_violation},
                         {"slack_total", it.slack_total},
                         {"status", it.status}});
  return json{{"feasible", r.feasible},
              {"se_dl", vector_to_json(r.se_dl)},
              {"se_ul", vector_to_json(r.se_ul)},
              {"sum_se", r.sum_se},
              {"power",
               {{"transmit_ap", r.power.transmit_ap},
                {"transmit_ue", r.power.transmit_ue},
                {"ue_fixed", r.power.ue_fixed},
                {"circuit", r.power.circuit},
                {"fixed_backhaul", r.power.fixed_backhaul},
                {"traffic_backhaul", r.power.traffic_backhaul},
                {"si_cancellation", r.power.si_cancellation}}},
              {"power_total_w", r.power_total_w},
              {"energy_eff", r.energy_eff},
              {"energy_eff_fullbh", r.energy_eff_fullbh},
              {"modes_dl", vector_to_json(r.vars.a)},
              {"binary_gap", r.binary_gap},
              {"rounding_flagged", r.rounding_flagged},
              {"note", r.note},
              {"solve_seconds", r.solve_seconds},
              {"trace", trace}};
}

}  // namespace

std::string plan_to_json(const ExperimentPlan& plan) {
  json schemes = json::array();
  for (Scheme s : plan.schemes) schemes.push_back(to_string(s));
  json j{{"system", config_to_json(plan.base)},
         {"power", power_to_json(plan.power)},
         {"sweep", {{"axis", to_string(plan.axis)}, {"values", plan.values}}},
         {"schemes", schemes},
         {"objective", to_string(plan.objective)},
         {"realizations", plan.realizations},
         {"master_seed", plan.master_seed},
         {"out_dir", plan.out_dir}};
  return j.dump(2) + "\n";
}

ExperimentPlan plan_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("plan parse error: ") + e.what());
  }
  ExperimentPlan plan;
  try {
    if (j.contains("system")) config_from_json(j.at("system"), &plan.base);
    if (j.contains("power")) power_from_json(j.at("power"), &plan.power);
    if (j.contains("sweep")) {
      const json& sw = j.at("sweep");
      plan.axis = sweep_axis_from_string(sw.value("axis", "num_aps"));
      if (sw.contains("values"))
        plan.values = sw.at("values").get<std::vector<double>>();
    }
    if (plan.values.empty())
      plan.values = {static_cast<double>(plan.base.num_aps)};
    if (j.contains("schemes")) {
      plan.schemes.clear();
      for (const auto& s : j.at("schemes"))
        plan.schemes.push_back(scheme_from_string(s.get<std::string>()));
    }
    if (plan.schemes.empty()) plan.schemes = {Scheme::kNafd};
    plan.objective = objective_from_string(j.value("objective", "se"));
    plan.realizations = j.value("realizations", plan.realizations);
    plan.master_seed = j.value("master_seed", plan.master_seed);
    plan.out_dir = j.value("out_dir", plan.out_dir);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("plan field error: ") + e.what());
  }
  return plan;
}

ExperimentPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open plan file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return plan_from_json(ss.str());
}

void save_plan(const ExperimentPlan& plan, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write plan file: " + path);
  out << plan_to_json(plan);
}

namespace {

// One (sweep value, realization) job: channels are generated once and
// every requested scheme runs on them.
std::vector<RealizationRecord> run_job(const ExperimentPlan& plan,
                                       int sweep_index, int realization) {
  std::vector<RealizationRecord> records;
  const double value = plan.values[sweep_index];
  const std::uint64_t seed = derive_seed(
      plan.master_seed, static_cast<std::uint64_t>(sweep_index),
      static_cast<std::uint64_t>(realization));

  RealizationRecord base;
  base.sweep_index = sweep_index;
  base.sweep_value = value;
  base.realization = realization;
  base.seed = seed;

  SystemConfig cfg;
  LargeScaleChannels ch;
  std::string gen_error;
  try {
    cfg = apply_sweep(plan.base, plan.axis, value);
    cfg.validate();
    NetworkGeometry geo = place_network(cfg, seed);
    ch = large_scale_fading(geo, cfg, seed);
  } catch (const std::exception& e) {
    gen_error = e.what();
  }

  for (std::size_t si = 0; si < plan.schemes.size(); ++si) {
    RealizationRecord rec = base;
    rec.scheme = plan.schemes[si];
    if (!gen_error.empty()) {
      rec.ok = false;
      rec.error = "channel generation: " + gen_error;
      rec.result.scheme = rec.scheme;
      records.push_back(std::move(rec));
      continue;
    }
    ScaConfig sca = default_sca_config(plan.objective);
    sca.seed = derive_seed(seed, 0x7363u, si);
    try {
      auto t0 = std::chrono::steady_clock::now();
      switch (rec.scheme) {
        case Scheme::kNafd:
          rec.result = optimize_nafd(cfg, ch, plan.power, plan.objective, sca);
          break;
        case Scheme::kRvfd:
          rec.result = optimize_rvfd(cfg, ch, plan.power, plan.objective, sca);
          break;
        case Scheme::kGvfd:
          rec.result = evaluate_gvfd(cfg, ch, plan.power);
          break;
        case Scheme::kHd:
          rec.result = optimize_hd(cfg, ch, plan.power, plan.objective, sca);
          break;
        case Scheme::kFd:
          rec.result = optimize_fd(cfg, ch, plan.power, plan.objective, sca);
          break;
      }
      if (rec.result.solve_seconds == 0)
        rec.result.solve_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                          t0)
                .count();
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
      rec.result.scheme = rec.scheme;
      rec.result.feasible = false;
      rec.result.se_dl = Eigen::VectorXd::Zero(cfg.num_dl_ues);
      rec.result.se_ul = Eigen::VectorXd::Zero(cfg.num_ul_ues);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

int resolve_workers(int workers) {
  if (workers <= 0) {
    const char* env = std::getenv("NAFD_WORKERS");
    workers = env ? std::atoi(env) : 1;
  }
  return std::clamp(workers, 1, 64);
}

}  // namespace

ExperimentResults run_experiment(const ExperimentPlan& plan, int workers) {
  plan.validate();
  ExperimentResults results;
  results.plan = plan;
  const int n_jobs = static_cast<int>(plan.values.size()) * plan.realizations;
  std::vector<std::vector<RealizationRecord>> slots(n_jobs);
  std::atomic<int> next{0};

  auto work = [&]() {
    for (;;) {
      int job = next.fetch_add(1);
      if (job >= n_jobs) return;
      int sweep_index = job / plan.realizations;
      int realization = job % plan.realizations;
      slots[job] = run_job(plan, sweep_index, realization);
    }
  };

  int n_workers = std::min(resolve_workers(workers), n_jobs);
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  for (auto& slot : slots)
    for (auto& rec : slot) results.records.push_back(std::move(rec));
  return results;
}

std::vector<AggregateRow> aggregate(const ExperimentResults& results) {
  const ExperimentPlan& plan = results.plan;
  std::vector<AggregateRow> rows;
  for (std::size_t vi = 0; vi < plan.values.size(); ++vi) {
    for (Scheme scheme : plan.schemes) {
      AggregateRow row;
      row.sweep_index = static_cast<int>(vi);
      row.sweep_value = plan.values[vi];
      row.scheme = scheme;
      std::vector<double> se, ee;
      int infeasible = 0;
      for (const auto& rec : results.records) {
        if (rec.sweep_index != static_cast<int>(vi) || rec.scheme != scheme)
          continue;
        se.push_back(rec.result.sum_se);
        ee.push_back(rec.result.energy_eff);
        if (!rec.ok || !rec.result.feasible) ++infeasible;
      }
      row.realizations = static_cast<int>(se.size());
      if (row.realizations == 0) continue;
      auto mean_stderr = [](const std::vector<double>& x, double* m,
                            double* s) {
        double mean = 0;
        for (double v : x) mean += v;
        mean /= static_cast<double>(x.size());
        double var = 0;
        for (double v : x) var += (v - mean) * (v - mean);
        *m = mean;
        *s = x.size() > 1 ? std::sqrt(var / ((x.size() - 1.0) * x.size()))
                          : 0.0;
      };
      mean_stderr(se, &row.mean_sum_se, &row.stderr_sum_se);
      mean_stderr(ee, &row.mean_ee, &row.stderr_ee);
      row.infeasibility_rate =
          static_cast<double>(infeasible) / row.realizations;
      rows.push_back(row);
    }
  }
  return rows;
}

std::string results_to_csv(const ExperimentResults& results) {
  std::string out =
      "sweep_axis,sweep_value,scheme,objective,realizations,mean_sum_se,"
      "stderr_sum_se,mean_ee,stderr_ee,infeasibility_rate\n";
  for (const AggregateRow& row : aggregate(results)) {
    out += to_string(results.plan.axis) + "," + fmt(row.sweep_value) + "," +
           to_string(row.scheme) + "," + to_string(results.plan.objective) +
           "," + std::to_string(row.realizations) + "," +
           fmt(row.mean_sum_se) + "," + fmt(row.stderr_sum_se) + "," +
           fmt(row.mean_ee) + "," + fmt(row.stderr_ee) + "," +
           fmt(row.infeasibility_rate) + "\n";
  }
  return out;
}

std::string results_to_json(const ExperimentResults& results) {
  json records = json::array();
  for (const auto& rec : results.records)
    records.push_back(json{{"sweep_index", rec.sweep_index},
                           {"sweep_value", rec.sweep_value},
                           {"realization", rec.realization},
                           {"seed", rec.seed},
                           {"scheme", to_string(rec.scheme)},
                           {"ok", rec.ok},
                           {"error", rec.error},
                           {"result", result_to_json(rec.result)}});
  json j{{"plan", json::parse(plan_to_json(results.plan))},
         {"records", records}};
  return j.dump(2) + "\n";
}

void emit(const ExperimentResults& results) {
  namespace fs = std::filesystem;
  fs::create_directories(results.plan.out_dir);
  {
    std::ofstream csv(fs::path(results.plan.out_dir) / "summary.csv");
    csv << results_to_csv(results);
  }
  {
    std::ofstream js(fs::path(results.plan.out_dir) / "detail.json");
    js << results_to_json(results);
  }
}

}  // namespace nafd
