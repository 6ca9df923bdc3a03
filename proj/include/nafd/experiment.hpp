#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "nafd/lifted.hpp"
#include "nafd/system_config.hpp"

namespace nafd {

enum class SweepAxis {
  kNumAps,      // M
  kNumUes,      // Kd = Ku = value, pilot length tracks the total
  kAntennas,    // N, holding N*M fixed at the base product
  kSiDb,        // residual self-interference over noise, dB
  kQos          // per-UE SE floor, both directions
};

std::string to_string(SweepAxis axis);
SweepAxis sweep_axis_from_string(const std::string& s);
Scheme scheme_from_string(const std::string& s);
Objective objective_from_string(const std::string& s);

struct ExperimentPlan {
  SystemConfig base;
  PowerParams power;
  SweepAxis axis = SweepAxis::kNumAps;
  std::vector<double> values;
  std::vector<Scheme> schemes;
  Objective objective = Objective::kSumSe;
  int realizations = 1;
  std::uint64_t master_seed = 1;
  std::string out_dir = "results";

  void validate() const;  // strictly increasing values, realizations >= 1
};

// JSON round-trip for plans; load throws std::runtime_error with the
// offending key on malformed input.
ExperimentPlan load_plan(const std::string& path);
void save_plan(const ExperimentPlan& plan, const std::string& path);
std::string plan_to_json(const ExperimentPlan& plan);
ExperimentPlan plan_from_json(const std::string& text);

// Base config with one sweep value applied.
SystemConfig apply_sweep(const SystemConfig& base, SweepAxis axis,
                         double value);

struct RealizationRecord {
  int sweep_index = 0;
  double sweep_value = 0;
  int realization = 0;
  std::uint64_t seed = 0;  // channel-generation seed for this realization
  Scheme scheme = Scheme::kNafd;
  bool ok = false;         // solver completed; false records carry `error`
  std::string error;
  SchemeResult result;
};

struct ExperimentResults {
  ExperimentPlan plan;
  std::vector<RealizationRecord> records;  // ordered by (sweep, real, scheme)
};

// Runs the full sweep-by-realization-by-scheme grid. Worker threads split
// the (sweep, realization) jobs; records land in index order, so the
// output is byte-identical for any worker count. `workers` <= 0 reads the
// NAFD_WORKERS environment variable, defaulting to 1.
ExperimentResults run_experiment(const ExperimentPlan& plan, int workers);

struct AggregateRow {
  int sweep_index = 0;
  double sweep_value = 0;
  Scheme scheme = Scheme::kNafd;
  int realizations = 0;
  double mean_sum_se = 0;
  double stderr_sum_se = 0;
  double mean_ee = 0;
  double stderr_ee = 0;
  double infeasibility_rate = 0;  // infeasible or errored realizations
};

std::vector<AggregateRow> aggregate(const ExperimentResults& results);

// Column schema (fixed): sweep_axis,sweep_value,scheme,objective,
// realizations,mean_sum_se,stderr_sum_se,mean_ee,stderr_ee,
// infeasibility_rate
std::string results_to_csv(const ExperimentResults& results);
std::string results_to_json(const ExperimentResults& results);

// Writes summary.csv and detail.json under plan.out_dir.
void emit(const ExperimentResults& results);

}  // namespace nafd
