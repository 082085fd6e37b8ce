#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixedbo/acqopt.hpp"
#include "mixedbo/acquisition.hpp"
#include "mixedbo/problems.hpp"
#include "mixedbo/space.hpp"

namespace mixedbo {

struct ExperimentConfig {
  std::string problem_id;
  AcqOptMethod method = AcqOptMethod::kPrAdam;
  bool trust_region = false;
  AcquisitionKind acqf = AcquisitionKind::kEi;
  int n_init = 0;  // 0 -> min(20, 2 * d_eff)
  int n_iterations = 30;
  int replications = 1;
  std::uint64_t base_seed = 0;
  AcqOptimizerConfig optimizer;  // restarts, samples, lr, tau, ... (seed derived)
};

struct IterationRecord {
  DesignPoint point;
  double objective = 0.0;  // raw problem value (minimization convention)
  std::vector<double> constraints;
  bool feasible = true;
  double incumbent = 0.0;  // best feasible objective so far; NaN before any
  double wall_time_s = 0.0;  // acquisition optimization time; 0 for init rows
  bool fallback = false;     // acquisition optimization failed, random point used
};

struct RunRecord {
  std::string problem_id;
  std::string method_id;
  std::string acqf_id;
  int replicate = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<IterationRecord> iterations;  // length n_init + n_iterations
};

// One full BO run (Sobol init + fit/optimize/evaluate loop), deterministic
// given (config, replicate_index).
RunRecord run_bo(const ExperimentConfig& cfg, int replicate_index);
RunRecord run_bo(const ExperimentConfig& cfg, const Problem& problem, int replicate_index);

// All replications; parallel workers capped by MIXEDBO_WORKERS.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, const Problem& problem);

struct EmptyHistoryError : std::runtime_error {
  explicit EmptyHistoryError(const std::string& what) : std::runtime_error(what) {}
};

// Per-iteration log10 regret for each record. When f_star is absent the
// pooled best feasible incumbent across all records stands in for it; either
// way the reference is shifted by 0.1 in the improving direction. Iterations
// before the first feasible point fall back to the pooled worst observation.
std::vector<std::vector<double>> compute_regret(const std::vector<RunRecord>& records,
                                                std::optional<double> f_star = {});

struct AggregateSeries {
  std::vector<double> mean;
  std::vector<double> se;       // standard error of the mean
  std::vector<double> band_lo;  // mean - 2 se
  std::vector<double> band_hi;  // mean + 2 se
};
AggregateSeries aggregate(const std::vector<std::vector<double>>& series);

enum class ExportFormat { kCsv, kJsonl };

// CSV columns: method,problem,replicate,iteration,objective,incumbent,
// feasible,regret_log10,wall_time_s. JSONL holds one RunRecord per line.
void export_records(const std::vector<RunRecord>& records, ExportFormat format,
                    const std::string& path);
std::vector<RunRecord> import_jsonl(const std::string& path);

// Stable 64-bit hash of the canonical config encoding (identical across
// processes for identical configs).
std::string config_hash(const ExperimentConfig& cfg);

const char* acqf_name(AcquisitionKind kind);
std::optional<AcquisitionKind> acqf_from_name(const std::string& name);

// Worker budget: MIXEDBO_WORKERS when set, hardware concurrency otherwise.
int worker_budget();

}  // namespace mixedbo
