#include "mixedbo/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>

#include <nlohmann/json.hpp>

#include "mixedbo/reparam.hpp"
#include "mixedbo/rng.hpp"
#include "mixedbo/surrogate.hpp"
#include "mixedbo/trust_region.hpp"

namespace mixedbo {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool all_nonneg(const std::vector<double>& c) {
  for (double v : c) {
    if (v < 0.0) return false;
  }
  return true;
}

std::string canonical_config(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["problem"] = cfg.problem_id;
  j["method"] = method_name(cfg.method);
  j["tr"] = cfg.trust_region;
  j["acqf"] = acqf_name(cfg.acqf);
  j["n_init"] = cfg.n_init;
  j["n_iterations"] = cfg.n_iterations;
  j["replications"] = cfg.replications;
  j["seed"] = cfg.base_seed;
  j["restarts"] = cfg.optimizer.restarts;
  j["max_iterations"] = cfg.optimizer.max_iterations;
  j["mc_samples"] = cfg.optimizer.mc_samples;
  j["learning_rate"] = cfg.optimizer.learning_rate;
  j["tau"] = cfg.optimizer.tau;
  j["raw_candidates"] = cfg.optimizer.raw_candidates;
  j["fd_step"] = cfg.optimizer.fd_step;
  j["final_samples"] = cfg.optimizer.final_samples_per_restart;
  j["sga"] = cfg.optimizer.use_sga;
  return j.dump();
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

const char* acqf_name(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::kEi: return "ei";
    case AcquisitionKind::kConstrainedEi: return "cei";
    case AcquisitionKind::kUcb: return "ucb";
  }
  return "unknown";
}

std::optional<AcquisitionKind> acqf_from_name(const std::string& name) {
  if (name == "ei") return AcquisitionKind::kEi;
  if (name == "cei") return AcquisitionKind::kConstrainedEi;
  if (name == "ucb") return AcquisitionKind::kUcb;
  return std::nullopt;
}

std::string config_hash(const ExperimentConfig& cfg) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical_config(cfg))));
  return buf;
}

int worker_budget() {
  if (const char* env = std::getenv("MIXEDBO_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

RunRecord run_bo(const ExperimentConfig& cfg, int replicate_index) {
  const Problem problem = make_problem(cfg.problem_id, cfg.base_seed);
  return run_bo(cfg, problem, replicate_index);
}

RunRecord run_bo(const ExperimentConfig& cfg, const Problem& problem, int replicate_index) {
  if (cfg.n_iterations < 0 || cfg.replications < 1) {
    throw std::invalid_argument("invalid experiment config");
  }
  const SearchSpace& space = problem.space;
  const std::size_t d_eff = effective_dim(space);
  const std::uint64_t rep_seed = derive_seed(cfg.base_seed, 0x7265706cULL,
                                             static_cast<std::uint64_t>(replicate_index));
  Rng noise_rng = make_rng(derive_seed(rep_seed, 0x6e6f6973ULL));

  RunRecord record;
  record.problem_id = problem.id;
  record.method_id = std::string(method_name(cfg.method)) + (cfg.trust_region ? "+tr" : "");
  record.acqf_id = acqf_name(cfg.acqf);
  record.replicate = replicate_index;
  record.seed = rep_seed;
  record.config_hash = config_hash(cfg);

  double best_feasible = kNaN;
  auto push_row = [&](const DesignPoint& p, double wall_s, bool fallback) {
    Evaluation ev = problem.evaluator(p);
    if (problem.noise_sd > 0.0) ev.objective += problem.noise_sd * normal01(noise_rng);
    IterationRecord row;
    row.point = p;
    row.objective = ev.objective;
    row.constraints = ev.constraints;
    row.feasible = all_nonneg(ev.constraints);
    if (row.feasible && (std::isnan(best_feasible) || ev.objective < best_feasible)) {
      best_feasible = ev.objective;
    }
    row.incumbent = best_feasible;
    row.wall_time_s = wall_s;
    row.fallback = fallback;
    record.iterations.push_back(std::move(row));
  };

  const int n_init = cfg.n_init > 0
                         ? cfg.n_init
                         : static_cast<int>(std::min<std::size_t>(20, 2 * d_eff));
  for (const DesignPoint& p :
       sobol_init(space, static_cast<std::size_t>(n_init), derive_seed(rep_seed, 0x696e6974ULL))) {
    push_row(p, 0.0, false);
  }

  // kernel selection follows the optimizer: the continuous relaxation cannot
  // use the categorical kernel, everything else can
  const KernelStructure structure =
      cfg.method == AcqOptMethod::kContRelax && space.num_categorical() > 0
          ? KernelStructure::kMaternOneHot
          : KernelStructure::kMixedSumProduct;

  TrustRegionState tr_state = make_tr_state(space);

  for (int iter = 0; iter < cfg.n_iterations; ++iter) {
    // refit surrogates from scratch each iteration
    std::vector<DesignPoint> xs;
    std::vector<double> ys_max;  // negated objective: acquisition maximizes
    xs.reserve(record.iterations.size());
    for (const auto& row : record.iterations) {
      xs.push_back(row.point);
      ys_max.push_back(-row.objective);
    }
    FitOptions fit_opts;
    fit_opts.structure = structure;
    const GPModel obj_model = fit_gp(space, xs, ys_max,
                                     derive_seed(rep_seed, 0x666974ULL,
                                                 static_cast<std::uint64_t>(iter)),
                                     fit_opts);
    std::vector<GPModel> constraint_models;
    constraint_models.reserve(problem.num_constraints);
    for (std::size_t v = 0; v < problem.num_constraints; ++v) {
      std::vector<double> cs;
      cs.reserve(record.iterations.size());
      for (const auto& row : record.iterations) cs.push_back(row.constraints[v]);
      constraint_models.push_back(
          fit_gp(space, xs, cs,
                 derive_seed(rep_seed, 0x636f6e73ULL,
                             static_cast<std::uint64_t>(iter) * 97 + v),
                 fit_opts));
    }

    AcquisitionSpec acq;
    acq.kind = problem.num_constraints > 0 ? AcquisitionKind::kConstrainedEi : cfg.acqf;
    acq.objective_model = &obj_model;
    for (const auto& m : constraint_models) acq.constraint_models.push_back(&m);
    if (acq.kind == AcquisitionKind::kUcb) {
      acq.beta = ucb_beta(iter + 1, d_eff);
    } else {
      // incumbent in maximization units; before any feasible observation fall
      // back to the worst observed value minus one standard deviation
      if (!std::isnan(best_feasible)) {
        acq.incumbent = -best_feasible;
      } else {
        double worst = std::numeric_limits<double>::infinity();
        double mean = 0.0;
        for (double y : ys_max) {
          worst = std::min(worst, y);
          mean += y;
        }
        mean /= static_cast<double>(ys_max.size());
        double var = 0.0;
        for (double y : ys_max) var += (y - mean) * (y - mean);
        const double sd = std::sqrt(var / std::max<double>(1.0, ys_max.size() - 1.0));
        acq.incumbent = worst - (sd > 0.0 ? sd : 1.0);
      }
    }

    AcqOptimizerConfig opt = cfg.optimizer;
    opt.method = cfg.method;
    opt.seed = derive_seed(rep_seed, 0x61637169ULL, static_cast<std::uint64_t>(iter));

    const AcqOracle oracle = make_oracle(acq, space);

    DesignPoint next;
    bool fallback = false;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (cfg.trust_region) {
        if (tr_state.restart_flag) tr_state = tr_restart(tr_state);
        // center on the incumbent (best feasible, else best objective)
        std::size_t best_idx = 0;
        double best_val = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < record.iterations.size(); ++i) {
          const auto& row = record.iterations[i];
          const bool better = row.feasible
                                  ? (row.objective < best_val)
                                  : (std::isnan(best_feasible) && row.objective < best_val);
          if (better) {
            best_val = row.objective;
            best_idx = i;
          }
        }
        tr_state.center = record.iterations[best_idx].point;
        next = constrained_optimize(oracle, space, opt, tr_state, obj_model).point;
      } else {
        next = optimize_acquisition(oracle, space, opt).point;
      }
    } catch (const std::exception&) {
      // fall back to a random quasi-random point, keep the run alive
      next = sobol_init(space, 1,
                        derive_seed(rep_seed, 0x66616c6cULL,
                                    static_cast<std::uint64_t>(iter)))[0];
      fallback = true;
    }
    const double wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const double prev_best = best_feasible;
    push_row(next, wall_s, fallback);
    if (cfg.trust_region) {
      const auto& row = record.iterations.back();
      const bool improved =
          row.feasible && (std::isnan(prev_best) || row.objective < prev_best);
      tr_state = tr_update(tr_state, improved);
    }
  }
  return record;
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg) {
  const Problem problem = make_problem(cfg.problem_id, cfg.base_seed);
  return run_experiment(cfg, problem);
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg, const Problem& problem) {
  std::vector<RunRecord> records(static_cast<std::size_t>(cfg.replications));
  const int workers = std::max(1, std::min(worker_budget(), cfg.replications));
  if (workers == 1) {
    for (int r = 0; r < cfg.replications; ++r) {
      records[static_cast<std::size_t>(r)] = run_bo(cfg, problem, r);
    }
    return records;
  }
  std::atomic<int> counter{0};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int r = counter.fetch_add(1);
        if (r >= cfg.replications) return;
        records[static_cast<std::size_t>(r)] = run_bo(cfg, problem, r);
      }
    });
  }
  for (auto& t : pool) t.join();
  return records;
}

std::vector<std::vector<double>> compute_regret(const std::vector<RunRecord>& records,
                                                std::optional<double> f_star) {
  if (records.empty()) throw EmptyHistoryError("compute_regret needs at least one record");
  double pooled_best = std::numeric_limits<double>::infinity();
  double pooled_worst = -std::numeric_limits<double>::infinity();
  for (const auto& rec : records) {
    if (rec.iterations.empty()) throw EmptyHistoryError("record has no iterations");
    for (const auto& row : rec.iterations) {
      pooled_worst = std::max(pooled_worst, row.objective);
      if (!std::isnan(row.incumbent)) pooled_best = std::min(pooled_best, row.incumbent);
    }
  }
  const double reference = f_star.has_value() ? *f_star : pooled_best;
  const double shifted = reference - 0.1;  // improving direction under minimization

  std::vector<std::vector<double>> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    std::vector<double> series;
    series.reserve(rec.iterations.size());
    for (const auto& row : rec.iterations) {
      const double inc = std::isnan(row.incumbent) ? pooled_worst : row.incumbent;
      series.push_back(std::log10(inc - shifted));
    }
    out.push_back(std::move(series));
  }
  return out;
}

AggregateSeries aggregate(const std::vector<std::vector<double>>& series) {
  if (series.empty()) throw std::invalid_argument("aggregate needs at least one series");
  const std::size_t len = series[0].size();
  for (const auto& s : series) {
    if (s.size() != len) throw std::invalid_argument("aggregate needs equal-length series");
  }
  AggregateSeries agg;
  agg.mean.resize(len);
  agg.se.resize(len);
  agg.band_lo.resize(len);
  agg.band_hi.resize(len);
  const double r = static_cast<double>(series.size());
  for (std::size_t t = 0; t < len; ++t) {
    double m = 0.0;
    for (const auto& s : series) m += s[t];
    m /= r;
    double var = 0.0;
    for (const auto& s : series) var += (s[t] - m) * (s[t] - m);
    const double sd = series.size() > 1 ? std::sqrt(var / (r - 1.0)) : 0.0;
    agg.mean[t] = m;
    agg.se[t] = sd / std::sqrt(r);
    agg.band_lo[t] = m - 2.0 * agg.se[t];
    agg.band_hi[t] = m + 2.0 * agg.se[t];
  }
  return agg;
}

namespace {

nlohmann::json record_to_json(const RunRecord& rec) {
  nlohmann::json j;
  j["problem"] = rec.problem_id;
  j["method"] = rec.method_id;
  j["acqf"] = rec.acqf_id;
  j["replicate"] = rec.replicate;
  j["seed"] = rec.seed;
  j["config_hash"] = rec.config_hash;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : rec.iterations) {
    nlohmann::json r;
    r["point"] = row.point.values;
    r["objective"] = row.objective;
    r["constraints"] = row.constraints;
    r["feasible"] = row.feasible;
    if (std::isnan(row.incumbent)) {
      r["incumbent"] = nullptr;
    } else {
      r["incumbent"] = row.incumbent;
    }
    r["wall_time_s"] = row.wall_time_s;
    r["fallback"] = row.fallback;
    rows.push_back(std::move(r));
  }
  j["iterations"] = std::move(rows);
  return j;
}

RunRecord record_from_json(const nlohmann::json& j) {
  RunRecord rec;
  rec.problem_id = j.at("problem").get<std::string>();
  rec.method_id = j.at("method").get<std::string>();
  rec.acqf_id = j.at("acqf").get<std::string>();
  rec.replicate = j.at("replicate").get<int>();
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.config_hash = j.at("config_hash").get<std::string>();
  for (const auto& r : j.at("iterations")) {
    IterationRecord row;
    row.point.values = r.at("point").get<std::vector<double>>();
    row.objective = r.at("objective").get<double>();
    row.constraints = r.at("constraints").get<std::vector<double>>();
    row.feasible = r.at("feasible").get<bool>();
    row.incumbent = r.at("incumbent").is_null() ? kNaN : r.at("incumbent").get<double>();
    row.wall_time_s = r.at("wall_time_s").get<double>();
    row.fallback = r.value("fallback", false);
    rec.iterations.push_back(std::move(row));
  }
  return rec;
}

}  // namespace

void export_records(const std::vector<RunRecord>& records, ExportFormat format,
                    const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  if (format == ExportFormat::kJsonl) {
    for (const auto& rec : records) out << record_to_json(rec).dump() << "\n";
    if (!out) throw std::runtime_error("write failed: " + path);
    return;
  }
  const std::vector<std::vector<double>> regret = compute_regret(records);
  out << "method,problem,replicate,iteration,objective,incumbent,feasible,regret_log10,"
         "wall_time_s\n";
  for (std::size_t k = 0; k < records.size(); ++k) {
    const auto& rec = records[k];
    for (std::size_t t = 0; t < rec.iterations.size(); ++t) {
      const auto& row = rec.iterations[t];
      out << rec.method_id << ',' << rec.problem_id << ',' << rec.replicate << ',' << t
          << ',' << format_double(row.objective) << ',' << format_double(row.incumbent)
          << ',' << (row.feasible ? 1 : 0) << ',' << format_double(regret[k][t]) << ','
          << format_double(row.wall_time_s) << "\n";
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<RunRecord> import_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::vector<RunRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return records;
}

}  // namespace mixedbo
