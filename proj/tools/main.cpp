// Command line front end: run experiments, aggregate regret, self-check.
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>

#include "mixedbo/harness.hpp"
#include "mixedbo/reparam.hpp"
#include "mixedbo/rng.hpp"
#include "mixedbo/trust_region.hpp"

namespace fs = std::filesystem;
using namespace mixedbo;

namespace {

struct RunArgs {
  std::string problem = "branin_binary";
  std::string method = "pr_adam";
  std::string acqf = "ei";
  int iters = 30;
  int reps = 1;
  std::uint64_t seed = 0;
  int mc_samples = 128;
  double tau = 0.1;
  double lr = 1.0 / 40.0;
  std::string tr = "off";
  std::string out_dir = "runs";
  std::string config_file;
  int n_init = 0;
  int restarts = 20;
  int opt_iters = 200;
  bool trace = false;
};

ExperimentConfig build_config(const RunArgs& args, const CLI::App* cmd) {
  ExperimentConfig cfg;
  // file config first, explicit flags override
  if (!args.config_file.empty()) {
    std::ifstream in(args.config_file);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + args.config_file);
    nlohmann::json j;
    in >> j;
    cfg.problem_id = j.value("problem", cfg.problem_id);
    if (j.contains("method")) {
      const auto m = method_from_name(j["method"].get<std::string>());
      if (!m) throw CLI::ValidationError("--config", "unknown method in config");
      cfg.method = *m;
    }
    if (j.contains("acqf")) {
      const auto a = acqf_from_name(j["acqf"].get<std::string>());
      if (!a) throw CLI::ValidationError("--config", "unknown acqf in config");
      cfg.acqf = *a;
    }
    cfg.trust_region = j.value("tr", cfg.trust_region);
    cfg.n_init = j.value("n_init", cfg.n_init);
    cfg.n_iterations = j.value("iters", cfg.n_iterations);
    cfg.replications = j.value("reps", cfg.replications);
    cfg.base_seed = j.value("seed", cfg.base_seed);
    cfg.optimizer.mc_samples = j.value("mc_samples", cfg.optimizer.mc_samples);
    cfg.optimizer.tau = j.value("tau", cfg.optimizer.tau);
    cfg.optimizer.learning_rate = j.value("lr", cfg.optimizer.learning_rate);
    cfg.optimizer.restarts = j.value("restarts", cfg.optimizer.restarts);
    cfg.optimizer.max_iterations = j.value("opt_iters", cfg.optimizer.max_iterations);
  }
  auto given = [&](const std::string& flag) { return cmd->count(flag) > 0; };
  if (given("--problem") || args.config_file.empty()) cfg.problem_id = args.problem;
  if (given("--method") || args.config_file.empty()) {
    const auto m = method_from_name(args.method);
    if (!m) throw CLI::ValidationError("--method", "unknown method " + args.method);
    cfg.method = *m;
  }
  if (given("--acqf") || args.config_file.empty()) {
    const auto a = acqf_from_name(args.acqf);
    if (!a) throw CLI::ValidationError("--acqf", "unknown acqf " + args.acqf);
    cfg.acqf = *a;
  }
  if (given("--tr") || args.config_file.empty()) cfg.trust_region = args.tr == "on";
  if (given("--iters") || args.config_file.empty()) cfg.n_iterations = args.iters;
  if (given("--reps") || args.config_file.empty()) cfg.replications = args.reps;
  if (given("--seed") || args.config_file.empty()) cfg.base_seed = args.seed;
  if (given("--n-init")) cfg.n_init = args.n_init;
  if (given("--mc-samples") || args.config_file.empty()) cfg.optimizer.mc_samples = args.mc_samples;
  if (given("--tau") || args.config_file.empty()) cfg.optimizer.tau = args.tau;
  if (given("--lr") || args.config_file.empty()) cfg.optimizer.learning_rate = args.lr;
  if (given("--restarts") || args.config_file.empty()) cfg.optimizer.restarts = args.restarts;
  if (given("--opt-iters") || args.config_file.empty()) cfg.optimizer.max_iterations = args.opt_iters;
  return cfg;
}

int cmd_run(const RunArgs& args, const CLI::App* cmd) {
  ExperimentConfig cfg = build_config(args, cmd);
  fs::create_directories(args.out_dir);

  std::ofstream trace_file;
  if (args.trace) {
    trace_file.open(fs::path(args.out_dir) / "trace.jsonl");
    cfg.optimizer.trace = [&trace_file](const TraceRecord& t) {
      nlohmann::json j{{"restart", t.restart},
                       {"step", t.step},
                       {"po_value", t.po_value},
                       {"grad_norm", t.grad_norm}};
      trace_file << j.dump() << "\n";
    };
  }

  const std::vector<RunRecord> records = run_experiment(cfg);
  const std::string stem = cfg.problem_id + "__" + std::string(method_name(cfg.method)) +
                           (cfg.trust_region ? "+tr" : "") + "__" + acqf_name(cfg.acqf);
  const fs::path csv = fs::path(args.out_dir) / (stem + ".csv");
  const fs::path jsonl = fs::path(args.out_dir) / (stem + ".jsonl");
  export_records(records, ExportFormat::kCsv, csv.string());
  export_records(records, ExportFormat::kJsonl, jsonl.string());

  const auto regret = compute_regret(records);
  const auto agg = aggregate(regret);
  std::cout << "wrote " << csv.string() << " and " << jsonl.string() << "\n";
  std::cout << "final regret (log10): mean " << agg.mean.back() << " +- 2se "
            << 2.0 * agg.se.back() << " over " << records.size() << " replications\n";
  return 0;
}

int cmd_regret(const std::string& in_dir, bool pool) {
  std::vector<RunRecord> all;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    if (entry.path().extension() == ".jsonl" && entry.path().filename() != "trace.jsonl") {
      const auto recs = import_jsonl(entry.path().string());
      all.insert(all.end(), recs.begin(), recs.end());
    }
  }
  if (all.empty()) {
    std::cerr << "no .jsonl run files under " << in_dir << "\n";
    return 1;
  }
  // group records; --pool shares the regret reference across methods
  std::map<std::string, std::vector<RunRecord>> groups;
  for (auto& rec : all) {
    const std::string key = pool ? rec.problem_id : rec.problem_id + "\t" + rec.method_id;
    groups[key].push_back(std::move(rec));
  }
  std::cout << "problem,method,iteration,mean_regret,se,band_lo,band_hi\n";
  for (auto& [key, recs] : groups) {
    const auto regret = compute_regret(recs);
    // aggregate per method within the group
    std::map<std::string, std::vector<std::size_t>> by_method;
    for (std::size_t i = 0; i < recs.size(); ++i) by_method[recs[i].method_id].push_back(i);
    for (const auto& [meth, idxs] : by_method) {
      std::vector<std::vector<double>> series;
      for (std::size_t i : idxs) series.push_back(regret[i]);
      const auto agg = aggregate(series);
      for (std::size_t t = 0; t < agg.mean.size(); ++t) {
        std::cout << recs[idxs[0]].problem_id << ',' << meth << ',' << t << ','
                  << agg.mean[t] << ',' << agg.se[t] << ',' << agg.band_lo[t] << ','
                  << agg.band_hi[t] << "\n";
      }
    }
  }
  return 0;
}

// Quick invariant sweep over the library's own contracts.
int cmd_selftest() {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    std::cout << (ok ? "PASS" : "FAIL") << " " << name << "\n";
    if (!ok) ++failures;
  };

  SearchSpace space(std::vector<ParameterDescriptor>{
      ParameterDescriptor::continuous(-2.0, 3.0, "x0"),
      ParameterDescriptor::binary("z0"),
      ParameterDescriptor::ordinal(5, "z1"),
      ParameterDescriptor::categorical(4, "z2"),
  });

  {  // encode/discretize round trip over every discrete configuration
    bool ok = true;
    for (const auto& z : enumerate_discrete(space)) {
      const DesignPoint p = assemble_design(space, {0.75}, z);
      const DesignPoint q = discretize(space, one_hot_encode(space, p));
      ok = ok && q.values == p.values;
    }
    check("space round-trip", ok);
  }
  {  // sobol determinism and validity
    const auto a = sobol_init(space, 64, 7);
    const auto b = sobol_init(space, 64, 7);
    bool ok = a.size() == b.size();
    for (std::size_t i = 0; ok && i < a.size(); ++i) {
      ok = a[i].values == b[i].values && is_valid(space, a[i]);
    }
    check("sobol determinism", ok);
  }
  {  // distribution normalization over randomized theta
    Rng rng = make_rng(11);
    bool ok = true;
    for (int rep = 0; rep < 20 && ok; ++rep) {
      std::vector<double> phi(theta_dim(space));
      for (auto& v : phi) v = uniform01(rng);
      phi[1] *= 4.0;  // ordinal slot spans [0, 4]
      const auto tr = transform(space, RawParams{phi, 0.1});
      double total = 0.0;
      for (const auto& z : enumerate_discrete(space)) {
        double p = 1.0;
        for (std::size_t j = 0; j < z.size(); ++j) {
          p *= marginal_pmf(space, tr.theta, j)[static_cast<std::size_t>(z[j])];
        }
        total += p;
      }
      ok = std::abs(total - 1.0) < 1e-9;
    }
    check("p(z|theta) normalization", ok);
  }
  {  // score identity: empirical mean of the score near zero
    Rng rng = make_rng(13);
    std::vector<double> phi(theta_dim(space), 0.45);
    phi[1] = 1.7;
    const auto tr = transform(space, RawParams{phi, 0.1});
    const auto zs = sample(space, tr.theta, 200000, rng);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(theta_dim(space)));
    for (const auto& z : zs) mean += log_prob(space, tr.theta, z).score;
    mean /= static_cast<double>(zs.size());
    check("score identity", mean.cwiseAbs().maxCoeff() < 0.05);
  }
  {  // sampler law: empirical frequencies against the marginal pmf
    Rng rng = make_rng(17);
    std::vector<double> phi = {0.3, 2.6, 0.2, 0.8, 0.5, 0.4};
    const auto tr = transform(space, RawParams{phi, 0.1});
    const auto zs = sample(space, tr.theta, 200000, rng);
    bool ok = true;
    for (std::size_t j = 0; j < space.num_discrete() && ok; ++j) {
      const auto pmf = marginal_pmf(space, tr.theta, j);
      std::vector<double> freq(pmf.size(), 0.0);
      for (const auto& z : zs) freq[static_cast<std::size_t>(z[j])] += 1.0;
      for (std::size_t c = 0; c < pmf.size(); ++c) {
        ok = ok && std::abs(freq[c] / zs.size() - pmf[c]) < 0.01;
      }
    }
    check("sampler law", ok);
  }
  {  // tau limit: point mass and po collapse
    std::vector<double> phi = {0.9, 3.3, 0.1, 0.1, 0.9, 0.1};
    const auto tr = transform(space, RawParams{phi, 0.005});
    const DiscreteAssignment expect = {1.0, 3.0, 2.0};
    bool ok = true;
    for (std::size_t j = 0; j < 3; ++j) {
      const auto pmf = marginal_pmf(space, tr.theta, j);
      ok = ok && pmf[static_cast<std::size_t>(expect[j])] > 0.999;
    }
    check("tau limit", ok);
  }

  std::cout << (failures == 0 ? "selftest passed" : "selftest FAILED") << "\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian optimization over mixed spaces with probabilistic reparameterization"};
  app.require_subcommand(1);

  RunArgs args;
  CLI::App* run = app.add_subcommand("run", "run a BO experiment");
  run->add_option("--problem", args.problem, "problem id");
  run->add_option("--method", args.method,
                  "pr_adam|pr_saa|cont_relax|exact_round_fd|exact_round_ste|enumeration");
  run->add_option("--acqf", args.acqf, "ei|cei|ucb");
  run->add_option("--iters", args.iters, "BO iterations");
  run->add_option("--reps", args.reps, "replications");
  run->add_option("--seed", args.seed, "base seed");
  run->add_option("--mc-samples", args.mc_samples, "MC samples per step");
  run->add_option("--tau", args.tau, "transform temperature");
  run->add_option("--lr", args.lr, "optimizer learning rate");
  run->add_option("--tr", args.tr, "trust region on|off");
  run->add_option("--out", args.out_dir, "output directory");
  run->add_option("--config", args.config_file, "JSON config file");
  run->add_option("--n-init", args.n_init, "Sobol initialization count (0 = auto)");
  run->add_option("--restarts", args.restarts, "acquisition restarts");
  run->add_option("--opt-iters", args.opt_iters, "acquisition optimizer iterations");
  run->add_flag("--trace", args.trace, "stream optimizer trace to trace.jsonl");

  std::string in_dir = "runs";
  bool pool = false;
  CLI::App* regret = app.add_subcommand("regret", "aggregate regret from run files");
  regret->add_option("--in", in_dir, "directory with .jsonl run files")->required();
  regret->add_flag("--pool", pool, "pool the regret reference across methods");

  CLI::App* selftest = app.add_subcommand("selftest", "run the invariant suites");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(args, run);
    if (regret->parsed()) return cmd_regret(in_dir, pool);
    if (selftest->parsed()) return cmd_selftest();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
