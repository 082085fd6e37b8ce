#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mixedbo/acquisition.hpp"
#include "mixedbo/reparam.hpp"
#include "mixedbo/space.hpp"

namespace mixedbo {

enum class AcqOptMethod {
  kPrAdam,
  kPrSaa,
  kContRelax,
  kExactRoundFd,
  kExactRoundSte,
  kEnumeration,
};

const char* method_name(AcqOptMethod method);
std::optional<AcqOptMethod> method_from_name(const std::string& name);

struct TraceRecord {
  int restart = 0;
  int step = 0;
  double po_value = 0.0;
  double grad_norm = 0.0;
};

struct AcqOptimizerConfig {
  AcqOptMethod method = AcqOptMethod::kPrAdam;
  int restarts = 20;
  int max_iterations = 200;
  int mc_samples = 128;
  double learning_rate = 1.0 / 40.0;
  double tau = 0.1;
  int raw_candidates = 1024;
  double boltzmann_temperature = 1.0;
  std::uint64_t seed = 0;
  double fd_step = 0.51;               // exact_round_fd, in relaxed units
  int final_samples_per_restart = 8;   // PR candidate draws per restart
  bool use_sga = false;                // decayed-step SGA instead of Adam (PR)
  std::uint64_t enumeration_cap = 4096;
  int cont_opt_starts = 4;             // enumeration inner optimization
  int cont_opt_iterations = 50;
  std::function<void(const TraceRecord&)> trace;  // optional sink
};

struct CandidateResult {
  DesignPoint point;
  double af_value = 0.0;  // true AF at the discrete point, recomputed
  int restart_index = -1;
  std::vector<double> trajectory;  // per-step objective values of the winner
};

// Active per-parameter bounds (trust region intersection). Continuous bounds
// are in normalized [0,1] units; ordinal bounds are inclusive level indices.
// Binary and categorical parameters are never constrained.
struct BoxSet {
  std::vector<double> cont_lo, cont_hi;  // per continuous parameter
  std::vector<int> ord_lo, ord_hi;       // per discrete parameter (ordinals)

  static BoxSet full(const SearchSpace& space);
};

struct KernelIncompatibleError : std::runtime_error {
  explicit KernelIncompatibleError(const std::string& what) : std::runtime_error(what) {}
};

// Scrambled-Sobol raw candidates scored by the true AF after discretization,
// thinned to cfg.restarts starts by Boltzmann sampling without replacement.
// Returned vectors use the internal optimizer layout: the relaxed layout with
// continuous coordinates normalized to [0,1].
std::vector<std::vector<double>> boltzmann_init(const AcqOracle& af, const SearchSpace& space,
                                                const AcqOptimizerConfig& cfg,
                                                const BoxSet& boxes);

CandidateResult optimize_pr(const AcqOracle& af, const SearchSpace& space,
                            const AcqOptimizerConfig& cfg, const BoxSet& boxes);
CandidateResult optimize_cont_relax(const AcqOracle& af, const SearchSpace& space,
                                    const AcqOptimizerConfig& cfg, const BoxSet& boxes);
CandidateResult optimize_exact_round(const AcqOracle& af, const SearchSpace& space,
                                     const AcqOptimizerConfig& cfg, const BoxSet& boxes);
CandidateResult optimize_exact_round_ste(const AcqOracle& af, const SearchSpace& space,
                                         const AcqOptimizerConfig& cfg, const BoxSet& boxes);
CandidateResult optimize_enumeration(const AcqOracle& af, const SearchSpace& space,
                                     const AcqOptimizerConfig& cfg, const BoxSet& boxes);

// Dispatch on cfg.method; boxes default to the full domain.
CandidateResult optimize_acquisition(const AcqOracle& af, const SearchSpace& space,
                                     const AcqOptimizerConfig& cfg);
CandidateResult optimize_acquisition(const AcqOracle& af, const SearchSpace& space,
                                     const AcqOptimizerConfig& cfg, const BoxSet& boxes);

// Gradient of the exact-round objective at an internal-layout point:
// analytic over continuous coordinates, central finite differences (probes
// discretized, then evaluated) over discrete relaxed coordinates.
Eigen::VectorXd exact_round_fd_gradient(const AcqOracle& af, const SearchSpace& space,
                                        const std::vector<double>& internal,
                                        const BoxSet& boxes, double fd_step);

// Internal/public relaxed conversions (exposed for tests and the trust
// region composition).
std::vector<double> internal_to_relaxed(const SearchSpace& space,
                                        const std::vector<double>& internal);
std::vector<double> relaxed_to_internal(const SearchSpace& space,
                                        const std::vector<double>& relaxed);

}  // namespace mixedbo
